"""Plane-strain crack solver for simplified strain gradient elasticity.

The solver discretizes a quarter of a centre-cracked square plate with C1
Bell triangles, optionally enriched around the crack tip with the r^{3/2}
asymptotic field, and reports amplitude factors, energy release and the tip
stress concentration.
"""
from .errors import SGECrackError

__version__ = "0.1.0"

__all__ = ["SGECrackError", "__version__"]
