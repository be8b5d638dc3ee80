"""Exception hierarchy shared by all solver stages."""


class SGECrackError(Exception):
    """Base class for all errors raised by the package."""


class ParameterError(SGECrackError, ValueError):
    """Material or geometric parameter outside its admissible range."""


class ConfigurationError(SGECrackError, ValueError):
    """Invalid run configuration, quadrature id or missing boundary tag."""


class DegenerateElementError(SGECrackError):
    """Triangle with (nearly) zero area."""


class TipSingularityError(SGECrackError):
    """Derivative of the asymptotic field requested at the crack tip."""


class EnrichmentLayoutError(SGECrackError):
    """Enriched element does not have the crack tip as one of its nodes."""


class MeshGenerationError(SGECrackError):
    """Domain description cannot be meshed."""


class LocationError(SGECrackError):
    """Point does not lie inside any element of the mesh."""


class SolverError(SGECrackError):
    """Factorization failed or the constrained system is singular."""
