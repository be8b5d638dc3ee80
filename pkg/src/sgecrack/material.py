"""Isotropic material data and constitutive matrices of simplified SGE.

Voigt conventions used throughout the package::

    strain        = (e11, e22, 2 e12)
    strain grad.  = (e11,1, e11,2, e22,1, e22,2, 2 e12,1, 2 e12,2)
    cauchy stress = (t11, t22, t12)
    double stress = (m111, m112, m221, m222, m121, m122)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class MaterialParams:
    E: float
    nu: float
    ell: float
    lam: float
    mu: float
    eta: float

    @property
    def plane_strain_compliance(self) -> float:
        """(1 + eta) / (8 mu), equal to (1 - nu^2) / E."""
        return (1.0 + self.eta) / (8.0 * self.mu)


@dataclass(frozen=True)
class ConstitutiveMatrices:
    c: np.ndarray
    a: np.ndarray


def make_material(E: float, nu: float, ell: float) -> MaterialParams:
    """Build plane-strain material parameters from E, nu and the length scale."""
    E, nu, ell = float(E), float(nu), float(ell)
    if not np.isfinite(E) or E <= 0.0:
        raise ParameterError(f"Young's modulus must be positive, got {E}")
    if not np.isfinite(nu) or nu < 0.0 or nu >= 0.5:
        raise ParameterError(f"Poisson ratio must satisfy 0 <= nu < 0.5, got {nu}")
    if not np.isfinite(ell) or ell < 0.0:
        raise ParameterError(f"length scale must be non-negative, got {ell}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return MaterialParams(E=E, nu=nu, ell=ell, lam=lam, mu=mu, eta=3.0 - 4.0 * nu)


def constitutive_matrices(m: MaterialParams) -> ConstitutiveMatrices:
    lam, mu = m.lam, m.mu
    c = np.array([
        [lam + 2 * mu, lam, 0.0],
        [lam, lam + 2 * mu, 0.0],
        [0.0, 0.0, mu],
    ])
    a = np.zeros((6, 6))
    # (e11,k), (e22,k) couple like the normal block of c; 2 e12,k like the shear term
    a[np.ix_([0, 2], [0, 2])] = c[:2, :2]
    a[np.ix_([1, 3], [1, 3])] = c[:2, :2]
    a[4, 4] = mu
    a[5, 5] = mu
    return ConstitutiveMatrices(c=c, a=m.ell ** 2 * a)
