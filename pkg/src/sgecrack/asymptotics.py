"""Leading r^{3/2} crack-tip field of simplified SGE and derived quantities.

The displacement near the tip is

    u = 1/(4 mu) sum_n K_n Q_1n(r, theta),   v = 1/(4 mu) sum_n K_n Q_2n(r, theta)

with (K1, K2) driving mode I and (K3, K4) mode II.  Each ``Q_in`` is
``r^{3/2} f(theta)`` where ``f`` is a short half-angle Fourier series; the
coefficients below are the printed trigonometric products expanded with
``cos(a)cos(b) = (cos(a+b) + cos(a-b)) / 2`` and its sine analogue.

Angles are measured counterclockwise from the crack extension, range
(-pi, pi]; the crack faces are theta = +-pi.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, TipSingularityError
from .material import MaterialParams

POWER = 1.5
_HALF = np.array([0.5, 1.5, 2.5])


def fourier_coefficients(eta: float):
    """Half-angle coefficients of every Q_in.

    Returns ``(cos_coef, sin_coef)`` of shape (2, 4, 3): entry [i, n, k]
    multiplies cos((2k+1) theta / 2) or sin((2k+1) theta / 2).
    """
    cc = np.zeros((2, 4, 3))
    sc = np.zeros((2, 4, 3))
    cc[0, 0] = (-3.0, 1.0 + 2.0 * eta, 0.0)
    cc[0, 1] = (2.0 * eta, -(17.0 + 8.0 * eta) / 6.0, -0.5)
    sc[0, 2] = (-3.0 - 6.0 * eta, 6.5 + 2.0 * eta, 1.5)
    sc[0, 3] = (0.0, 1.0, 0.0)
    sc[1, 0] = (-3.0, 2.0 * eta - 1.0, 0.0)
    sc[1, 1] = (-2.0 * eta, (17.0 + 8.0 * eta) / 6.0, -0.5)
    cc[1, 2] = (3.0 - 6.0 * eta, 6.5 + 6.0 * eta, -1.5)
    cc[1, 3] = (0.0, -1.0, 0.0)
    return cc, sc


def polar_angle(x, y):
    """atan2 with the upper crack face (y = -0.0, x < 0) mapped to +pi."""
    theta = np.arctan2(y, x)
    return np.where(theta <= -np.pi, np.pi, theta)


@dataclass(frozen=True)
class AsymptoticEval:
    """Q functions at one or more points.

    Shapes: ``q`` (..., 2, 4); ``dq`` (..., 2, 4, 2) as (d/dx, d/dy);
    ``ddq`` (..., 2, 4, 3) as (xx, xy, yy).
    """

    q: np.ndarray
    dq: np.ndarray | None = None
    ddq: np.ndarray | None = None


def _angular(theta, eta):
    """f, f', f'' for every Q_in at angles ``theta`` -> (..., 2, 4) each."""
    cc, sc = fourier_coefficients(eta)
    arg = np.multiply.outer(theta, _HALF)  # (..., 3)
    cs = np.cos(arg)[..., None, None, :]
    sn = np.sin(arg)[..., None, None, :]
    f = np.sum(cc * cs + sc * sn, axis=-1)
    fp = np.sum(_HALF * (-cc * sn + sc * cs), axis=-1)
    fpp = -np.sum(_HALF ** 2 * (cc * cs + sc * sn), axis=-1)
    return f, fp, fpp


def q_eval(x, y, eta: float, derivatives: bool = True) -> AsymptoticEval:
    """Evaluate Q_in (and optionally its Cartesian derivatives) at tip offsets (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    theta = polar_angle(x, y)
    f, fp, fpp = _angular(theta, eta)
    rr = r[..., None, None]
    q = rr ** POWER * f
    if not derivatives:
        return AsymptoticEval(q=q)
    if np.any(r == 0.0):
        raise TipSingularityError("derivatives of the asymptotic field are undefined at the tip")
    p = POWER
    ct = np.cos(theta)[..., None, None]
    st = np.sin(theta)[..., None, None]
    # g = r^p f(theta): first derivatives carry r^{p-1}, second r^{p-2}
    fx = p * f * ct - fp * st
    fy = p * f * st + fp * ct
    fxp = (p - 1.0) * fp * ct - (p * f + fpp) * st
    fyp = (p - 1.0) * fp * st + (p * f + fpp) * ct
    r1 = rr ** (p - 1.0)
    r2 = rr ** (p - 2.0)
    dq = np.stack([r1 * fx, r1 * fy], axis=-1)
    ddq = np.stack([
        r2 * ((p - 1.0) * fx * ct - fxp * st),
        r2 * ((p - 1.0) * fx * st + fxp * ct),
        r2 * ((p - 1.0) * fy * st + fyp * ct),
    ], axis=-1)
    return AsymptoticEval(q=q, dq=dq, ddq=ddq)


def displacement(x, y, k, m: MaterialParams):
    """Cartesian (u, v) of the asymptotic field for amplitudes ``k``."""
    q = q_eval(x, y, m.eta, derivatives=False).q
    uv = q @ np.asarray(k, dtype=float) / (4.0 * m.mu)
    return uv[..., 0], uv[..., 1]


def polar_asymptotic(mode: str, r, theta, k, m: MaterialParams, part: str = "total"):
    """Polar components (u_r, u_theta) split into classical and gradient parts.

    ``mode`` is "I" (uses K1, K2) or "II" (uses K3, K4); ``part`` selects
    "classical", "gradient" or "total".
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(theta, dtype=float)
    k = np.asarray(k, dtype=float)
    eta = m.eta
    s = r ** POWER / (4.0 * m.mu)
    c1, c3, c5 = np.cos(t / 2), np.cos(1.5 * t), np.cos(2.5 * t)
    s1, s3, s5 = np.sin(t / 2), np.sin(1.5 * t), np.sin(2.5 * t)
    if mode == "I":
        k1, k2 = k[0], k[1]
        cr = k1 * ((2 * eta - 3) * c1 + c5)
        ct = k1 * ((2 * eta + 3) * s1 - s5)
        gr = k2 * ((4 * eta - 1) / 2 * c3 - (8 * eta + 17) / 6 * c5)
        gt = k2 * (-(4 * eta + 1) / 2 * s3 + (8 * eta + 17) / 6 * s5)
    elif mode == "II":
        k3, k4 = k[2], k[3]
        cr = k3 * ((3 - 2 * eta) * s1 - 5 * s5)
        ct = k3 * ((3 + 2 * eta) * c1 - 5 * c5)
        gr = k4 * s1 + k3 * (1.5 * (1 - 4 * eta) * s3 + (23 + 8 * eta) / 2 * s5)
        gt = -k4 * c1 - k3 * (1.5 * (1 + 4 * eta) * c3 - (23 + 8 * eta) / 2 * c5)
    else:
        raise ParameterError(f"mode must be 'I' or 'II', got {mode!r}")
    if part == "classical":
        return s * cr, s * ct
    if part == "gradient":
        return s * gr, s * gt
    if part == "total":
        return s * (cr + gr), s * (ct + gt)
    raise ParameterError(f"unknown part {part!r}")


def polar_to_cartesian(ur, ut, theta):
    c, s = np.cos(theta), np.sin(theta)
    return ur * c - ut * s, ur * s + ut * c


def crack_face_opening(x, k, m: MaterialParams):
    """Normal displacement of the upper crack face (theta = pi) at tip offset x < 0."""
    return -(np.abs(x) ** POWER) / (2.0 * m.mu) * (1.0 + m.eta) * (k[0] + 5.0 / 3.0 * k[1])


# conversion to and from the amplitude convention of integral-transform solutions ----

def mode1_from_transform_convention(a1, a2, eta):
    return a1, 6.0 * (a1 - a2) / (17.0 + 8.0 * eta)


def mode1_to_transform_convention(k1, k2, eta):
    return k1, k1 - k2 * (17.0 + 8.0 * eta) / 6.0


def mode2_from_transform_convention(b1, b2, eta):
    k3 = 2.0 * b2 / (13.0 + 8.0 * eta)
    return k3, b1 - k3 * (3.0 - 2.0 * eta)


def mode2_to_transform_convention(k3, k4, eta):
    b2 = k3 * (13.0 + 8.0 * eta) / 2.0
    return k4 + k3 * (3.0 - 2.0 * eta), b2


# energy release ---------------------------------------------------------------

def j_integral(k, m: MaterialParams):
    """Energy release rates (J_I, J_II) from the four amplitudes."""
    eta = m.eta
    if eta <= 1.0:
        raise ParameterError(f"J_II requires eta > 1 (nu < 0.5), got eta={eta}")
    k1, k2, k3, k4 = (float(v) for v in k)
    pref = (1.0 + eta) / (8.0 * m.mu) * np.pi * m.ell ** 2
    j1 = pref * ((3.0 * k1 + k2) ** 2 + 8.0 * k2 ** 2 * (eta + 2.0))
    j2 = pref * (72.0 * k3 ** 2 * (eta + 2.0) + 9.0 * k4 ** 2 / (4.0 * (eta ** 2 - 1.0)))
    return j1, j2


def classical_reference_j(m: MaterialParams, t: float, d_min: float) -> float:
    """J0 = K0^2 (1 + eta) / (8 mu) with K0 = t sqrt(pi d_min)."""
    if t <= 0.0 or d_min <= 0.0:
        raise ParameterError("load and reference crack length must be positive")
    k0 = t * np.sqrt(np.pi * d_min)
    return k0 ** 2 * m.plane_strain_compliance


def normalized_j(J, m: MaterialParams, t: float, d_min: float):
    return J / classical_reference_j(m, t, d_min)
