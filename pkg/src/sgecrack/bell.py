"""Bell triangle: areal coordinates and the 18 reduced-quintic shape functions.

Every shape function is a homogeneous quintic in the areal coordinates
(L1, L2, L3).  Coefficients are stored on the 21 quintic monomials, so values
and derivatives at any set of points reduce to small tensor contractions that
vectorize over elements.

Cartesian derivatives follow from the affine map
``d/dx = sum_i (b_i / delta) d/dL_i`` and ``d/dy = sum_i (c_i / delta) d/dL_i``.

The edge-projection constants of the element are

    r_ij = -(b_i b_j + c_i c_j) / (b_i^2 + c_i^2),

which gives ``r_ij + r_ik = 1`` (needed for cubic reproduction) and a
cubic normal slope along every edge (needed for C1 conformity).  Both
properties are pinned by the test-suite.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from itertools import product

import numpy as np

from .errors import ConfigurationError, DegenerateElementError

#: local DOF names per node, in element ordering
NODE_DOFS = ("u", "u_x", "u_y", "u_xx", "u_xy", "u_yy")

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


@dataclass(frozen=True)
class TriangleGeometry:
    nodes: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    delta: float

    @property
    def area(self) -> float:
        return 0.5 * abs(self.delta)

    @property
    def size(self) -> float:
        """Longest edge length."""
        return float(np.sqrt(np.max(self.b ** 2 + self.c ** 2)))


@dataclass(frozen=True)
class ShapeEval:
    """Shape functions at one or more points.

    ``n`` has shape (..., 18), ``dn`` (..., 18, 2) and ``ddn`` (..., 18, 3)
    with second derivatives ordered (xx, xy, yy).
    """

    n: np.ndarray
    dn: np.ndarray
    ddn: np.ndarray


def _coefficients_abc(nodes):
    """a, b, c coefficients for an array of triangles (..., 3, 2)."""
    x = nodes[..., 0]
    y = nodes[..., 1]
    j = [1, 2, 0]
    k = [2, 0, 1]
    a = x[..., j] * y[..., k] - x[..., k] * y[..., j]
    b = y[..., j] - y[..., k]
    c = x[..., k] - x[..., j]
    return a, b, c


def signed_delta(nodes):
    x = nodes[..., 0]
    y = nodes[..., 1]
    return (x[..., 1] - x[..., 0]) * (y[..., 2] - y[..., 0]) - (x[..., 2] - x[..., 0]) * (
        y[..., 1] - y[..., 0]
    )


def triangle_geometry(nodes) -> TriangleGeometry:
    nodes = np.asarray(nodes, dtype=float).reshape(3, 2)
    a, b, c = _coefficients_abc(nodes)
    delta = float(signed_delta(nodes))
    h = float(np.sqrt(np.max(b ** 2 + c ** 2)))
    if h == 0.0 or abs(delta) < 1e-12 * h * h:
        raise DegenerateElementError(f"degenerate triangle {nodes.tolist()} (delta={delta:g})")
    return TriangleGeometry(nodes=nodes, a=a, b=b, c=c, delta=delta)


def areal_coords(g: TriangleGeometry, p) -> np.ndarray:
    """Areal coordinates of point(s) ``p`` (shape (2,) or (n, 2))."""
    p = np.asarray(p, dtype=float)
    return (g.a + np.multiply.outer(p[..., 0], g.b) + np.multiply.outer(p[..., 1], g.c)) / g.delta


def cartesian(g: TriangleGeometry, L) -> np.ndarray:
    return np.asarray(L) @ g.nodes


def edge_constants(b, c):
    """Matrix r[..., i, j] = -(b_i b_j + c_i c_j) / (b_i^2 + c_i^2)."""
    num = b[..., :, None] * b[..., None, :] + c[..., :, None] * c[..., None, :]
    den = (b ** 2 + c ** 2)[..., :, None]
    return -num / den


# ---------------------------------------------------------------------------
# monomial basis

@lru_cache(maxsize=None)
def _exponents():
    return tuple(e for e in product(range(6), repeat=3) if sum(e) == 5)


@lru_cache(maxsize=None)
def _exponent_index():
    return {e: i for i, e in enumerate(_exponents())}


def monomial_tables(L):
    """Values, first and second L-derivatives of the 21 quintic monomials.

    Returns arrays of shape (n, 21), (n, 21, 3), (n, 21, 3, 3).
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    ex = np.array(_exponents())  # (21, 3)
    n = L.shape[0]
    powers = np.ones((n, 3, 6))
    for p in range(1, 6):
        powers[:, :, p] = powers[:, :, p - 1] * L
    def pw(e):
        # L_i^{e_i} for exponents (21, 3), zero for negative exponents
        e = np.asarray(e)
        out = np.ones((n, ex.shape[0]))
        for i in range(3):
            ei = e[:, i]
            vals = powers[:, i, np.clip(ei, 0, 5)]
            vals = np.where(ei[None, :] < 0, 0.0, vals)
            out *= vals
        return out
    m = pw(ex)
    dm = np.empty((n, ex.shape[0], 3))
    ddm = np.empty((n, ex.shape[0], 3, 3))
    for i in range(3):
        ei = ex.copy()
        ei[:, i] -= 1
        dm[:, :, i] = ex[:, i] * pw(ei)
        for j in range(3):
            eij = ei.copy()
            eij[:, j] -= 1
            fac = ex[:, i] * (ex[:, j] - (1 if i == j else 0))
            ddm[:, :, i, j] = fac * pw(eij)
    return m, dm, ddm


def _node_terms(bi, bj, bk, ci, cj, ck, rji, rki):
    """Monomial coefficients of the six functions attached to local node i.

    Keys are exponents (e_i, e_j, e_k).
    """
    h = 0.5
    n1 = {
        (5, 0, 0): 1.0, (4, 1, 0): 5.0, (4, 0, 1): 5.0, (3, 2, 0): 10.0, (3, 0, 2): 10.0,
        (3, 1, 1): 20.0, (2, 1, 2): 30.0 * rji, (2, 2, 1): 30.0 * rki,
    }
    n2 = {
        (4, 1, 0): ck, (4, 0, 1): -cj, (3, 2, 0): 4 * ck, (3, 0, 2): -4 * cj,
        (3, 1, 1): 4 * (ck - cj), (2, 1, 2): -(3 * ci + 15 * rji * cj),
        (2, 2, 1): 3 * ci + 15 * rki * ck,
    }
    n3 = {
        (4, 1, 0): -bk, (4, 0, 1): bj, (3, 2, 0): -4 * bk, (3, 0, 2): 4 * bj,
        (3, 1, 1): 4 * (bj - bk), (2, 1, 2): 3 * bi + 15 * rji * bj,
        (2, 2, 1): -(3 * bi + 15 * rki * bk),
    }
    n4 = {
        (3, 2, 0): h * ck ** 2, (3, 0, 2): h * cj ** 2, (3, 1, 1): -cj * ck,
        (2, 1, 2): ci * cj + 2.5 * rji * cj ** 2, (2, 2, 1): ci * ck + 2.5 * rki * ck ** 2,
    }
    n5 = {
        (3, 2, 0): -bk * ck, (3, 0, 2): -bj * cj, (3, 1, 1): bj * ck + bk * cj,
        (2, 1, 2): -(bi * cj + bj * ci + 5 * rji * bj * cj),
        (2, 2, 1): -(bi * ck + bk * ci + 5 * rki * bk * ck),
    }
    n6 = {
        (3, 2, 0): h * bk ** 2, (3, 0, 2): h * bj ** 2, (3, 1, 1): -bj * bk,
        (2, 1, 2): bi * bj + 2.5 * rji * bj ** 2, (2, 2, 1): bi * bk + 2.5 * rki * bk ** 2,
    }
    return (n1, n2, n3, n4, n5, n6)


def shape_coefficients(b, c):
    """Monomial coefficients of the 18 shape functions, shape (..., 18, 21)."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    r = edge_constants(b, c)
    idx = _exponent_index()
    coef = np.zeros(b.shape[:-1] + (18, 21))
    for node, (i, j, k) in enumerate(_CYCLIC):
        terms = _node_terms(
            b[..., i], b[..., j], b[..., k], c[..., i], c[..., j], c[..., k],
            r[..., j, i], r[..., k, i],
        )
        for f, t in enumerate(terms):
            for (ei, ej, ek), val in t.items():
                e = [0, 0, 0]
                e[i], e[j], e[k] = ei, ej, ek
                coef[..., 6 * node + f, idx[tuple(e)]] = val
    return coef


def cartesian_derivatives(coef, b, c, delta, tables):
    """Shape values and Cartesian derivatives for batched elements.

    ``coef`` (ne, 18, 21); ``b``, ``c`` (ne, 3); ``delta`` (ne,);
    ``tables`` from :func:`monomial_tables` at nq points.
    Returns n (ne, nq, 18), dn (ne, nq, 18, 2), ddn (ne, nq, 18, 3).
    """
    m, dm, ddm = tables
    n = np.einsum("qm,efm->eqf", m, coef)
    dl = np.einsum("qmi,efm->eqfi", dm, coef)
    ddl = np.einsum("qmij,efm->eqfij", ddm, coef)
    gx = b / delta[:, None]
    gy = c / delta[:, None]
    dn = np.stack([
        np.einsum("eqfi,ei->eqf", dl, gx),
        np.einsum("eqfi,ei->eqf", dl, gy),
    ], axis=-1)
    ddn = np.stack([
        np.einsum("eqfij,ei,ej->eqf", ddl, gx, gx),
        np.einsum("eqfij,ei,ej->eqf", ddl, gx, gy),
        np.einsum("eqfij,ei,ej->eqf", ddl, gy, gy),
    ], axis=-1)
    return n, dn, ddn


def shape_eval(g: TriangleGeometry, L) -> ShapeEval:
    """Evaluate the 18 shape functions of one element at areal coordinates ``L``.

    ``L`` may be a single triple or an (n, 3) array; the leading point axis is
    dropped for a single triple.
    """
    L = np.asarray(L, dtype=float)
    single = L.ndim == 1
    tables = monomial_tables(L)
    coef = shape_coefficients(g.b[None], g.c[None])
    n, dn, ddn = cartesian_derivatives(coef, g.b[None], g.c[None], np.array([g.delta]), tables)
    n, dn, ddn = n[0], dn[0], ddn[0]
    if single:
        n, dn, ddn = n[0], dn[0], ddn[0]
    return ShapeEval(n=n, dn=dn, ddn=ddn)


def nodal_dofs_of_field(value, grad, hess):
    """Pack a scalar field's value, gradient and Hessian (xx, xy, yy) into 6 DOFs."""
    return np.array([value, grad[0], grad[1], hess[0], hess[1], hess[2]], dtype=float)


# ---------------------------------------------------------------------------
# quadrature

#: polynomial degree integrated exactly by each tabulated rule
RULE_DEGREE = {13: 7, 25: 10, 30: 11, 37: 13}


@dataclass(frozen=True)
class QuadratureRule:
    """Triangle rule in areal coordinates, weights normalized to unit area.

    Multiply the weights by ``|delta| / 2`` to integrate over a physical
    element.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return len(self.weights)


def parse_rule(text: str, degree: int) -> QuadratureRule:
    """Parse "L1 L2 L3 weight" lines and validate the rule."""
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    try:
        table = np.array(rows, dtype=float)
    except ValueError as exc:
        raise ConfigurationError(f"malformed quadrature table: {exc}") from None
    if table.ndim != 2 or table.shape[1] != 4:
        raise ConfigurationError("quadrature table needs four columns: L1 L2 L3 weight")
    points, weights = table[:, :3], table[:, 3]
    if np.any(weights <= 0.0):
        raise ConfigurationError("quadrature rules with non-positive weights are rejected")
    if np.any(points < 0.0) or np.max(np.abs(points.sum(axis=1) - 1.0)) > 1e-14:
        raise ConfigurationError("quadrature points must be interior areal triples")
    if abs(weights.sum() - 1.0) > 1e-14:
        raise ConfigurationError(f"quadrature weights sum to {weights.sum():.17g}, expected 1")
    return QuadratureRule(points=points, weights=weights, degree=degree)


@lru_cache(maxsize=None)
def quadrature(order: int) -> QuadratureRule:
    """Tabulated symmetric triangle rule with ``order`` points (13, 25, 30 or 37)."""
    try:
        order = int(order)
        degree = RULE_DEGREE[order]
    except (KeyError, TypeError, ValueError):
        raise ConfigurationError(
            f"unsupported quadrature rule {order!r}; choose one of {sorted(RULE_DEGREE)}"
        ) from None
    text = resources.files("sgecrack.data").joinpath(f"tri{order}.txt").read_text()
    rule = parse_rule(text, degree)
    if rule.size != order:
        raise ConfigurationError(f"quadrature table tri{order}.txt has {rule.size} points")
    return rule
