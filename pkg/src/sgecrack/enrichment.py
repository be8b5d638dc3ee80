"""Crack-tip enrichment that keeps the Bell interpolation C1 at element nodes.

Inside a tip element the asymptotic functions ``Q_in`` are corrected by their
nodal interpolant of value and first derivatives,

    Q*_in = Q_in - sum_j [ Q_in(x_j) N_j^(0) + Q_in,x(x_j) N_j^(1) + Q_in,y(x_j) N_j^(2) ],

where ``N^(0) = {N1, N7, N13}`` carry the nodal values, ``N^(1) = {N2, N8, N14}``
the nodal x-derivatives and ``N^(2) = {N3, N9, N15}`` the nodal
y-derivatives.  ``Q*`` and its gradient therefore vanish at every node and the
four amplitudes never disturb the nodal degrees of freedom.

The displacement of an enriched element is

    u = sum_i u_i N_i + 1/(4 mu) sum_n K_n Q*_1n,   v likewise with Q*_2n,

so the amplitudes carry the same units as in the closed-form tip field.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asymptotics import q_eval
from .bell import ShapeEval, TriangleGeometry, shape_eval
from .errors import EnrichmentLayoutError
from .material import MaterialParams

#: local shape-function indices that carry value, d/dx and d/dy at each node
SUBSET_VALUE = (0, 6, 12)
SUBSET_DX = (1, 7, 13)
SUBSET_DY = (2, 8, 14)


@dataclass(frozen=True)
class EnrichedEval:
    """Q* at one or more points of one element.

    Shapes: ``qstar`` (..., 2, 4), ``dqstar`` (..., 2, 4, 2) and ``ddqstar``
    (..., 2, 4, 3) with second derivatives ordered (xx, xy, yy).
    """

    qstar: np.ndarray
    dqstar: np.ndarray
    ddqstar: np.ndarray


@dataclass(frozen=True)
class FieldEval:
    """Displacement (u, v) with gradient and Hessian at one or more points.

    Shapes: ``value`` (..., 2), ``grad`` (..., 2, 2) indexed [component,
    direction], ``hess`` (..., 2, 3) ordered (xx, xy, yy).
    """

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


def tip_local_index(nodes: np.ndarray, tip) -> int:
    """Index of the element node that coincides with the tip."""
    nodes = np.asarray(nodes, dtype=float)
    tip = np.asarray(tip, dtype=float)
    h = np.max(np.linalg.norm(nodes - np.roll(nodes, 1, axis=0), axis=1))
    dist = np.linalg.norm(nodes - tip, axis=1)
    hit = np.flatnonzero(dist <= 1e-12 * h)
    if len(hit) != 1:
        raise EnrichmentLayoutError(f"crack tip {tip.tolist()} is not a node of element {nodes.tolist()}")
    return int(hit[0])


def nodal_q(nodes, tip, eta: float):
    """Q_in and its gradient at the three element nodes, zero at the tip node.

    Returns ``(q, dq)`` of shapes (..., 3, 2, 4) and (..., 3, 2, 4, 2) for
    ``nodes`` of shape (..., 3, 2).
    """
    nodes = np.asarray(nodes, dtype=float)
    tip = np.asarray(tip, dtype=float)
    rel = nodes - tip
    r = np.hypot(rel[..., 0], rel[..., 1])
    at_tip = r <= 1e-12 * np.max(r, axis=-1, keepdims=True)
    # evaluate at a harmless dummy offset on tip nodes, then zero them out
    safe = np.where(at_tip[..., None], 1.0, rel)
    ev = q_eval(safe[..., 0], safe[..., 1], eta)
    q = np.where(at_tip[..., None, None], 0.0, ev.q)
    dq = np.where(at_tip[..., None, None, None], 0.0, ev.dq)
    return q, dq


def qstar_batch(points, n, dn, ddn, qn, dqn, tip, eta: float) -> EnrichedEval:
    """Vectorized Q* for many elements and points.

    Parameters
    ----------
    points : (ne, nq, 2) physical points, none at the tip.
    n, dn, ddn : shape functions at the points, (ne, nq, 18[, 2 | 3]).
    qn, dqn : output of :func:`nodal_q` for the elements, (ne, 3, 2, 4[, 2]).
    tip : crack-tip coordinates.
    """
    rel = np.asarray(points, dtype=float) - np.asarray(tip, dtype=float)
    ev = q_eval(rel[..., 0], rel[..., 1], eta)
    v0 = list(SUBSET_VALUE)
    vx = list(SUBSET_DX)
    vy = list(SUBSET_DY)
    # interpolant I = sum_j q_j N^(0)_j + q_x,j N^(1)_j + q_y,j N^(2)_j
    def interp(shape):
        # shape: (ne, nq, 18, ...) -> (ne, nq, 2, 4, ...)
        s0 = shape[:, :, v0]
        sx = shape[:, :, vx]
        sy = shape[:, :, vy]
        out = np.einsum("ejin,eqj...->eqin...", qn, s0)
        out = out + np.einsum("ejin,eqj...->eqin...", dqn[..., 0], sx)
        out = out + np.einsum("ejin,eqj...->eqin...", dqn[..., 1], sy)
        return out
    qstar = ev.q - interp(n)
    dqstar = ev.dq - interp(dn)
    ddqstar = ev.ddq - interp(ddn)
    return EnrichedEval(qstar=qstar, dqstar=dqstar, ddqstar=ddqstar)


def enriched_eval(g: TriangleGeometry, tip, L, eta: float) -> EnrichedEval:
    """Q* and its derivatives at areal coordinates ``L`` of one tip element.

    At an element node the exact nodal identities are returned: Q* and its
    gradient are zero there and the Hessian is the Hessian of Q minus that of
    the interpolant (undefined at the tip itself, where it is reported as NaN).
    """
    tip_local_index(g.nodes, tip)
    L = np.asarray(L, dtype=float)
    single = L.ndim == 1
    L2 = np.atleast_2d(L)
    s = shape_eval(g, L2)
    pts = L2 @ g.nodes
    qn, dqn = nodal_q(g.nodes[None], tip, eta)
    rel = pts - np.asarray(tip, dtype=float)
    at_tip = np.hypot(rel[:, 0], rel[:, 1]) <= 1e-12 * g.size
    safe = np.where(at_tip[:, None], pts + g.size, pts)
    out = qstar_batch(safe[None], s.n[None], s.dn[None], s.ddn[None], qn, dqn, tip, eta)
    qstar, dqstar, ddqstar = out.qstar[0], out.dqstar[0], out.ddqstar[0]
    if np.any(at_tip):
        # Q and grad Q vanish at the tip; the interpolant does too (all nodal data are
        # either zero or multiplied by shape functions that vanish with their gradient)
        qstar[at_tip] = 0.0
        dqstar[at_tip] = 0.0
        ddqstar[at_tip] = np.nan
    if single:
        qstar, dqstar, ddqstar = qstar[0], dqstar[0], ddqstar[0]
    return EnrichedEval(qstar=qstar, dqstar=dqstar, ddqstar=ddqstar)


def _split_nodal(nodal):
    """Element DOF vector (36,) -> u and v coefficient vectors (18,) each."""
    nodal = np.asarray(nodal, dtype=float).reshape(3, 2, 6)
    return nodal[:, 0].reshape(18), nodal[:, 1].reshape(18)


def enriched_interpolation(nodal, k, e: EnrichedEval | None, s: ShapeEval, m: MaterialParams) -> FieldEval:
    """Displacement and derivatives from element DOFs plus amplitudes.

    ``nodal`` is the 36-entry element vector ordered node by node as
    (u, u_x, u_y, u_xx, u_xy, u_yy, v, ..., v_yy); ``e`` may be ``None`` for a
    conventional element.
    """
    cu, cv = _split_nodal(nodal)
    value = np.stack([s.n @ cu, s.n @ cv], axis=-1)
    grad = np.stack([np.einsum("...fd,f->...d", s.dn, cu), np.einsum("...fd,f->...d", s.dn, cv)], axis=-2)
    hess = np.stack([np.einsum("...fd,f->...d", s.ddn, cu), np.einsum("...fd,f->...d", s.ddn, cv)], axis=-2)
    if e is not None:
        k = np.asarray(k, dtype=float) / (4.0 * m.mu)
        value = value + np.einsum("...in,n->...i", e.qstar, k)
        grad = grad + np.einsum("...ind,n->...id", e.dqstar, k)
        hess = hess + np.einsum("...ind,n->...id", e.ddqstar, k)
    return FieldEval(value=value, grad=grad, hess=hess)
