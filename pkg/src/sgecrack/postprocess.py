"""Fields, profiles and scalar results recovered from a solved case."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .asymptotics import j_integral, normalized_j
from .assembly import DOF_OFFSET, Solution, element_tables
from .bell import _coefficients_abc, signed_delta
from .enrichment import nodal_q, qstar_batch
from .errors import LocationError
from .material import constitutive_matrices

LOCATION_TOL = 1e-12


@dataclass(frozen=True)
class FieldSample:
    """Displacement, strain and stresses at one point.

    Voigt orders: strain (e11, e22, 2 e12), stress (t11, t22, t12), double
    stress (m111, m112, m221, m222, m121, m122).
    """

    point: tuple
    u: float
    v: float
    strain: np.ndarray
    stress: np.ndarray
    strain_gradient: np.ndarray
    double_stress: np.ndarray


@dataclass
class CaseSummary:
    mode: str
    k: list
    j: float
    j_normalized: float
    kt: float
    residual_norm: float
    out_of_balance: float
    equilibrium_error: float
    symmetry_error: float
    energy: float
    enrichment_jump: float = 0.0
    mesh: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# point location

def locate(mesh, point, tol: float = LOCATION_TOL):
    """Element containing ``point`` and its areal coordinates.

    All elements are tested; on shared edges the lowest element id wins.
    """
    p = np.asarray(point, dtype=float)
    nodes_e = mesh.nodes[mesh.elements]
    a, b, c = _coefficients_abc(nodes_e)
    delta = signed_delta(nodes_e)
    L = (a + b * p[0] + c * p[1]) / delta[:, None]
    inside = np.all((L >= -tol) & (L <= 1.0 + tol), axis=1)
    hits = np.flatnonzero(inside)
    if len(hits) == 0:
        raise LocationError(f"point {p.tolist()} lies outside the mesh")
    e = int(hits[0])
    Le = np.clip(L[e], 0.0, 1.0)
    return e, Le / Le.sum()


def _element_vector(sol: Solution, e: int) -> np.ndarray:
    nodes = sol.mesh.elements[e]
    return np.concatenate([sol.node_values(int(n)) for n in nodes])


def _derivatives(sol: Solution, e: int, L: np.ndarray):
    """u, v with gradients and Hessians at areal points ``L`` (nq, 3) of element ``e``."""
    mesh, m = sol.mesh, sol.material
    nodes_e = mesh.nodes[mesh.elements[e]][None]
    t = element_tables(nodes_e, L)
    ue = _element_vector(sol, e).reshape(3, 2, 6)
    cu, cv = ue[:, 0].ravel(), ue[:, 1].ravel()
    val = np.stack([t.n[0] @ cu, t.n[0] @ cv], axis=-1)
    grad = np.stack([np.einsum("qfd,f->qd", t.dn[0], cu), np.einsum("qfd,f->qd", t.dn[0], cv)], axis=1)
    hess = np.stack([np.einsum("qfd,f->qd", t.ddn[0], cu), np.einsum("qfd,f->qd", t.ddn[0], cv)], axis=1)
    if sol.enrich and e in mesh.enriched:
        tip = mesh.nodes[mesh.tip_node]
        rel = t.points[0] - tip
        at_tip = np.hypot(rel[:, 0], rel[:, 1]) <= 1e-12 * np.ptp(nodes_e[0], axis=0).max()
        safe = np.where(at_tip[:, None], t.points[0] + 1.0, t.points[0])[None]
        qn, dqn = nodal_q(nodes_e, tip, m.eta)
        ev = qstar_batch(safe, t.n, t.dn, t.ddn, qn, dqn, tip, m.eta)
        k = sol.amplitudes / (4.0 * m.mu)
        qv = np.einsum("qin,n->qi", ev.qstar[0], k)
        qg = np.einsum("qind,n->qid", ev.dqstar[0], k)
        qh = np.einsum("qind,n->qid", ev.ddqstar[0], k)
        # Q* and its gradient vanish at the tip; its Hessian is singular there
        qv[at_tip] = 0.0
        qg[at_tip] = 0.0
        qh[at_tip] = np.where(np.any(k != 0.0), np.nan, 0.0)
        val, grad, hess = val + qv, grad + qg, hess + qh
    return t.points[0], val, grad, hess


def _sample(sol: Solution, point, val, grad, hess) -> FieldSample:
    cm = constitutive_matrices(sol.material)
    strain = np.array([grad[0, 0], grad[1, 1], grad[0, 1] + grad[1, 0]])
    kappa = np.array([
        hess[0, 0], hess[0, 1], hess[1, 1], hess[1, 2], hess[0, 1] + hess[1, 0], hess[0, 2] + hess[1, 1],
    ])
    return FieldSample(
        point=tuple(float(x) for x in point), u=float(val[0]), v=float(val[1]),
        strain=strain, stress=cm.c @ strain, strain_gradient=kappa, double_stress=cm.a @ kappa,
    )


def evaluate(sol: Solution, point) -> FieldSample:
    """Field sample at a point of the quarter domain.

    At the crack tip the enrichment adds nothing to displacement and strain,
    while its second derivatives diverge; the strain gradient and double
    stress are reported as NaN there whenever an amplitude is nonzero.
    """
    e, L = locate(sol.mesh, point)
    _, val, grad, hess = _derivatives(sol, e, L[None])
    return _sample(sol, point, val[0], grad[0], hess[0])


def evaluate_many(sol: Solution, points) -> list[FieldSample]:
    return [evaluate(sol, p) for p in np.asarray(points, dtype=float)]


# ---------------------------------------------------------------------------
# scalar results

def tip_stress(sol: Solution) -> np.ndarray:
    """Cauchy stress (t11, t22, t12) at the tip from its nodal first-derivative DOFs."""
    dof = sol.node_values(sol.mesh.tip_node)
    ux, uy = dof[DOF_OFFSET["u_x"]], dof[DOF_OFFSET["u_y"]]
    vx, vy = dof[DOF_OFFSET["v_x"]], dof[DOF_OFFSET["v_y"]]
    return constitutive_matrices(sol.material).c @ np.array([ux, vy, uy + vx])


def tip_kt(sol: Solution, mode: str | None = None) -> float:
    """Tip stress concentration: t22 / t in mode I, t12 / t in mode II."""
    mode = mode or sol.mode
    tau = tip_stress(sol)
    return float((tau[1] if mode == "I" else tau[2]) / sol.t)


def energy_release(sol: Solution) -> float:
    j1, j2 = j_integral(sol.amplitudes, sol.material)
    return float(j1 + j2)


def enrichment_jump(sol: Solution, n_points: int = 7) -> float:
    """Displacement jump across the outer edges of the enriched fan.

    The fan elements add ``K Q* / (4 mu)`` to the shared Bell trace, so the
    field is continuous across these edges only at the nodes.  The returned
    value is the largest jump magnitude divided by the largest displacement
    magnitude on the same edges (zero without enrichment).
    """
    mesh, m = sol.mesh, sol.material
    if not (sol.enrich and mesh.enriched):
        return 0.0
    tip = mesh.nodes[mesh.tip_node]
    s = np.linspace(0.0, 1.0, n_points + 2)[1:-1]
    worst_jump, worst_u = 0.0, 0.0
    for e in sorted(mesh.enriched):
        conn = mesh.elements[e]
        local = [i for i in range(3) if conn[i] != mesh.tip_node]
        L = np.zeros((len(s), 3))
        L[:, local[0]] = 1.0 - s
        L[:, local[1]] = s
        nodes_e = mesh.nodes[conn][None]
        t = element_tables(nodes_e, L)
        qn, dqn = nodal_q(nodes_e, tip, m.eta)
        ev = qstar_batch(t.points, t.n, t.dn, t.ddn, qn, dqn, tip, m.eta)
        jump = np.einsum("qin,n->qi", ev.qstar[0], sol.amplitudes / (4.0 * m.mu))
        _, val, _, _ = _derivatives(sol, e, L)
        worst_jump = max(worst_jump, float(np.max(np.hypot(jump[:, 0], jump[:, 1]))))
        worst_u = max(worst_u, float(np.max(np.hypot(val[:, 0], val[:, 1]))))
    return worst_jump / worst_u if worst_u > 0.0 else 0.0


def summarize(sol: Solution, d_min: float) -> CaseSummary:
    """Scalar results of a case; ``d_min`` sets the reference J0."""
    j = energy_release(sol)
    return CaseSummary(
        mode=sol.mode,
        k=[float(x) for x in sol.amplitudes],
        j=j,
        j_normalized=float(normalized_j(j, sol.material, sol.t, d_min)),
        kt=tip_kt(sol),
        residual_norm=float(sol.residual_norm),
        out_of_balance=float(sol.out_of_balance),
        equilibrium_error=float(sol.equilibrium_error),
        symmetry_error=float(sol.symmetry_error),
        energy=float(sol.energy),
        enrichment_jump=enrichment_jump(sol),
        mesh=sol.mesh.statistics(),
    )


# ---------------------------------------------------------------------------
# profiles

def crack_opening_profile(sol: Solution, xs) -> list[tuple[float, float]]:
    """Normal displacement v(x) along the crack face (x < 0, y = 0)."""
    out = []
    for x in np.asarray(xs, dtype=float):
        if not (x < 0.0):
            raise LocationError(f"crack-face samples need x < 0, got {x}")
        out.append((float(x), evaluate(sol, (x, 0.0)).v))
    return out


def bottom_line_profile(sol: Solution, xs) -> list[FieldSample]:
    """Samples along y = 0 (crack face and ligament)."""
    return [evaluate(sol, (float(x), 0.0)) for x in np.asarray(xs, dtype=float)]


def default_profile_points(d: float, L: float, n: int = 201) -> np.ndarray:
    """Samples on y = 0 clustered towards the tip from both sides, tip excluded."""
    s = np.linspace(0.0, 1.0, n // 2 + 1)[1:] ** 2
    left = -d * s[::-1]
    right = (L - d) * s
    return np.concatenate([left, right])


PROFILE_COLUMNS = ("x", "u", "v", "tau11", "tau22", "tau12")


def write_profile_csv(path, samples: list[FieldSample], t: float) -> Path:
    """Write samples along a line; stresses are normalized by the load ``t``.

    Columns: x [m], u [m], v [m], tau11/t, tau22/t, tau12/t.
    """
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_COLUMNS)
        for s in samples:
            w.writerow([repr(s.point[0]), repr(s.u), repr(s.v)] + [repr(float(x / t)) for x in s.stress])
    tmp.replace(path)
    return path
