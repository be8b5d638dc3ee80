"""Global system: DOF numbering, element stiffness, loads, constraints and solve.

Each node carries 12 DOFs ordered ``u, u_x, u_y, u_xx, u_xy, u_yy, v, v_x,
v_y, v_xx, v_xy, v_yy``; the four amplitudes ``K1..K4`` are appended once at
the end of the global vector and shared by all enriched elements.

Strain and strain-gradient operators (Voigt order as in :mod:`material`)::

    B1 u = (u_x, v_y, u_y + v_x)
    B2 u = (u_xx, u_xy, v_xy, v_yy, u_xy + v_xx, u_yy + v_xy)
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bell import (
    QuadratureRule,
    TriangleGeometry,
    _coefficients_abc,
    cartesian_derivatives,
    monomial_tables,
    shape_coefficients,
    signed_delta,
)
from .enrichment import nodal_q, qstar_batch
from .errors import ConfigurationError, SolverError
from .material import MaterialParams, constitutive_matrices
from .mesh import Mesh

NODE_NDOF = 12
N_AMPLITUDES = 4
GAUSS_EDGE_POINTS = 5
REFINEMENT_STEPS = 6

#: constrained local DOF offsets per boundary tag and mode
SYMMETRY_CONDITIONS = {
    "I": {
        "left_symmetry": ("u", "u_y", "u_yy", "v_x", "v_xy"),
        "ligament": ("v", "v_x", "v_xx", "u_y", "u_xy"),
    },
    "II": {
        "left_symmetry": ("v", "v_y", "v_yy", "u_x", "u_xy"),
        "ligament": ("u", "u_x", "u_xx", "v_y", "v_xy"),
    },
}
DOF_NAMES = ("u", "u_x", "u_y", "u_xx", "u_xy", "u_yy", "v", "v_x", "v_y", "v_xx", "v_xy", "v_yy")
DOF_OFFSET = {name: i for i, name in enumerate(DOF_NAMES)}
#: amplitudes that stay active for each mode
ACTIVE_AMPLITUDES = {"I": (0, 1), "II": (2, 3)}


@dataclass(frozen=True)
class DofMap:
    """Global DOF numbering for a mesh."""

    n_nodes: int

    @property
    def total(self) -> int:
        return NODE_NDOF * self.n_nodes + N_AMPLITUDES

    @property
    def amplitudes(self) -> np.ndarray:
        return NODE_NDOF * self.n_nodes + np.arange(N_AMPLITUDES)

    def node_dof(self, node, name: str):
        return NODE_NDOF * np.asarray(node) + DOF_OFFSET[name]

    def element_dofs(self, elements: np.ndarray) -> np.ndarray:
        """(ne, 36) global indices in element order (node by node, u then v)."""
        return (NODE_NDOF * elements[:, :, None] + np.arange(NODE_NDOF)).reshape(len(elements), 36)


def _column(f: np.ndarray, comp: int) -> np.ndarray:
    """Element column of shape function ``f`` (0..17) for component 0 (u) or 1 (v)."""
    return NODE_NDOF * (f // 6) + 6 * comp + f % 6


_F = np.arange(18)
_COL_U = _column(_F, 0)
_COL_V = _column(_F, 1)


@dataclass(frozen=True)
class ElementTables:
    """Shape data at quadrature points of a batch of elements."""

    points: np.ndarray  # (ne, nq, 2)
    n: np.ndarray  # (ne, nq, 18)
    dn: np.ndarray  # (ne, nq, 18, 2)
    ddn: np.ndarray  # (ne, nq, 18, 3)
    weights: np.ndarray  # (ne, nq) physical weights


def element_tables(nodes_e: np.ndarray, L: np.ndarray, weights: np.ndarray | None = None) -> ElementTables:
    """Shape functions of elements ``nodes_e`` (ne, 3, 2) at areal points ``L`` (nq, 3)."""
    nodes_e = np.asarray(nodes_e, dtype=float)
    _, b, c = _coefficients_abc(nodes_e)
    delta = signed_delta(nodes_e)
    coef = shape_coefficients(b, c)
    n, dn, ddn = cartesian_derivatives(coef, b, c, delta, monomial_tables(L))
    points = np.einsum("qi,eid->eqd", L, nodes_e)
    w = np.zeros(points.shape[:2]) if weights is None else 0.5 * np.abs(delta)[:, None] * weights[None, :]
    return ElementTables(points=points, n=n, dn=dn, ddn=ddn, weights=w)


def b_matrices(dn, ddn, dq=None, ddq=None, mu: float = 1.0):
    """Strain (3 x ncol) and strain-gradient (6 x ncol) operators, batched.

    ``dq``/``ddq`` are the enrichment derivatives (..., 2, 4, 2|3); when given,
    four amplitude columns scaled by 1/(4 mu) are appended.
    """
    lead = dn.shape[:-2]
    ncol = 36 + (N_AMPLITUDES if dq is not None else 0)
    b1 = np.zeros(lead + (3, ncol))
    b2 = np.zeros(lead + (6, ncol))
    nx, ny = dn[..., 0], dn[..., 1]
    hxx, hxy, hyy = ddn[..., 0], ddn[..., 1], ddn[..., 2]
    b1[..., 0, _COL_U] = nx
    b1[..., 1, _COL_V] = ny
    b1[..., 2, _COL_U] = ny
    b1[..., 2, _COL_V] = nx
    b2[..., 0, _COL_U] = hxx
    b2[..., 1, _COL_U] = hxy
    b2[..., 2, _COL_V] = hxy
    b2[..., 3, _COL_V] = hyy
    b2[..., 4, _COL_U] = hxy
    b2[..., 4, _COL_V] = hxx
    b2[..., 5, _COL_U] = hyy
    b2[..., 5, _COL_V] = hxy
    if dq is not None:
        s = 1.0 / (4.0 * mu)
        qx_u, qy_u = dq[..., 0, :, 0] * s, dq[..., 0, :, 1] * s
        qx_v, qy_v = dq[..., 1, :, 0] * s, dq[..., 1, :, 1] * s
        b1[..., 0, 36:] = qx_u
        b1[..., 1, 36:] = qy_v
        b1[..., 2, 36:] = qy_u + qx_v
        hu = ddq[..., 0, :, :] * s
        hv = ddq[..., 1, :, :] * s
        b2[..., 0, 36:] = hu[..., 0]
        b2[..., 1, 36:] = hu[..., 1]
        b2[..., 2, 36:] = hv[..., 1]
        b2[..., 3, 36:] = hv[..., 2]
        b2[..., 4, 36:] = hu[..., 1] + hv[..., 0]
        b2[..., 5, 36:] = hu[..., 2] + hv[..., 1]
    return b1, b2


def _stiffness_from_b(b1, b2, w, m: MaterialParams):
    cm = constitutive_matrices(m)
    k = np.einsum("eqim,ij,eqjn,eq->emn", b1, cm.c, b1, w, optimize=True)
    k += np.einsum("eqim,ij,eqjn,eq->emn", b2, cm.a, b2, w, optimize=True)
    return k


def element_stiffness_batch(nodes_e, m: MaterialParams, rule: QuadratureRule, tip=None):
    """Stiffness matrices of a batch of elements, (ne, 36, 36) or (ne, 40, 40) if ``tip`` is given."""
    t = element_tables(nodes_e, rule.points, rule.weights)
    if tip is None:
        b1, b2 = b_matrices(t.dn, t.ddn)
    else:
        qn, dqn = nodal_q(nodes_e, tip, m.eta)
        e = qstar_batch(t.points, t.n, t.dn, t.ddn, qn, dqn, tip, m.eta)
        b1, b2 = b_matrices(t.dn, t.ddn, e.dqstar, e.ddqstar, m.mu)
    return _stiffness_from_b(b1, b2, t.weights, m)


def element_stiffness(g: TriangleGeometry, m: MaterialParams, rule: QuadratureRule, tip=None) -> np.ndarray:
    """Dense stiffness of one element: 36 x 36, or 40 x 40 with the four amplitude columns."""
    return element_stiffness_batch(g.nodes[None], m, rule, tip)[0]


# ---------------------------------------------------------------------------
# global assembly

@dataclass
class LinearSystem:
    """Assembled (unconstrained) system and, after constraints, its reduction."""

    k: sp.csr_matrix
    f: np.ndarray
    dofmap: DofMap
    fixed: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    symmetry_error: float = 0.0

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.dofmap.total, dtype=bool)
        mask[self.fixed] = False
        return np.flatnonzero(mask)


def assemble_stiffness(mesh: Mesh, m: MaterialParams, rule: QuadratureRule, enrich: bool = True) -> sp.csr_matrix:
    dm = DofMap(mesh.n_nodes)
    enriched_ids = np.array(sorted(mesh.enriched), dtype=np.int64) if enrich else np.empty(0, dtype=np.int64)
    conv_mask = np.ones(mesh.n_elements, dtype=bool)
    conv_mask[enriched_ids] = False
    rows, cols, vals = [], [], []

    def add(ids, ke):
        rows.append(np.repeat(ids, ids.shape[1], axis=1).ravel())
        cols.append(np.tile(ids, (1, ids.shape[1])).ravel())
        vals.append(ke.ravel())

    conv = np.flatnonzero(conv_mask)
    for chunk in np.array_split(conv, max(1, len(conv) // 512)):
        if len(chunk) == 0:
            continue
        ke = element_stiffness_batch(mesh.nodes[mesh.elements[chunk]], m, rule)
        add(dm.element_dofs(mesh.elements[chunk]), ke)
    if len(enriched_ids):
        tip = mesh.nodes[mesh.tip_node]
        ke = element_stiffness_batch(mesh.nodes[mesh.elements[enriched_ids]], m, rule, tip)
        ids = np.concatenate(
            [dm.element_dofs(mesh.elements[enriched_ids]), np.tile(dm.amplitudes, (len(enriched_ids), 1))],
            axis=1,
        )
        add(ids, ke)
    k = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dm.total, dm.total)
    ).tocsr()
    k.sum_duplicates()
    return k


def _edge_owner(mesh: Mesh) -> dict:
    owner = {}
    for e, tri in enumerate(mesh.elements):
        for a, b in ((0, 1), (1, 2), (2, 0)):
            owner[(min(tri[a], tri[b]), max(tri[a], tri[b]))] = (e, a, b)
    return owner


def consistent_edge_load(mesh: Mesh, edge, traction, m: MaterialParams, enrich: bool = True, owner=None):
    """Work-equivalent load of a constant traction on one boundary edge.

    Returns ``(dofs, values)``: the 24 DOFs of the two edge nodes (plus the
    amplitudes when the edge belongs to an enriched element).
    """
    p, q = int(edge[0]), int(edge[1])
    owner = owner or _edge_owner(mesh)
    try:
        e, la, lb = owner[(min(p, q), max(p, q))]
    except KeyError:
        raise ConfigurationError(f"({p}, {q}) is not an element edge") from None
    tri = mesh.elements[e]
    if tri[la] != p:
        la, lb = lb, la
    s, w = np.polynomial.legendre.leggauss(GAUSS_EDGE_POINTS)
    s, w = 0.5 * (s + 1.0), 0.5 * w
    L = np.zeros((len(s), 3))
    L[:, la] = 1.0 - s
    L[:, lb] = s
    nodes_e = mesh.nodes[tri][None]
    t = element_tables(nodes_e, L)
    length = float(np.linalg.norm(mesh.nodes[q] - mesh.nodes[p]))
    tx, ty = float(traction[0]), float(traction[1])
    ww = w * length
    fe = np.zeros(36)
    fe[_COL_U] = tx * (ww @ t.n[0])
    fe[_COL_V] = ty * (ww @ t.n[0])
    dm = DofMap(mesh.n_nodes)
    gdofs = dm.element_dofs(tri[None])[0]
    keep = np.concatenate([np.arange(12 * la, 12 * la + 12), np.arange(12 * lb, 12 * lb + 12)])
    dofs, vals = gdofs[keep], fe[keep]
    if enrich and e in mesh.enriched:
        tip = mesh.nodes[mesh.tip_node]
        qn, dqn = nodal_q(nodes_e, tip, m.eta)
        rel = t.points - tip
        away = np.hypot(rel[..., 0], rel[..., 1]) > 0.0
        ev = qstar_batch(np.where(away[..., None], t.points, t.points + length), t.n, t.dn, t.ddn, qn, dqn, tip, m.eta)
        qs = np.where(away[..., None, None], ev.qstar, 0.0)[0] / (4.0 * m.mu)
        famp = ww @ (tx * qs[:, 0, :] + ty * qs[:, 1, :])
        dofs = np.concatenate([dofs, dm.amplitudes])
        vals = np.concatenate([vals, famp])
    return dofs, vals


def load_vector(mesh: Mesh, mode: str, t: float, m: MaterialParams, enrich: bool = True) -> np.ndarray:
    """Constant traction ``t``: normal on top (mode I) or tangential on top and right (mode II)."""
    _check_mode(mode)
    dm = DofMap(mesh.n_nodes)
    f = np.zeros(dm.total)
    loads = {"top": (0.0, t)} if mode == "I" else {"top": (t, 0.0), "right": (0.0, t)}
    owner = _edge_owner(mesh)
    for tag, traction in loads.items():
        if tag not in mesh.edge_tags:
            raise ConfigurationError(f"mesh has no '{tag}' boundary")
        for edge in mesh.edge_tags[tag]:
            dofs, vals = consistent_edge_load(mesh, edge, traction, m, enrich, owner)
            np.add.at(f, dofs, vals)
    return f


def _check_mode(mode: str) -> None:
    if mode not in SYMMETRY_CONDITIONS:
        raise ConfigurationError(f"mode must be 'I' or 'II', got {mode!r}")


def constrained_dofs(mesh: Mesh, mode: str, enrich: bool = True) -> np.ndarray:
    """Sorted global DOFs fixed to zero by symmetry and the mode restriction."""
    _check_mode(mode)
    dm = DofMap(mesh.n_nodes)
    fixed = []
    for tag, names in SYMMETRY_CONDITIONS[mode].items():
        if tag not in mesh.node_tags:
            raise ConfigurationError(f"mesh has no '{tag}' boundary tag")
        nodes = mesh.node_tags[tag]
        for name in names:
            fixed.append(dm.node_dof(nodes, name))
    active = ACTIVE_AMPLITUDES[mode] if enrich and mesh.enriched else ()
    fixed.append(np.array([a for i, a in enumerate(dm.amplitudes) if i not in active], dtype=np.int64))
    return np.unique(np.concatenate(fixed)).astype(np.int64)


def apply_symmetry_bcs(system: LinearSystem, mode: str, mesh: Mesh, enrich: bool = True) -> LinearSystem:
    return LinearSystem(
        k=system.k, f=system.f, dofmap=system.dofmap, fixed=constrained_dofs(mesh, mode, enrich),
        symmetry_error=system.symmetry_error,
    )


def symmetry_error(k: sp.spmatrix) -> float:
    diff = abs(k - k.T)
    top = abs(k).max()
    return float(diff.max() / top) if top > 0 else 0.0


def assemble_system(mesh: Mesh, m: MaterialParams, rule: QuadratureRule, mode: str, t: float,
                    enrich: bool = True) -> LinearSystem:
    k = assemble_stiffness(mesh, m, rule, enrich)
    f = load_vector(mesh, mode, t, m, enrich)
    system = LinearSystem(k=k, f=f, dofmap=DofMap(mesh.n_nodes), symmetry_error=symmetry_error(k))
    return apply_symmetry_bcs(system, mode, mesh, enrich)


# ---------------------------------------------------------------------------
# scaling and solve

def node_sizes(mesh: Mesh) -> np.ndarray:
    """Mean length of the edges incident to each node."""
    edges = mesh.edges()
    length = np.linalg.norm(mesh.nodes[edges[:, 0]] - mesh.nodes[edges[:, 1]], axis=1)
    total = np.bincount(edges.ravel(), weights=np.repeat(length, 2), minlength=mesh.n_nodes)
    count = np.bincount(edges.ravel(), minlength=mesh.n_nodes)
    return total / np.maximum(count, 1)


def dof_scaling(mesh: Mesh, k: sp.spmatrix) -> np.ndarray:
    """Scale factors s so that u = s * u_scaled has comparable magnitudes.

    First-derivative DOFs scale by the local size h, second derivatives by h^2;
    amplitude DOFs are scaled to unit diagonal.
    """
    h = node_sizes(mesh)
    power = np.array([0, 1, 1, 2, 2, 2] * 2)
    s = (h[:, None] ** power[None, :]).ravel()
    dm = DofMap(mesh.n_nodes)
    diag = k.diagonal()
    amp = diag[dm.amplitudes]
    ref = np.median(diag[: NODE_NDOF * mesh.n_nodes : 6])
    s_amp = np.where(amp > 0, np.sqrt(ref / np.where(amp > 0, amp, 1.0)), 1.0)
    return np.concatenate([s, s_amp])


@dataclass
class LinearSolution:
    u: np.ndarray
    residual_norm: float
    reactions: np.ndarray


_RIGID = ("x-translation", "y-translation", "rotation")


def _rigid_modes(mesh: Mesh) -> np.ndarray:
    dm = DofMap(mesh.n_nodes)
    z = np.zeros((3, dm.total))
    nodes = np.arange(mesh.n_nodes)
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    z[0, dm.node_dof(nodes, "u")] = 1.0
    z[1, dm.node_dof(nodes, "v")] = 1.0
    z[2, dm.node_dof(nodes, "u")] = -y
    z[2, dm.node_dof(nodes, "u_y")] = -1.0
    z[2, dm.node_dof(nodes, "v")] = x
    z[2, dm.node_dof(nodes, "v_x")] = 1.0
    return z


def unconstrained_rigid_modes(mesh: Mesh, fixed: np.ndarray) -> list[str]:
    z = _rigid_modes(mesh)
    return [name for name, row in zip(_RIGID, z) if not np.any(row[fixed] != 0.0)]


def solve(system: LinearSystem, mesh: Mesh) -> LinearSolution:
    """Direct sparse solve of the constrained system with DOF scaling.

    The factorization runs in double precision.  Near a small fan the rows of
    the value DOFs carry entries many orders of magnitude above the load, so
    ``K u`` evaluated in double precision cancels badly; the residuals of the
    iterative refinement are therefore formed in extended precision and the
    solution is accumulated in extended precision as well.
    """
    # round-off can leave a tiny nonzero pivot in a singular matrix, so rigid
    # modes are checked against the constraint set before factorizing
    missing = unconstrained_rigid_modes(mesh, system.fixed)
    if missing:
        raise SolverError(f"constraint deficiency; unconstrained rigid modes: {', '.join(missing)}")
    free = system.free
    s = dof_scaling(mesh, system.k)
    sf = s[free]
    kff = system.k[free][:, free]
    kss = (sp.diags(sf) @ kff @ sp.diags(sf)).tocsc()
    rhs = sf * system.f[free]
    try:
        # the reduced matrix is symmetric positive definite: no pivoting needed
        lu = spla.splu(kss, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError as exc:
        missing = unconstrained_rigid_modes(mesh, system.fixed)
        hint = f"; unconstrained rigid modes: {', '.join(missing)}" if missing else ""
        raise SolverError(f"factorization failed ({exc}){hint}") from None
    xs = lu.solve(rhs).astype(np.longdouble)
    k_ext = kss.astype(np.longdouble)
    rhs_ext = rhs.astype(np.longdouble)
    best = np.inf
    for _ in range(REFINEMENT_STEPS):
        r = rhs_ext - k_ext @ xs
        size = float(np.linalg.norm(r.astype(float)))
        if not size < best:
            break
        best = size
        xs = xs + lu.solve(r.astype(float))
    if not np.all(np.isfinite(xs)):
        missing = unconstrained_rigid_modes(mesh, system.fixed)
        hint = f"; unconstrained rigid modes: {', '.join(missing)}" if missing else ""
        raise SolverError(f"solution contains non-finite values{hint}")
    u = np.zeros(system.dofmap.total, dtype=np.longdouble)
    u[free] = sf * xs
    ku = system.k.astype(np.longdouble) @ u
    fnorm = np.linalg.norm(system.f[free])
    res = float(np.linalg.norm((ku[free] - system.f[free]).astype(float))) / (fnorm if fnorm > 0 else 1.0)
    reactions = (ku - system.f).astype(float)
    reactions[free] = 0.0
    return LinearSolution(u=u, residual_norm=res, reactions=reactions)


def out_of_balance(mesh: Mesh, m: MaterialParams, rule: QuadratureRule, u: np.ndarray, f: np.ndarray,
                   free: np.ndarray, enrich: bool = True) -> float:
    """Relative norm of int(B1^T tau + B2^T mu) - f over free DOFs, from stresses at quadrature points."""
    dm = DofMap(mesh.n_nodes)
    cm = constitutive_matrices(m)
    internal = np.zeros(dm.total)
    enriched = np.array(sorted(mesh.enriched) if enrich else [], dtype=np.int64)
    conv = np.setdiff1d(np.arange(mesh.n_elements), enriched)
    groups = [(conv, None)]
    if len(enriched):
        groups.append((enriched, mesh.nodes[mesh.tip_node]))
    for ids, tip in groups:
        if len(ids) == 0:
            continue
        nodes_e = mesh.nodes[mesh.elements[ids]]
        t = element_tables(nodes_e, rule.points, rule.weights)
        gd = dm.element_dofs(mesh.elements[ids])
        if tip is None:
            b1, b2 = b_matrices(t.dn, t.ddn)
        else:
            qn, dqn = nodal_q(nodes_e, tip, m.eta)
            e = qstar_batch(t.points, t.n, t.dn, t.ddn, qn, dqn, tip, m.eta)
            b1, b2 = b_matrices(t.dn, t.ddn, e.dqstar, e.ddqstar, m.mu)
            gd = np.concatenate([gd, np.tile(dm.amplitudes, (len(ids), 1))], axis=1)
        ue = u[gd]
        tau = np.einsum("ij,eqjn,en->eqi", cm.c, b1, ue)
        mu3 = np.einsum("ij,eqjn,en->eqi", cm.a, b2, ue)
        fe = np.einsum("eqin,eqi,eq->en", b1, tau, t.weights) + np.einsum("eqin,eqi,eq->en", b2, mu3, t.weights)
        np.add.at(internal, gd, fe)
    fnorm = np.linalg.norm(f[free])
    return float(np.linalg.norm(internal[free] - f[free]) / (fnorm if fnorm > 0 else 1.0))


# ---------------------------------------------------------------------------
# one complete case

@dataclass
class Solution:
    """Solved crack problem with the health checks of the solve."""

    mesh: Mesh
    material: MaterialParams
    mode: str
    t: float
    rule: QuadratureRule
    enrich: bool
    u: np.ndarray
    residual_norm: float
    out_of_balance: float
    equilibrium_error: float
    symmetry_error: float
    energy: float

    @property
    def dofmap(self) -> DofMap:
        return DofMap(self.mesh.n_nodes)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.asarray(self.u[self.dofmap.amplitudes], dtype=float)

    def node_values(self, node: int) -> np.ndarray:
        """The 12 DOFs of one node."""
        return np.asarray(self.u[NODE_NDOF * node : NODE_NDOF * node + NODE_NDOF], dtype=float)


def equilibrium_error(mesh: Mesh, system: LinearSystem, reactions: np.ndarray) -> float:
    """Relative imbalance between applied loads and support reactions, both directions."""
    dm = system.dofmap
    nodes = np.arange(mesh.n_nodes)
    sums, scale = [], 0.0
    for name in ("u", "v"):
        dofs = dm.node_dof(nodes, name)
        sums.append(float(system.f[dofs].sum() + reactions[dofs].sum()))
        scale += abs(float(system.f[dofs].sum()))
    if scale == 0.0:
        return 0.0
    return float(np.hypot(*sums) / scale)


def solve_case(mesh: Mesh, m: MaterialParams, rule: QuadratureRule, mode: str, t: float,
               enrich: bool = True) -> Solution:
    """Assemble, constrain and solve one load case."""
    system = assemble_system(mesh, m, rule, mode, t, enrich)
    lin = solve(system, mesh)
    u64 = np.asarray(lin.u, dtype=float)
    oob = out_of_balance(mesh, m, rule, u64, system.f, system.free, enrich)
    return Solution(
        mesh=mesh, material=m, mode=mode, t=float(t), rule=rule, enrich=bool(enrich and mesh.enriched),
        u=u64, residual_norm=lin.residual_norm, out_of_balance=oob,
        equilibrium_error=equilibrium_error(mesh, system, lin.reactions),
        symmetry_error=system.symmetry_error, energy=0.5 * float(system.f @ u64),
    )


# ---------------------------------------------------------------------------
# energy release by virtual crack extension

def crack_advance_field(mesh: Mesh) -> np.ndarray:
    """Node shift per unit crack advance.

    Nodes with ``x`` in the middle half of each side of the tip translate
    rigidly with the tip; the shift decays linearly to zero at the left
    symmetry plane and at the right edge, so the plate keeps its size while
    the crack grows.
    """
    spec = mesh.spec
    d, xr = spec.d, spec.L - spec.d
    x = mesh.nodes[:, 0]
    phi = np.ones_like(x)
    left = x < -0.5 * d
    right = x > 0.5 * xr
    phi[left] = (x[left] + d) / (0.5 * d)
    phi[right] = (xr - x[right]) / (0.5 * xr)
    return np.clip(phi, 0.0, 1.0)


def _moved(mesh: Mesh, shift: float) -> Mesh:
    nodes = mesh.nodes.copy()
    nodes[:, 0] += shift * crack_advance_field(mesh)
    return Mesh(nodes=nodes, elements=mesh.elements, enriched=mesh.enriched, tip_node=mesh.tip_node,
                node_tags=mesh.node_tags, edge_tags=mesh.edge_tags, spec=mesh.spec)


def virtual_crack_extension(sol: Solution, rel_step: float = 1e-4) -> float:
    """Energy release rate per crack tip of the full plate from the solved quarter model.

    The potential of the quarter model at fixed DOFs is differentiated with
    respect to a virtual tip advance ``delta`` by central differences of the
    assembled stiffness and load: ``dPi/ddelta = u.K'.u / 2 - f'.u``.  The
    full plate has four quarters and two tips, hence ``G = -2 dPi/ddelta``.
    """
    mesh, m = sol.mesh, sol.material
    h = rel_step * mesh.spec.d
    u = sol.u.astype(np.longdouble)
    pis = []
    for shift in (h, -h):
        moved = _moved(mesh, shift)
        k = assemble_stiffness(moved, m, sol.rule, sol.enrich).astype(np.longdouble)
        f = load_vector(moved, sol.mode, sol.t, m, sol.enrich).astype(np.longdouble)
        pis.append(0.5 * (u @ (k @ u)) - f @ u)
    dpi = (pis[0] - pis[1]) / (2.0 * h)
    return float(-2.0 * dpi)
