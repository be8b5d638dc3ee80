"""Graded triangulation of the quarter crack domain.

The quarter model occupies ``[-d, L - d] x [0, L]`` with the crack tip at the
origin, the crack face on ``y = 0, x < 0`` and the ligament on ``y = 0, x >= 0``.
The mesh is built from the tip outwards in four zones:

1. a fan of ``M`` equal-angle triangles of radius ``R`` sharing the tip node;
2. half-rings of ``n_theta`` segments whose radii grow geometrically up to
   half the size of a box around the tip;
3. a blend of the last half-ring onto the box ``[-d, a] x [0, b]`` with
   ``a = min(d, L - d)`` and ``b = min(d, L)``;
4. nested rectangles ``[-d, x_k] x [0, y_k]`` grown geometrically until they
   reach the outer edges.

Consecutive node chains are stitched by a zipper that always takes the shorter
diagonal, which keeps the element aspect ratios close to one in every zone.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MeshGenerationError

BOUNDARY_TAGS = ("crack_face", "ligament", "left_symmetry", "top", "right")


@dataclass(frozen=True)
class DomainSpec:
    """Geometry of the quarter model and mesh controls.

    Parameters
    ----------
    d : half crack length.
    L : half edge of the square plate.
    R : fan radius (apex-to-vertex distance of the fan triangles).
    M : number of fan triangles.
    grading : geometric growth ratio of element size away from the tip.
    n_theta : number of segments on each half-ring outside the fan.
    """

    d: float
    L: float
    R: float
    M: int = 5
    grading: float = 1.3
    n_theta: int = 12

    def validate(self) -> None:
        if not (np.isfinite(self.d) and np.isfinite(self.L) and np.isfinite(self.R)):
            raise MeshGenerationError("domain sizes must be finite")
        if self.d <= 0.0 or self.L <= self.d:
            raise MeshGenerationError(f"need 0 < d < L, got d={self.d}, L={self.L}")
        if self.R <= 0.0:
            raise MeshGenerationError(f"fan radius must be positive, got R={self.R}")
        if int(self.M) != self.M or self.M < 2:
            raise MeshGenerationError(f"fan needs at least 2 elements, got M={self.M}")
        if not self.grading > 1.0:
            raise MeshGenerationError(f"grading ratio must exceed 1, got {self.grading}")
        if int(self.n_theta) != self.n_theta or self.n_theta < 4:
            raise MeshGenerationError(f"n_theta must be an integer >= 4, got {self.n_theta}")
        if self.R * self.grading > self.core_radius:
            raise MeshGenerationError(
                f"fan radius R={self.R} too large to embed: must not exceed "
                f"{self.core_radius / self.grading:.6g} for d={self.d}, L={self.L}"
            )

    @property
    def box(self):
        """(a, b): right and top extent of the box that encloses the polar zone."""
        return min(self.d, self.L - self.d), min(self.d, self.L)

    @property
    def core_radius(self) -> float:
        a, b = self.box
        return 0.5 * min(a, b)


@dataclass(frozen=True)
class Mesh:
    """Triangulation with boundary tags.

    ``elements`` are counterclockwise node triples; ``enriched`` holds the ids
    of the fan elements; tags map boundary names to node ids and edge pairs.
    """

    nodes: np.ndarray
    elements: np.ndarray
    enriched: frozenset
    tip_node: int
    node_tags: dict = field(default_factory=dict)
    edge_tags: dict = field(default_factory=dict)
    spec: DomainSpec | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_nodes(self, e: int) -> np.ndarray:
        return self.nodes[self.elements[e]]

    def doubled_areas(self) -> np.ndarray:
        p = self.nodes[self.elements]
        return (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
            p[:, 2, 0] - p[:, 0, 0]
        ) * (p[:, 1, 1] - p[:, 0, 1])

    def edges(self) -> np.ndarray:
        """Unique undirected edges, shape (n_edges, 2), sorted node pairs."""
        e = self.elements
        pairs = np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]])
        return np.unique(np.sort(pairs, axis=1), axis=0)

    def boundary_edges(self) -> np.ndarray:
        e = self.elements
        pairs = np.sort(np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        return uniq[counts == 1]

    def euler_characteristic(self) -> int:
        return self.n_nodes - len(self.edges()) + self.n_elements

    def statistics(self) -> dict:
        area = 0.5 * self.doubled_areas()
        p = self.nodes[self.elements]
        lengths = np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2)
        quality = 4.0 * np.sqrt(3.0) * area / np.sum(lengths ** 2, axis=1)
        return {
            "nodes": int(self.n_nodes),
            "elements": int(self.n_elements),
            "enriched": len(self.enriched),
            "min_area": float(area.min()),
            "min_quality": float(quality.min()),
            "max_edge": float(lengths.max()),
        }


# ---------------------------------------------------------------------------
# construction helpers

class _Builder:
    def __init__(self):
        self.points: list[tuple[float, float]] = []
        self.triangles: list[tuple[int, int, int]] = []

    def add(self, x: float, y: float) -> int:
        self.points.append((float(x), float(y)))
        return len(self.points) - 1

    def add_many(self, xy) -> list[int]:
        return [self.add(x, y) for x, y in xy]

    def triangle(self, i: int, j: int, k: int) -> None:
        (x1, y1), (x2, y2), (x3, y3) = self.points[i], self.points[j], self.points[k]
        det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
        scale = max(abs(x2 - x1), abs(y2 - y1), abs(x3 - x1), abs(y3 - y1)) ** 2
        if abs(det) <= 1e-12 * scale:
            raise MeshGenerationError(f"degenerate triangle between nodes {i}, {j}, {k}")
        self.triangles.append((i, j, k) if det > 0 else (i, k, j))

    def det(self, i: int, j: int, k: int) -> float:
        (x1, y1), (x2, y2), (x3, y3) = self.points[i], self.points[j], self.points[k]
        return (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)

    def dist(self, i: int, j: int) -> float:
        (x1, y1), (x2, y2) = self.points[i], self.points[j]
        return float(np.hypot(x2 - x1, y2 - y1))

    def zip(self, inner: list[int], outer: list[int]) -> None:
        """Triangulate the strip between two chains that run in the same direction.

        A shared first or last node is allowed; the adjoining outer segment is
        then a boundary edge of the strip.  Both chains run counter-clockwise
        about the tip with ``outer`` outside, so a valid strip triangle is
        clockwise in the vertex order used here.  The shorter diagonal is
        preferred as long as both candidate triangles are valid.
        """
        if inner[0] == outer[0]:
            outer = outer[1:]
        if inner[-1] == outer[-1]:
            outer = outer[:-1]
        i = j = 0
        ni, no = len(inner) - 1, len(outer) - 1
        while i < ni or j < no:
            if i == ni:
                advance_inner = False
            elif j == no:
                advance_inner = True
            else:
                ok_inner = self.det(inner[i], inner[i + 1], outer[j]) < 0.0
                ok_outer = self.det(inner[i], outer[j + 1], outer[j]) < 0.0
                if ok_inner and ok_outer:
                    advance_inner = self.dist(inner[i + 1], outer[j]) <= self.dist(inner[i], outer[j + 1])
                elif ok_inner or ok_outer:
                    advance_inner = ok_inner
                else:
                    raise MeshGenerationError("cannot triangulate a strip without inverted elements")
            if advance_inner:
                self.triangle(inner[i], inner[i + 1], outer[j])
                i += 1
            else:
                self.triangle(inner[i], outer[j + 1], outer[j])
                j += 1


def _geometric_levels(start: float, stop: float, ratio: float) -> np.ndarray:
    """Levels from ``start`` to ``stop`` (inclusive) with growth close to ``ratio``."""
    n = max(1, int(np.ceil(np.log(stop / start) / np.log(ratio) - 1e-9)))
    q = (stop / start) ** (1.0 / n)
    return start * q ** np.arange(n + 1)


def _box_boundary(spec: DomainSpec, n: int) -> np.ndarray:
    """Nodes on right, top and left edges of the core box, matched to ``n`` rays.

    Node ``j`` lies on the ray at angle ``j pi / n``; the rays closest to the
    two top corners are snapped onto the corners so both become nodes.
    """
    a, b = spec.box
    d = spec.d
    phi = np.linspace(0.0, np.pi, n + 1)
    pts = np.empty((n + 1, 2))
    for j, p in enumerate(phi):
        c, s = np.cos(p), np.sin(p)
        t = np.inf
        if c > 1e-15:
            t = min(t, a / c)
        if c < -1e-15:
            t = min(t, d / -c)
        if s > 1e-15:
            t = min(t, b / s)
        pts[j] = (t * c, t * s)
    corner_r = np.arctan2(b, a)
    corner_l = np.arctan2(b, -d)
    jr = int(np.argmin(np.abs(phi - corner_r)))
    jl = int(np.argmin(np.abs(phi - corner_l)))
    if jr == jl or jr == 0 or jl == n:
        raise MeshGenerationError(f"n_theta={n} too small to resolve the box corners")
    pts[jr] = (a, b)
    pts[jl] = (-d, b)
    pts[0] = (a, 0.0)
    pts[n] = (-d, 0.0)
    return pts, jr, jl


def _snap(v: float, limit: float, step: float) -> float:
    return limit if v >= limit - 0.5 * step else v


def generate_quarter_mesh(spec: DomainSpec) -> Mesh:
    """Build the graded quarter-domain mesh described in the module docstring."""
    spec.validate()
    d, L, R, M, g, n = spec.d, spec.L, spec.R, int(spec.M), spec.grading, int(spec.n_theta)
    a, b = spec.box
    rho_c = spec.core_radius
    bld = _Builder()

    # 1. fan ---------------------------------------------------------------
    tip = bld.add(0.0, 0.0)
    ang = np.linspace(0.0, np.pi, M + 1)
    ring = bld.add_many(np.column_stack([R * np.cos(ang), R * np.sin(ang)]))
    bld.points[ring[0]] = (R, 0.0)
    bld.points[ring[-1]] = (-R, 0.0)
    for j in range(M):
        bld.triangle(tip, ring[j], ring[j + 1])
    enriched = frozenset(range(M))

    # 2. polar half-rings ------------------------------------------------------
    phi = np.linspace(0.0, np.pi, n + 1)
    for rho in _geometric_levels(R, rho_c, g)[1:]:
        nxt = bld.add_many(np.column_stack([rho * np.cos(phi), rho * np.sin(phi)]))
        bld.points[nxt[0]] = (rho, 0.0)
        bld.points[nxt[-1]] = (-rho, 0.0)
        bld.zip(ring, nxt)
        ring = nxt

    # 3. blend from the last half-ring onto the box ----------------------------
    circle = np.array([bld.points[i] for i in ring])
    box, jr, jl = _box_boundary(spec, n)
    dist_box = np.hypot(box[:, 0], box[:, 1])
    tau_levels = _geometric_levels(rho_c, float(np.mean(dist_box)), g)
    tau = (tau_levels - rho_c) / (tau_levels[-1] - rho_c)
    for t in tau[1:]:
        xy = (1.0 - t) * circle + t * box
        if t == tau[-1]:
            xy = box
        nxt = bld.add_many(xy)
        bld.zip(ring, nxt)
        ring = nxt
    right = ring[: jr + 1]
    top = ring[jr : jl + 1]

    # 4. nested rectangles -----------------------------------------------------
    xk, yk = a, b
    xmax, ymax = L - d, L
    while xk < xmax or yk < ymax:
        h = (g - 1.0) * max(xk, yk)
        xn = _snap(xk + h, xmax, h) if xk < xmax else xk
        yn = _snap(yk + h, ymax, h) if yk < ymax else yk
        xn, yn = min(xn, xmax), min(yn, ymax)
        # right part of the next rectangle
        if xn > xk:
            m = max(1, int(round(yn / h)))
            ys = np.linspace(0.0, yn, m + 1)
            new_right = bld.add_many(np.column_stack([np.full(m + 1, xn), ys]))
        else:
            new_right = right + [bld.add(xn, yn)]
        # top part of the next rectangle
        if yn > yk:
            m = max(1, int(round((xn + d) / h)))
            xs = np.linspace(xn, -d, m + 1)
            new_top = [new_right[-1]] + bld.add_many(np.column_stack([xs[1:], np.full(m, yn)]))
        else:
            new_top = [new_right[-1]] + top
        if xn > xk and yn > yk:
            bld.zip(right, new_right)
            bld.zip(top, new_top)
        elif xn > xk:
            bld.zip(right, new_right + [top[0]])
        else:
            bld.zip(top, new_right[len(right) - 1 :] + new_top[1:])
        right, top, xk, yk = new_right, new_top, xn, yn

    nodes = np.array(bld.points)
    elements = np.array(bld.triangles, dtype=np.int64)
    mesh = Mesh(nodes=nodes, elements=elements, enriched=enriched, tip_node=tip, spec=spec)
    mesh = _tag(mesh)
    _check(mesh)
    return mesh


def _classify(points: np.ndarray, spec: DomainSpec) -> dict:
    tol = 1e-10 * spec.L
    x, y = points[..., 0], points[..., 1]
    on_bottom = np.abs(y) <= tol
    return {
        "crack_face": on_bottom & (x < -tol),
        "ligament": on_bottom & (x >= -tol),
        "left_symmetry": np.abs(x + spec.d) <= tol,
        "top": np.abs(y - spec.L) <= tol,
        "right": np.abs(x - (spec.L - spec.d)) <= tol,
    }


def _tag(mesh: Mesh) -> Mesh:
    spec = mesh.spec
    node_mask = _classify(mesh.nodes, spec)
    # the tip is the closing point of the crack face as well as the first ligament node
    node_tags = {k: np.flatnonzero(v) for k, v in node_mask.items()}
    bedges = mesh.boundary_edges()
    mid = 0.5 * (mesh.nodes[bedges[:, 0]] + mesh.nodes[bedges[:, 1]])
    edge_mask = _classify(mid, spec)
    edge_tags = {k: bedges[v] for k, v in edge_mask.items()}
    # crack-face node set: every node touching a crack-face edge, tip included
    node_tags["crack_face"] = np.unique(edge_tags["crack_face"])
    return Mesh(
        nodes=mesh.nodes, elements=mesh.elements, enriched=mesh.enriched, tip_node=mesh.tip_node,
        node_tags=node_tags, edge_tags=edge_tags, spec=spec,
    )


def _check(mesh: Mesh) -> None:
    spec = mesh.spec
    area2 = mesh.doubled_areas()
    if np.any(area2 <= 0.0):
        raise MeshGenerationError("mesh contains inverted or degenerate elements")
    total = 0.5 * area2.sum()
    if abs(total - spec.L * spec.L) > 1e-9 * spec.L * spec.L:
        raise MeshGenerationError(f"elements cover area {total}, expected {spec.L ** 2}")
    e = mesh.elements
    pairs = np.sort(np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]]), axis=1)
    _, counts = np.unique(pairs, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise MeshGenerationError("non-conforming mesh: an edge is shared by more than two elements")
    tagged = sum(len(v) for v in mesh.edge_tags.values())
    if tagged != len(mesh.boundary_edges()):
        raise MeshGenerationError("boundary edge missing a tag or carrying two tags")
    if mesh.euler_characteristic() != 1:
        raise MeshGenerationError("mesh is not a disk-topology triangulation")


# ---------------------------------------------------------------------------
# export

def export_mesh(mesh: Mesh, path) -> Path:
    """Write a plain-text mesh file.

    Layout (ids are zero based)::

        # sgecrack mesh v1
        nodes <n>
        <id> <x> <y>                     (n lines)
        elements <m>
        <id> <n1> <n2> <n3> <enriched>   (m lines, enriched is 0 or 1)
        tip <id>
        tag <name> <k>
        <node id> ...                    (one line, k ids)
        edges <name> <k>
        <n1> <n2>                        (k lines)
    """
    path = Path(path)
    lines = ["# sgecrack mesh v1", f"nodes {mesh.n_nodes}"]
    lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.nodes)]
    lines.append(f"elements {mesh.n_elements}")
    lines += [
        f"{i} {a} {b} {c} {int(i in mesh.enriched)}" for i, (a, b, c) in enumerate(mesh.elements)
    ]
    lines.append(f"tip {mesh.tip_node}")
    for name in BOUNDARY_TAGS:
        ids = mesh.node_tags.get(name, np.empty(0, dtype=int))
        lines.append(f"tag {name} {len(ids)}")
        lines.append(" ".join(str(int(i)) for i in ids))
    for name in BOUNDARY_TAGS:
        ed = mesh.edge_tags.get(name, np.empty((0, 2), dtype=int))
        lines.append(f"edges {name} {len(ed)}")
        lines += [f"{int(p)} {int(q)}" for p, q in ed]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_mesh(path) -> Mesh:
    """Read a file written by :func:`export_mesh`."""
    tokens = [line.split() for line in Path(path).read_text().splitlines() if not line.startswith("#")]
    pos = 0

    def take():
        nonlocal pos
        pos += 1
        return tokens[pos - 1]

    nn = int(take()[1])
    nodes = np.array([[float(t[1]), float(t[2])] for t in (take() for _ in range(nn))])
    ne = int(take()[1])
    rows = [take() for _ in range(ne)]
    elements = np.array([[int(t[1]), int(t[2]), int(t[3])] for t in rows], dtype=np.int64)
    enriched = frozenset(int(t[0]) for t in rows if t[4] == "1")
    tip = int(take()[1])
    node_tags, edge_tags = {}, {}
    for _ in BOUNDARY_TAGS:
        head = take()
        ids = take()
        node_tags[head[1]] = np.array([int(t) for t in ids], dtype=np.int64)
    for _ in BOUNDARY_TAGS:
        head = take()
        k = int(head[2])
        edge_tags[head[1]] = np.array([[int(t[0]), int(t[1])] for t in (take() for _ in range(k))],
                                      dtype=np.int64).reshape(k, 2)
    return Mesh(nodes=nodes, elements=elements, enriched=enriched, tip_node=tip,
                node_tags=node_tags, edge_tags=edge_tags)
