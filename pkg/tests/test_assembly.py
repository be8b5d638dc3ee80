import numpy as np
import pytest

from conftest import LOAD, random_triangle, solved
from patch import eight_element_patch, patch_errors, random_cubic, solve_patch, two_element_patch
from sgecrack.assembly import (
    DOF_NAMES,
    SYMMETRY_CONDITIONS,
    DofMap,
    LinearSystem,
    assemble_stiffness,
    assemble_system,
    consistent_edge_load,
    constrained_dofs,
    element_stiffness,
    load_vector,
    solve,
    solve_case,
    virtual_crack_extension,
)
from sgecrack.bell import quadrature, triangle_geometry
from sgecrack.errors import ConfigurationError, SolverError
from sgecrack.material import make_material
from sgecrack.mesh import DomainSpec, generate_quarter_mesh

RULE = quadrature(13)


@pytest.fixture(scope="module")
def coarse():
    return generate_quarter_mesh(DomainSpec(d=0.4, L=1.0, R=0.05, M=2, grading=2.0, n_theta=4))


@pytest.fixture(scope="module")
def coarse_material():
    return make_material(1e9, 0.3, 0.05)


def rigid_vector(nodes, kind):
    """Nodal DOFs (12 per node) of a rigid translation or unit rotation."""
    out = np.zeros((len(nodes), 12))
    if kind == "x":
        out[:, DOF_NAMES.index("u")] = 1.0
    elif kind == "y":
        out[:, DOF_NAMES.index("v")] = 1.0
    else:
        out[:, DOF_NAMES.index("u")] = -nodes[:, 1]
        out[:, DOF_NAMES.index("u_y")] = -1.0
        out[:, DOF_NAMES.index("v")] = nodes[:, 0]
        out[:, DOF_NAMES.index("v_x")] = 1.0
    return out.ravel()


def jacobi_scaled(k):
    d = np.diag(k).copy()
    keep = np.flatnonzero(d != 0.0)
    s = 1.0 / np.sqrt(d[keep])
    return s[:, None] * k[np.ix_(keep, keep)] * s[None], keep


class TestDofMap:
    def test_layout(self):
        dm = DofMap(5)
        assert dm.total == 12 * 5 + 4
        assert list(dm.amplitudes) == [60, 61, 62, 63]
        assert dm.node_dof(2, "v_x") == 24 + 7
        assert dm.element_dofs(np.array([[0, 2, 4]])).shape == (1, 36)


class TestElementStiffness:
    def test_symmetric_with_three_rigid_modes(self, rng):
        m = make_material(1e9, 0.3, 0.1)
        for _ in range(5):
            nodes = random_triangle(rng, scale=0.5)
            k = element_stiffness(triangle_geometry(nodes), m, RULE)
            assert k.shape == (36, 36)
            assert np.max(np.abs(k - k.T)) <= 1e-12 * np.max(np.abs(k))
            ks, _ = jacobi_scaled(k)
            w = np.linalg.eigvalsh(ks)
            assert np.sum(w < 1e-9 * w[-1]) == 3
            assert w[0] > -1e-9 * w[-1]
            for kind in ("x", "y", "rotation"):
                r = rigid_vector(nodes, kind)
                assert np.linalg.norm(k @ r) <= 1e-9 * np.linalg.norm(k) * np.linalg.norm(r)

    def test_enriched_block(self, material):
        R = 0.1 * material.ell
        nodes = np.array([[0.0, 0.0], [R, 0.0], [R * np.cos(0.6), R * np.sin(0.6)]])
        k = element_stiffness(triangle_geometry(nodes), material, RULE, tip=np.zeros(2))
        assert k.shape == (40, 40)
        assert np.max(np.abs(k - k.T)) <= 1e-12 * np.max(np.abs(k))
        ks, _ = jacobi_scaled(k)
        w = np.linalg.eigvalsh(ks)
        assert w[0] > -1e-9 * w[-1]
        assert np.sum(w < 1e-9 * w[-1]) == 3
        conv = element_stiffness(triangle_geometry(nodes), material, RULE)
        assert np.allclose(k[:36, :36], conv, rtol=0, atol=1e-12 * np.max(np.abs(conv)))


class TestPatch:
    @pytest.mark.parametrize("patch", [two_element_patch, eight_element_patch])
    def test_cubic_fields_reproduced(self, rng, patch):
        nodes, elements = patch()
        for _ in range(2):
            field = random_cubic(rng)
            u = solve_patch(nodes, elements, field)
            err = patch_errors(nodes, elements, field, u, rng)
            assert max(err.values()) < 1e-10, err


class TestGlobalSystem:
    def test_symmetric(self, coarse, coarse_material):
        k = assemble_stiffness(coarse, coarse_material, RULE)
        assert abs(k - k.T).max() <= 1e-10 * abs(k).max()

    @pytest.mark.parametrize("enrich", [False, True])
    def test_nullspace_and_definiteness(self, coarse, coarse_material, enrich):
        system = assemble_system(coarse, coarse_material, RULE, "I", LOAD, enrich)
        k = system.k.toarray()
        ks, _ = jacobi_scaled(k)
        w = np.linalg.eigvalsh(ks)
        assert np.sum(w < 1e-9 * w[-1]) == 3
        free_scaled, _ = jacobi_scaled(k[np.ix_(system.free, system.free)])
        assert np.linalg.eigvalsh(free_scaled)[0] > 1e-9

    def test_constraints_per_mode(self, coarse):
        dm = DofMap(coarse.n_nodes)
        for mode, conditions in SYMMETRY_CONDITIONS.items():
            fixed = set(constrained_dofs(coarse, mode).tolist())
            for tag, names in conditions.items():
                for name in names:
                    assert set(dm.node_dof(coarse.node_tags[tag], name).tolist()) <= fixed
            inactive = (2, 3) if mode == "I" else (0, 1)
            assert {int(dm.amplitudes[i]) for i in inactive} <= fixed
            assert not {int(dm.amplitudes[i]) for i in set(range(4)) - set(inactive)} & fixed
        without = constrained_dofs(coarse, "I", enrich=False)
        assert set(dm.amplitudes.tolist()) <= set(without.tolist())

    def test_bad_mode(self, coarse):
        with pytest.raises(ConfigurationError):
            constrained_dofs(coarse, "III")

    def test_missing_constraints_named(self, coarse, coarse_material):
        system = assemble_system(coarse, coarse_material, RULE, "I", LOAD)
        dm = system.dofmap
        keep = np.setdiff1d(system.fixed, dm.node_dof(coarse.node_tags["ligament"], "v"))
        loose = LinearSystem(k=system.k, f=system.f, dofmap=dm, fixed=keep)
        with pytest.raises(SolverError, match="y-translation"):
            solve(loose, coarse)


class TestLoads:
    @pytest.mark.parametrize("mode", ["I", "II"])
    def test_total_force(self, coarse, coarse_material, mode):
        f = load_vector(coarse, mode, LOAD, coarse_material)
        dm = DofMap(coarse.n_nodes)
        nodes = np.arange(coarse.n_nodes)
        fu, fv = f[dm.node_dof(nodes, "u")].sum(), f[dm.node_dof(nodes, "v")].sum()
        top = coarse.spec.L
        right = coarse.spec.L
        if mode == "I":
            assert fv == pytest.approx(LOAD * top, rel=1e-10)
            assert fu == 0.0
        else:
            assert fu == pytest.approx(LOAD * top, rel=1e-10)
            assert fv == pytest.approx(LOAD * right, rel=1e-10)

    def test_zero_and_orthogonal_traction(self, coarse, coarse_material):
        edge = coarse.edge_tags["top"][0]
        dofs, vals = consistent_edge_load(coarse, edge, (0.0, 0.0), coarse_material)
        assert np.all(vals == 0.0)
        dofs, vals = consistent_edge_load(coarse, edge, (0.0, LOAD), coarse_material)
        u_rows = (dofs % 12) < 6
        assert np.all(vals[u_rows] == 0.0) and np.any(vals[~u_rows] != 0.0)


class TestSolvedCase:
    @pytest.mark.parametrize("mode", ["I", "II"])
    def test_health(self, mode):
        sol = solved(mode)
        assert sol.residual_norm < 1e-9
        assert sol.equilibrium_error < 1e-8
        assert sol.symmetry_error < 1e-10
        assert sol.out_of_balance < 1e-6

    def test_reaction_balances_load(self, coarse, coarse_material):
        system = assemble_system(coarse, coarse_material, RULE, "I", LOAD)
        lin = solve(system, coarse)
        dm = system.dofmap
        v_react = lin.reactions[dm.node_dof(np.arange(coarse.n_nodes), "v")].sum()
        assert v_react == pytest.approx(-LOAD * coarse.spec.L, rel=1e-8)

    def test_boundary_conditions_hold(self, mode1):
        dm = mode1.dofmap
        assert np.all(mode1.u[dm.node_dof(mode1.mesh.node_tags["ligament"], "v")] == 0.0)
        assert np.all(mode1.u[dm.node_dof(mode1.mesh.node_tags["left_symmetry"], "u")] == 0.0)
        assert mode1.amplitudes[2] == 0.0 and mode1.amplitudes[3] == 0.0

    def test_positive_energy_and_opening(self, mode1):
        assert mode1.energy > 0.0
        face = mode1.mesh.node_tags["crack_face"]
        away = face[mode1.mesh.nodes[face, 0] < -1e-6]
        assert np.all(mode1.u[mode1.dofmap.node_dof(away, "v")] > 0.0)

    def test_energy_independent_of_enrichment_on_fine_fan(self):
        a = solved("I", r_over_ell=0.01).energy
        b = solved("I", r_over_ell=0.01, enrich=False).energy
        assert b == pytest.approx(a, rel=5e-3)


class TestVirtualCrackExtension:
    def test_short_crack_matches_griffith(self):
        # d / L = 1/40: finite-width and finite-height corrections are below 0.5%
        d = 0.025
        m = make_material(1e9, 0.3, 0.0)
        mesh = generate_quarter_mesh(DomainSpec(d=d, L=1.0, R=1e-3 * d, M=5))
        sol = solve_case(mesh, m, RULE, "I", LOAD, enrich=False)
        griffith = LOAD ** 2 * np.pi * d * (1 - 0.3 ** 2) / 1e9
        assert virtual_crack_extension(sol) == pytest.approx(griffith, rel=0.01)

    def test_step_independent(self, mode1):
        a = virtual_crack_extension(mode1, 1e-4)
        b = virtual_crack_extension(mode1, 1e-3)
        assert a == pytest.approx(b, rel=1e-4)
