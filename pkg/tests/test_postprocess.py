import csv
import dataclasses

import numpy as np
import pytest

from conftest import LOAD, solved
from sgecrack.asymptotics import crack_face_opening
from sgecrack.errors import LocationError
from sgecrack.material import constitutive_matrices
from sgecrack.postprocess import (
    PROFILE_COLUMNS,
    bottom_line_profile,
    crack_opening_profile,
    default_profile_points,
    enrichment_jump,
    evaluate,
    locate,
    summarize,
    tip_kt,
    tip_stress,
    write_profile_csv,
)


def random_points_away_from_fan(rng, sol, n):
    spec = sol.mesh.spec
    pts = []
    while len(pts) < n:
        p = rng.uniform([-spec.d, 0.0], [spec.L - spec.d, spec.L])
        if np.hypot(*p) > 2.0 * spec.R:
            pts.append(p)
    return np.array(pts)


class TestLocate:
    def test_inside_and_outside(self, mode1):
        e, L = locate(mode1.mesh, (0.1, 0.1))
        assert np.allclose(L @ mode1.mesh.nodes[mode1.mesh.elements[e]], [0.1, 0.1])
        with pytest.raises(LocationError):
            locate(mode1.mesh, (0.0, -0.1))
        with pytest.raises(LocationError):
            evaluate(mode1, (2.0, 0.5))

    def test_shared_edge_goes_to_lower_id(self, mode1):
        mesh = mode1.mesh
        a, b = mesh.elements[0][:2]
        e, _ = locate(mesh, 0.5 * (mesh.nodes[a] + mesh.nodes[b]))
        assert e == 0


class TestEvaluate:
    def test_constitutive_relations(self, mode1, rng):
        cm = constitutive_matrices(mode1.material)
        for p in random_points_away_from_fan(rng, mode1, 10):
            s = evaluate(mode1, p)
            assert np.allclose(s.stress, cm.c @ s.strain, rtol=1e-14)
            assert np.allclose(s.double_stress, cm.a @ s.strain_gradient, rtol=1e-14)

    @pytest.mark.parametrize("mode", ["I", "II"])
    def test_stress_from_finite_differences(self, rng, mode):
        sol = solved(mode)
        cm = constitutive_matrices(sol.material)
        worst = 0.0
        for p in random_points_away_from_fan(rng, sol, 100):
            h = 1e-6 * sol.mesh.spec.L
            shifted = np.clip(p, [-sol.mesh.spec.d + h, h], [sol.mesh.spec.L - sol.mesh.spec.d - h,
                                                             sol.mesh.spec.L - h])
            xp, xm = evaluate(sol, shifted + [h, 0]), evaluate(sol, shifted - [h, 0])
            yp, ym = evaluate(sol, shifted + [0, h]), evaluate(sol, shifted - [0, h])
            strain = np.array([(xp.u - xm.u), (yp.v - ym.v), (yp.u - ym.u) + (xp.v - xm.v)]) / (2 * h)
            got = evaluate(sol, shifted).stress
            worst = max(worst, np.max(np.abs(cm.c @ strain - got)) / LOAD)
        assert worst < 1e-4

    def test_tip_strain_from_nodal_derivatives(self, mode1):
        s = evaluate(mode1, mode1.mesh.nodes[mode1.mesh.tip_node])
        assert np.allclose(s.stress, tip_stress(mode1), rtol=1e-12)
        assert np.all(np.isnan(s.double_stress))

    def test_crack_face_stress_nonzero(self, mode1):
        s = evaluate(mode1, (-0.5 * mode1.mesh.spec.R, 0.0))
        assert np.max(np.abs(s.stress)) > 1e-3 * LOAD

    def test_rigid_motion_gives_zero_stress(self, mode1, rng):
        dm = mode1.dofmap
        nodes = np.arange(mode1.mesh.n_nodes)
        x, y = mode1.mesh.nodes[:, 0], mode1.mesh.nodes[:, 1]
        u = np.zeros(dm.total)
        u[dm.node_dof(nodes, "u")] = 1e-3 - 2e-3 * y
        u[dm.node_dof(nodes, "u_y")] = -2e-3
        u[dm.node_dof(nodes, "v")] = 5e-4 + 2e-3 * x
        u[dm.node_dof(nodes, "v_x")] = 2e-3
        rigid = dataclasses.replace(mode1, u=u)
        pts = np.vstack([random_points_away_from_fan(rng, mode1, 10), [[0.3 * mode1.mesh.spec.R, 0.1 * mode1.mesh.spec.R]]])
        for p in pts:
            s = evaluate(rigid, p)
            assert np.max(np.abs(s.strain)) < 1e-12
            assert np.max(np.abs(s.strain_gradient)) < 1e-9


class TestCrackOpening:
    def test_cusp_slope(self, mode1):
        R = mode1.mesh.spec.R
        xs = -np.geomspace(R / 50, R / 2, 12)
        v = np.array([v for _, v in crack_opening_profile(mode1, xs)])
        assert np.all(v > 0.0)
        slope = np.polyfit(np.log(-xs), np.log(v), 1)[0]
        assert slope == pytest.approx(1.5, abs=0.05)

    def test_matches_closed_form_near_tip(self, mode1):
        R = mode1.mesh.spec.R
        xs = -np.geomspace(R / 50, R / 2, 12)
        v = np.array([v for _, v in crack_opening_profile(mode1, xs)])
        ref = crack_face_opening(xs, mode1.amplitudes, mode1.material)
        assert np.max(np.abs(v / ref - 1.0)) < 0.03

    def test_ligament_samples_rejected(self, mode1):
        with pytest.raises(LocationError):
            crack_opening_profile(mode1, [0.01])

    def test_left_symmetry_plane(self, mode1):
        s = evaluate(mode1, (-mode1.mesh.spec.d, 0.0))
        assert s.u == 0.0


class TestKt:
    def test_definition(self, mode1, mode2):
        assert tip_kt(mode1) == pytest.approx(tip_stress(mode1)[1] / LOAD)
        assert tip_kt(mode2) == pytest.approx(tip_stress(mode2)[2] / LOAD)

    def test_decreases_with_length_scale(self):
        kts = [tip_kt(solved("I", ell=ell)) for ell in (0.01, 0.02, 0.04)]
        assert kts[0] > kts[1] > kts[2] > 1.0


class TestSummary:
    def test_fields(self, mode1):
        s = summarize(mode1, 0.025)
        assert s.mode == "I" and len(s.k) == 4
        assert s.j > 0.0 and s.j_normalized > 0.0
        assert s.kt == pytest.approx(tip_kt(mode1))
        assert s.mesh["nodes"] == mode1.mesh.n_nodes

    def test_enrichment_jump_is_small(self, mode1):
        assert 0.0 < enrichment_jump(mode1) < 1e-2
        assert enrichment_jump(solved("I", enrich=False)) == 0.0


class TestProfiles:
    def test_default_points(self):
        x = default_profile_points(0.2, 1.0, 21)
        assert np.all(np.diff(x) > 0) and 0.0 not in x
        assert x[0] == pytest.approx(-0.2) and x[-1] == pytest.approx(0.8)

    def test_csv(self, mode1, tmp_path):
        samples = bottom_line_profile(mode1, [-0.1, 0.1])
        path = write_profile_csv(tmp_path / "line.csv", samples, LOAD)
        with path.open() as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == PROFILE_COLUMNS and len(rows) == 3
        assert float(rows[2][4]) == pytest.approx(samples[1].stress[1] / LOAD)
