"""Shared fixtures: material data, random triangles and cached solved cases."""
from functools import lru_cache

import numpy as np
import pytest

from sgecrack.assembly import solve_case
from sgecrack.bell import quadrature
from sgecrack.material import make_material
from sgecrack.mesh import DomainSpec, generate_quarter_mesh

#: plate data used throughout: E = 1 GPa, nu = 0.3, L = 1 m, t = 1 MPa
E, NU, L_PLATE, LOAD = 1e9, 0.3, 1.0, 1e6


def random_triangle(rng, min_quality: float = 0.2, scale: float = 1.0):
    """Counter-clockwise triangle with shape quality above ``min_quality``."""
    while True:
        p = rng.uniform(-1.0, 1.0, size=(3, 2)) * scale
        d = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1])
        lengths = np.linalg.norm(p - np.roll(p, 1, axis=0), axis=1)
        quality = 2.0 * np.sqrt(3.0) * abs(d) / np.sum(lengths ** 2)
        if quality > min_quality:
            return p if d > 0 else p[[0, 2, 1]]


@lru_cache(maxsize=None)
def solved(mode="I", d=0.2, ell=0.02, r_over_ell=0.1, M=5, enrich=True, rule=13, grading=1.3):
    """Solve a quarter-plate case (cached across tests)."""
    m = make_material(E, NU, ell)
    mesh = generate_quarter_mesh(DomainSpec(d=d, L=L_PLATE, R=r_over_ell * ell, M=M, grading=grading))
    return solve_case(mesh, m, quadrature(rule), mode, LOAD, enrich=enrich)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def material():
    return make_material(E, NU, 0.02)


@pytest.fixture(scope="session")
def mode1():
    return solved("I")


@pytest.fixture(scope="session")
def mode2():
    return solved("II")


#: one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
