import sys

import numpy as np
import pytest

from dgife.ife import build_ife_basis
from dgife.mesh import CutGeometry, Domain, InterfaceCurve, build_mesh, classify_elements, subpolygons
from dgife.problems import make_example

UNIT = Domain(0.0, 1.0, 0.0, 1.0)
SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def line_curve(a, b, c):
    """Straight interface a*x + b*y + c = 0, minus side where negative."""
    return InterfaceCurve(lambda x, y: a * x + b * y + c + 0.0 * x)


def corner_cut(vertices=SQUARE, scale=1.0):
    """Chord from (s/2, 0) to (0, s/2): the minus piece is the corner triangle."""
    curve = line_curve(1.0, 1.0, -0.5 * scale)
    D = np.array([0.5 * scale, 0.0])
    E = np.array([0.0, 0.5 * scale])
    minus, plus = subpolygons(vertices, D, E, curve)
    return CutGeometry(0, D, E, (0, 3), minus, plus)


@pytest.fixture
def corner_basis():
    return build_ife_basis(SQUARE, corner_cut(), 1.0, 10.0)


@pytest.fixture(scope="session")
def example1():
    return make_example("1")


@pytest.fixture(scope="session")
def mesh10():
    return build_mesh(UNIT, 10)


@pytest.fixture(scope="session")
def classified10(mesh10, example1):
    return classify_elements(mesh10, example1.curve)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[key])
