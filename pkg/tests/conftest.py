import numpy as np
import pytest
from hypothesis import settings

from quickfield.geometry import CellKind, Grid, parse_scenario

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record a one-line acceptance verdict, echoed in the terminal summary."""
    def _report(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_grid(rng, n=20, wall_density=0.2, n_dest=2):
    cells = np.where(rng.random((n, n)) < wall_density, CellKind.WALL, CellKind.FREE)
    cells = cells.astype(np.int8)
    free = np.argwhere(cells == CellKind.FREE)
    for y, x in free[rng.choice(len(free), size=n_dest, replace=False)]:
        cells[y, x] = CellKind.DESTINATION
    return Grid(cells)


def random_occupancy(rng, grid, density=0.2):
    return (rng.random(grid.shape) < density) & (grid.cells == CellKind.FREE)


CORRIDOR = "L....\n"


@pytest.fixture(scope="session")
def corridor():
    return parse_scenario(CORRIDOR, {"agent_count": 0}).grid


@pytest.fixture(scope="session")
def small_room():
    text = "\n".join([
        "###LL####RR###",
        "#............#",
        "#............#",
        "#SSSSSS......#",
        "#SSSSSS......#",
        "#SSSSSS......#",
        "##############",
    ])
    return parse_scenario(text, {"agent_count": 18})
