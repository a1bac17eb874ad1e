"""Distance potentials on the cell grid.

Two unit-cost flood fills, one over edge neighbours (giving Manhattan
distance for mutually visible cells) and one over edge-and-corner neighbours
(Chebyshev), are merged cell by cell into an approximately Euclidean field:

    d_min = d_manhattan - d_chebyshev
    d_v1  = sqrt(d_chebyshev**2 + d_min**2)

The dynamic variant repeats both fills with occupied cells costing ``s_add``
instead of 1 and subtracts the empty-geometry field, leaving the extra path
cost a crowd casts upstream of itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .geometry import CellKind, Grid, Neighborhood

INF = np.inf


class ContractError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Read-only per-cell values; ``inf`` marks walls and unreachable cells."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __getitem__(self, cell):
        x, y = cell
        return float(self.values[y, x])

    def __eq__(self, other):
        if not isinstance(other, PotentialField):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def to_text(self) -> str:
        """Rows of space-separated values, ``inf`` for unreachable cells."""
        return "".join(
            " ".join("inf" if np.isinf(v) else repr(float(v)) for v in row) + "\n"
            for row in self.values)

    @classmethod
    def from_text(cls, text: str) -> "PotentialField":
        rows = [[float(tok) for tok in line.split()] for line in text.splitlines() if line.strip()]
        return cls(np.array(rows))


def _occupancy_array(grid: Grid, occupancy) -> np.ndarray:
    if occupancy is None:
        return np.zeros(grid.shape, dtype=bool)
    occ = np.asarray(occupancy, dtype=bool)
    if occ.shape != grid.shape:
        raise ContractError(f"occupancy shape {occ.shape} does not match grid {grid.shape}")
    if (occ & grid.walls).any():
        raise ContractError("occupancy marks a wall cell")
    return occ


def cost_map(grid: Grid, occupancy, s_add: float) -> np.ndarray:
    """Entry cost per cell: 1 if empty, ``s_add`` if occupied."""
    if s_add < 1:
        raise ContractError(f"s_add must be >= 1, got {s_add}")
    occ = _occupancy_array(grid, occupancy)
    return np.where(occ, float(s_add), 1.0)


def flood_fill(grid: Grid, occupancy=None, nb: Neighborhood = Neighborhood.VON_NEUMANN,
               s_add: float = 1.0) -> PotentialField:
    """Weighted fill outward from every destination cell.

    Entering an empty cell adds 1, entering an occupied one adds ``s_add``.
    Because costs differ this is a priority-ordered expansion, not BFS.
    """
    cost = cost_map(grid, occupancy, s_add)
    return PotentialField(_kernels.weighted_fill(grid.cells, cost, nb is Neighborhood.MOORE))


def combine_v1(manhattan: PotentialField, chebyshev: PotentialField) -> PotentialField:
    m, c = manhattan.values, chebyshev.values
    if m.shape != c.shape:
        raise ContractError(f"field shapes differ: {m.shape} vs {c.shape}")
    m_inf, c_inf = np.isinf(m), np.isinf(c)
    if (m_inf != c_inf).any():
        raise ContractError("fields disagree on which cells are reachable")
    finite = ~m_inf
    if (m[finite] < c[finite]).any():
        raise ContractError("manhattan value below chebyshev value")
    return PotentialField(_kernels.combine_v1(m, c))


def minimum_norm(manhattan: PotentialField, chebyshev: PotentialField) -> PotentialField:
    """``d_manhattan - d_chebyshev`` (``inf`` where unreachable)."""
    m, c = manhattan.values, chebyshev.values
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(m), INF, m - c)
    return PotentialField(out)


def v1_field(grid: Grid, occupancy=None, s_add: float = 1.0) -> PotentialField:
    return combine_v1(flood_fill(grid, occupancy, Neighborhood.VON_NEUMANN, s_add),
                      flood_fill(grid, occupancy, Neighborhood.MOORE, s_add))


@lru_cache(maxsize=32)
def _static_cached(grid: Grid) -> PotentialField:
    return v1_field(grid)


def compute_static(grid: Grid) -> PotentialField:
    """V1 field of the empty geometry (cached per grid)."""
    return _static_cached(grid)


def compute_s_dyn(grid: Grid, occupancy, static_field: PotentialField | None = None,
                  s_add: float = 10.0) -> PotentialField:
    """Occupancy-weighted V1 field minus the empty-geometry field.

    Zero on unreachable cells (``inf - inf`` is not propagated).
    """
    static = compute_static(grid) if static_field is None else static_field
    if static.shape != grid.shape:
        raise ContractError("static field does not match grid")
    dyn = v1_field(grid, occupancy, s_add).values
    return PotentialField(_s_dyn_from(dyn, static.values))


def _s_dyn_from(dynamic: np.ndarray, static: np.ndarray) -> np.ndarray:
    out = np.zeros_like(static)
    finite = ~np.isinf(static)
    out[finite] = dynamic[finite] - static[finite]
    return out


def s_dyn_array(cells: np.ndarray, occupied: np.ndarray, static: np.ndarray,
                s_add: float) -> np.ndarray:
    """Array-level ``compute_s_dyn`` for the simulation loop (no validation)."""
    cost = np.where(occupied, float(s_add), 1.0)
    m = _kernels.weighted_fill(cells, cost, False)
    c = _kernels.weighted_fill(cells, cost, True)
    return _s_dyn_from(_kernels.combine_v1(m, c), static)


def single_source_grid(width: int, height: int, source) -> Grid:
    """Empty ``width`` x ``height`` grid with one destination cell."""
    cells = np.full((height, width), CellKind.FREE, dtype=np.int8)
    x, y = source
    cells[y, x] = CellKind.DESTINATION
    return Grid(cells)
