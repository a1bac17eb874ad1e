"""Grids, scenario files, and the RiMEA test case 11 builder.

Coordinates are ``(x, y)`` tuples with ``x`` the column and ``y`` the row;
arrays are indexed ``[y, x]`` with the origin at the top-left.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

CELL_SIZE = 0.4  # metres

Cell = tuple[int, int]


class ParseError(ValueError):
    def __init__(self, message: str, row: int | None = None,
                 char: str | None = None, position: Cell | None = None):
        super().__init__(message)
        self.row = row
        self.char = char
        self.position = position


class ValidationError(ValueError):
    pass


class CellKind(enum.IntEnum):
    FREE = 0
    WALL = 1
    DESTINATION = 2


class Neighborhood(enum.Enum):
    VON_NEUMANN = 4
    MOORE = 8


class ExitLabel(enum.IntEnum):
    LEFT = 1
    RIGHT = 2


class ExitVariant(enum.IntEnum):
    V1_RECESSED = 1
    V2_FLUSH = 2
    V3_CORRIDOR = 3


# Moore offsets in row-major order; the VonNeumann subset keeps that order.
_MOORE = [(dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dx, dy) != (0, 0)]
_VON_NEUMANN = [(dx, dy) for dx, dy in _MOORE if dx == 0 or dy == 0]


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable lattice of :class:`CellKind` values."""

    cells: np.ndarray
    cell_size: float = CELL_SIZE

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int8)
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise ValidationError(f"grid must be a non-empty 2-D array, got shape {cells.shape}")
        if not np.isin(cells, [k.value for k in CellKind]).all():
            raise ValidationError("grid contains values that are not CellKind members")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def __getitem__(self, cell: Cell) -> CellKind:
        x, y = cell
        if not self.in_bounds(cell):
            raise IndexError(f"cell {cell} outside {self.width}x{self.height} grid")
        return CellKind(int(self.cells[y, x]))

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def destinations(self) -> list[Cell]:
        ys, xs = np.nonzero(self.cells == CellKind.DESTINATION)
        return [(int(x), int(y)) for y, x in zip(ys, xs)]

    @property
    def walls(self) -> np.ndarray:
        return self.cells == CellKind.WALL

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.cell_size == other.cell_size and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.cells.shape, self.cells.tobytes(), self.cell_size))


def neighbors(cell: Cell, grid: Grid, nb: Neighborhood) -> list[Cell]:
    """Non-wall cells adjacent to ``cell``, in row-major order.

    A diagonal step is refused when both cells flanking it are walls, so that
    Moore connectivity never squeezes through a wall corner.
    """
    x, y = cell
    cells = grid.cells
    h, w = cells.shape
    out = []
    for dx, dy in (_MOORE if nb is Neighborhood.MOORE else _VON_NEUMANN):
        nx, ny = x + dx, y + dy
        if not (0 <= nx < w and 0 <= ny < h) or cells[ny, nx] == CellKind.WALL:
            continue
        if dx and dy and cells[y, nx] == CellKind.WALL and cells[ny, x] == CellKind.WALL:
            continue
        out.append((nx, ny))
    return out


@dataclass(frozen=True, eq=False)
class Scenario:
    grid: Grid
    start_region: tuple[Cell, ...]
    agent_count: int = 1000
    exit_labels: Mapping[Cell, ExitLabel] = field(default_factory=dict)
    variant: str = "custom"

    def __post_init__(self):
        start = tuple(sorted({(int(x), int(y)) for x, y in self.start_region},
                             key=lambda c: (c[1], c[0])))
        object.__setattr__(self, "start_region", start)
        object.__setattr__(self, "exit_labels", dict(self.exit_labels))
        validate_scenario(self)

    def label_array(self) -> np.ndarray:
        """Exit label per cell (0 where the cell is not a destination)."""
        out = np.zeros(self.grid.shape, dtype=np.int8)
        for (x, y), label in self.exit_labels.items():
            out[y, x] = int(label)
        return out

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.grid == other.grid and self.start_region == other.start_region
                and self.agent_count == other.agent_count
                and self.exit_labels == other.exit_labels)

    def __hash__(self):
        return hash((self.grid, self.start_region, self.agent_count))


def validate_scenario(scenario: Scenario) -> None:
    """Raise :class:`ValidationError` if any scenario invariant is broken."""
    grid = scenario.grid
    dests = grid.destinations()
    if not dests:
        raise ValidationError("scenario has no destination cell")
    for cell in scenario.start_region:
        if not grid.in_bounds(cell) or grid[cell] is not CellKind.FREE:
            raise ValidationError(f"start cell {cell} is not a free cell")
    if scenario.agent_count < 0:
        raise ValidationError("agent_count must be non-negative")
    if scenario.agent_count > len(scenario.start_region):
        raise ValidationError(
            f"{scenario.agent_count} agents exceed {len(scenario.start_region)} start cells")
    labels = scenario.exit_labels
    if set(labels) != set(dests):
        raise ValidationError("every destination cell needs exactly one exit label")
    for cell, label in labels.items():
        if not isinstance(label, ExitLabel):
            raise ValidationError(f"bad exit label {label!r} at {cell}")


# --- scenario files -------------------------------------------------------

_GLYPHS = {"#": CellKind.WALL, ".": CellKind.FREE, "S": CellKind.FREE,
           "L": CellKind.DESTINATION, "R": CellKind.DESTINATION}


def _parse_config(config: str | Mapping[str, object] | None) -> dict[str, str]:
    if config is None:
        return {}
    if isinstance(config, Mapping):
        return {str(k): str(v) for k, v in config.items()}
    out = {}
    for lineno, line in enumerate(config.splitlines()):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"config line {lineno}: expected 'key = value'", row=lineno)
        out[key.strip()] = value.strip()
    return out


def parse_scenario(map_text: str | Iterable[str],
                   config: str | Mapping[str, object] | None = None) -> Scenario:
    """Build a :class:`Scenario` from a character map.

    Glyphs: ``#`` wall, ``.`` free, ``S`` start cell, ``L``/``R`` left/right
    exit destination. ``config`` may set ``agent_count`` and ``variant``.
    """
    rows = map_text.splitlines() if isinstance(map_text, str) else list(map_text)
    rows = [r.rstrip("\r") for r in rows]
    while rows and not rows[-1]:
        rows.pop()
    if not rows:
        raise ParseError("empty map")
    width = len(rows[0])
    cells = np.zeros((len(rows), width), dtype=np.int8)
    start, labels = [], {}
    for y, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"row {y} has length {len(row)}, expected {width}", row=y)
        for x, ch in enumerate(row):
            kind = _GLYPHS.get(ch)
            if kind is None:
                raise ParseError(f"unknown glyph {ch!r} at ({x},{y})", char=ch, position=(x, y))
            cells[y, x] = kind
            if ch == "S":
                start.append((x, y))
            elif ch == "L":
                labels[(x, y)] = ExitLabel.LEFT
            elif ch == "R":
                labels[(x, y)] = ExitLabel.RIGHT
    cfg = _parse_config(config)
    try:
        agent_count = int(cfg.get("agent_count", 1000))
    except ValueError as exc:
        raise ParseError(f"agent_count is not an integer: {cfg['agent_count']!r}") from exc
    return Scenario(Grid(cells), tuple(start), agent_count, labels,
                    variant=cfg.get("variant", "custom"))


def serialize_scenario(scenario: Scenario) -> str:
    """Render ``scenario`` in the scenario file format (header, blank line, map)."""
    glyph = {CellKind.WALL: "#", CellKind.FREE: "."}
    rows = [[glyph.get(CellKind(v), "?") for v in row] for row in scenario.grid.cells]
    for x, y in scenario.start_region:
        rows[y][x] = "S"
    for (x, y), label in scenario.exit_labels.items():
        rows[y][x] = "L" if label is ExitLabel.LEFT else "R"
    header = f"agent_count = {scenario.agent_count}\nvariant = {scenario.variant}\n"
    return header + "\n" + "\n".join("".join(r) for r in rows) + "\n"


def load_scenario(text: str) -> Scenario:
    """Parse a full scenario file: ``key = value`` header, blank line, map."""
    header, sep, body = text.partition("\n\n")
    if not sep:
        # No header block: the whole file is the map.
        return parse_scenario(text)
    return parse_scenario(body, header)


def read_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


# --- RiMEA test case 11 ---------------------------------------------------

@dataclass(frozen=True)
class Rimea11Params:
    """Layout of the two-exit room, all lengths in cells.

    The room interior is ``room_width`` x ``room_height``; both exits sit in
    the top wall. The start block hugs the bottom-left corner and the left
    exit is centred over it. ``right_exit_x`` of ``None`` places the right exit
    so that the right route is ``extra_path`` cells longer from the start
    block centroid.
    """

    room_width: int = 75
    room_height: int = 80
    start_width: int = 40
    start_height: int = 25
    exit_width: int = 2
    extra_path: float = 12.5
    left_exit_x: int | None = None
    right_exit_x: int | None = None
    corridor_length: int = 3
    agent_count: int = 1000


def _approach_length(variant: ExitVariant, params: Rimea11Params) -> int:
    # Free cells between the room and the destination row.
    return {ExitVariant.V1_RECESSED: 1, ExitVariant.V2_FLUSH: 0,
            ExitVariant.V3_CORRIDOR: params.corridor_length}[variant]


def _layout(variant: ExitVariant, params: Rimea11Params, left_x: int, right_x: int):
    approach = _approach_length(variant, params)
    # Rows: destination row, approach rows (the last one is the wall line
    # when approach > 0), room interior, bottom wall.
    top = approach if approach else 0
    room_y0 = top + 1
    height = room_y0 + params.room_height + 1
    width = params.room_width + 2
    cells = np.full((height, width), CellKind.WALL, dtype=np.int8)
    cells[room_y0:room_y0 + params.room_height, 1:1 + params.room_width] = CellKind.FREE
    labels = {}
    for x0, label in ((left_x, ExitLabel.LEFT), (right_x, ExitLabel.RIGHT)):
        xs = range(x0 + 1, x0 + 1 + params.exit_width)  # +1 for the side wall
        for x in xs:
            for y in range(1, top + 1):
                cells[y, x] = CellKind.FREE
            cells[0, x] = CellKind.DESTINATION
            labels[(x, 0)] = label
    sy0 = room_y0 + params.room_height - params.start_height
    start = [(x, y) for y in range(sy0, sy0 + params.start_height)
             for x in range(1, 1 + params.start_width)]
    return Grid(cells), start, labels


def _start_centroid(start) -> Cell:
    xs = [c[0] for c in start]
    ys = [c[1] for c in start]
    return int(round(sum(xs) / len(xs))), int(round(sum(ys) / len(ys)))


def exit_distance_gap(scenario: Scenario, cell: Cell | None = None) -> float:
    """Static-field value via the right exit minus via the left exit at ``cell``.

    ``cell`` defaults to the (rounded) start-region centroid. Each exit's
    field is computed with the other exit absent.
    """
    from .fields import compute_static

    cell = _start_centroid(scenario.start_region) if cell is None else cell
    values = {}
    for label in ExitLabel:
        cells = np.array(scenario.grid.cells)
        for (x, y), lab in scenario.exit_labels.items():
            if lab is not label:
                cells[y, x] = CellKind.WALL
        values[label] = compute_static(Grid(cells)).values[cell[1], cell[0]]
    return float(values[ExitLabel.RIGHT] - values[ExitLabel.LEFT])


def build_rimea11(variant: ExitVariant | int = ExitVariant.V2_FLUSH,
                  params: Rimea11Params | None = None) -> Scenario:
    """Two-exit room of RiMEA test case 11 with one of three exit shapes."""
    variant = ExitVariant(variant)
    params = params or Rimea11Params()
    p = params
    if p.exit_width < 1 or p.room_width < 1 or p.room_height < 1:
        raise ValidationError("room and exit dimensions must be positive")
    if p.start_width > p.room_width or p.start_height > p.room_height:
        raise ValidationError("start block does not fit in the room")
    if p.start_width * p.start_height < p.agent_count:
        raise ValidationError("start block smaller than agent_count")
    left_x = p.left_exit_x
    if left_x is None:
        left_x = (p.start_width - p.exit_width) // 2
    if not 0 <= left_x <= p.room_width - p.exit_width:
        raise ValidationError("left exit outside the top wall")

    def make(right_x, shape=variant):
        grid, start, labels = _layout(shape, p, left_x, right_x)
        return Scenario(grid, tuple(start), p.agent_count, labels, variant=str(int(shape)))

    lo = left_x + p.exit_width + 1  # keep a wall cell between the exits
    hi = p.room_width - p.exit_width
    if p.right_exit_x is not None:
        if not lo <= p.right_exit_x <= hi:
            raise ValidationError("right exit overlaps the left exit or leaves the wall")
        return make(p.right_exit_x)
    if lo > hi:
        raise ValidationError("room too narrow for two exits")
    return make(_place_right_exit(make, p.extra_path, lo, hi))


def _place_right_exit(make, extra_path: float, lo: int, hi: int) -> int:
    """Door offset whose path-length gap at the start centroid is closest to ``extra_path``.

    Measured on the flush layout so all three variants share door positions.
    The gap grows monotonically with the offset, so bisect.
    """
    best, best_err = None, np.inf
    a, b = lo, hi
    while a <= b:
        mid = (a + b) // 2
        gap = exit_distance_gap(make(mid, ExitVariant.V2_FLUSH))
        if abs(gap - extra_path) < best_err:
            best, best_err = mid, abs(gap - extra_path)
        if gap < extra_path:
            a = mid + 1
        else:
            b = mid - 1
    if best_err > 1.0:
        raise ValidationError(
            f"room too small for an extra path of {extra_path} cells (best error {best_err:.2f})")
    return best
