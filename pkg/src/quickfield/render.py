"""Binary PGM/PPM rasters of fields and crowd snapshots, one pixel per cell."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .fields import PotentialField, combine_v1, flood_fill, minimum_norm
from .geometry import CellKind, Grid, Neighborhood

WALL_GRAY = 128
BLACK = (0, 0, 0)
WHITE = (255, 255, 255)
GRAY = (WALL_GRAY, WALL_GRAY, WALL_GRAY)
GREEN = (0, 255, 0)


@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit gray (``H x W``) or RGB (``H x W x 3``) pixels, origin top-left."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if px.ndim not in (2, 3) or (px.ndim == 3 and px.shape[2] != 3):
            raise ValueError(f"unsupported pixel array shape {px.shape}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def is_rgb(self) -> bool:
        return self.pixels.ndim == 3

    def scaled(self, factor: int) -> "RasterImage":
        if factor < 1:
            raise ValueError("scale factor must be >= 1")
        px = np.repeat(np.repeat(self.pixels, factor, axis=0), factor, axis=1)
        return RasterImage(px)

    def to_bytes(self) -> bytes:
        magic = b"P6" if self.is_rgb else b"P5"
        header = magic + f"\n{self.width} {self.height}\n255\n".encode("ascii")
        return header + self.pixels.tobytes()

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)


_PNM_HEADER = re.compile(rb"(P[56])\s+(\d+)\s+(\d+)\s+(\d+)\s")


def read_pnm(data: bytes) -> RasterImage:
    """Parse the P5/P6 files written by :meth:`RasterImage.to_bytes`."""
    m = _PNM_HEADER.match(data)
    if m is None or int(m.group(4)) != 255:
        raise ValueError("only 8-bit P5/P6 is supported")
    w, h = int(m.group(2)), int(m.group(3))
    channels = 3 if m.group(1) == b"P6" else 1
    px = np.frombuffer(data[m.end(): m.end() + w * h * channels], dtype=np.uint8)
    return RasterImage(px.reshape((h, w, 3) if channels == 3 else (h, w)))


def normalize(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Min-max map finite ``values`` under ``mask`` to 0..255 (flat -> 0)."""
    out = np.zeros(values.shape, dtype=np.uint8)
    sel = mask & np.isfinite(values)
    if not sel.any():
        return out
    lo, hi = values[sel].min(), values[sel].max()
    if hi > lo:
        out[sel] = np.rint((values[sel] - lo) / (hi - lo) * 255.0).astype(np.uint8)
    return out


def render_field(field: PotentialField, grid: Grid, rgb: bool = False,
                 scale: int = 1) -> RasterImage:
    """Brighter pixels for larger values; walls mid-gray.

    In RGB mode destination cells are green; in grayscale they carry their
    (normalised) field value like any other cell.
    """
    if field.shape != grid.shape:
        raise ValueError(f"field {field.shape} and grid {grid.shape} differ")
    kinds = grid.cells
    walls = kinds == CellKind.WALL
    level = normalize(field.values, ~walls)
    level[walls] = WALL_GRAY
    # Unreachable free cells are drawn like walls.
    level[~walls & np.isinf(field.values)] = WALL_GRAY
    if rgb:
        px = np.repeat(level[:, :, None], 3, axis=2)
        px[kinds == CellKind.DESTINATION] = GREEN
    else:
        px = level
    return RasterImage(px).scaled(scale) if scale != 1 else RasterImage(px)


def render_snapshot(state, scale: int = 1) -> RasterImage:
    """Free space black, walls gray, destinations green, agents white."""
    kinds = state.scenario.grid.cells
    px = np.zeros(kinds.shape + (3,), dtype=np.uint8)
    px[kinds == CellKind.WALL] = GRAY
    px[kinds == CellKind.DESTINATION] = GREEN
    px[state.occupancy()] = WHITE
    return RasterImage(px).scaled(scale) if scale != 1 else RasterImage(px)


def metric_fields(grid: Grid) -> dict[str, PotentialField]:
    manhattan = flood_fill(grid, None, Neighborhood.VON_NEUMANN)
    chebyshev = flood_fill(grid, None, Neighborhood.MOORE)
    return {
        "manhattan": manhattan,
        "chebyshev": chebyshev,
        "minimum": minimum_norm(manhattan, chebyshev),
        "v1": combine_v1(manhattan, chebyshev),
    }


def render_metric_comparison(grid: Grid, scale: int = 1) -> dict[str, RasterImage]:
    """Gray images of the Manhattan, Chebyshev, minimum-norm and V1 fields."""
    return {name: render_field(f, grid, scale=scale) for name, f in metric_fields(grid).items()}
