"""Hierarchical dyadic partition of the unit cube.

Cells are stored as (depth, integer coordinates) so that hierarchy checks
are exact bit operations and no floating-point error accumulates. Point
membership uses half-open intervals, with the top face of the cube folded
into the last cell, so every point of [0,1]^d belongs to exactly one cell
per depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator

import numpy as np

# coords are packed into a single int64 for vectorised lookups, so depth*dim
# must stay below 63 bits
MAX_DEPTH = 62


class OverlapError(ValueError):
    """Inserting a cell whose footprint overlaps an existing region cell."""


@dataclass(frozen=True)
class Cell:
    depth: int
    coords: tuple[int, ...]

    def __post_init__(self):
        if self.depth < 0 or self.depth > MAX_DEPTH:
            raise ValueError(f"depth must be in [0, {MAX_DEPTH}], got {self.depth}")
        if len(self.coords) == 0:
            raise ValueError("coords must have at least one dimension")
        side = 1 << self.depth
        if any(c < 0 or c >= side for c in self.coords):
            raise ValueError(f"coords {self.coords} out of range for depth {self.depth}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def lower(self) -> np.ndarray:
        return np.array(self.coords, dtype=float) * 2.0 ** (-self.depth)

    def upper(self) -> np.ndarray:
        return (np.array(self.coords, dtype=float) + 1.0) * 2.0 ** (-self.depth)

    def ancestor(self, depth: int) -> "Cell":
        if depth > self.depth:
            raise ValueError("ancestor depth must not exceed cell depth")
        shift = self.depth - depth
        return Cell(depth, tuple(c >> shift for c in self.coords))

    def contains_point(self, x) -> bool:
        return cell_at(np.asarray(x, dtype=float), self.depth) == self


def cell_at(x, depth: int) -> Cell:
    """Cell of the depth-`depth` grid containing x; top faces go to the last cell."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    side = 1 << depth
    idx = np.floor(x * side).astype(np.int64)
    idx = np.clip(idx, 0, side - 1)
    return Cell(depth, tuple(int(i) for i in idx))


def center(cell: Cell) -> np.ndarray:
    return (np.array(cell.coords, dtype=float) + 0.5) * 2.0 ** (-cell.depth)


def diameter(depth: int, dim: int) -> float:
    """Euclidean diameter of a depth-`depth` cell in dimension `dim`."""
    if depth < 0 or dim < 1:
        raise ValueError("need depth >= 0 and dim >= 1")
    return math.sqrt(dim) * 2.0 ** (-depth)


def children(cell: Cell) -> list[Cell]:
    """The 2^d cells of the next depth partitioning `cell`."""
    base = tuple(2 * c for c in cell.coords)
    out = []
    for offsets in product((0, 1), repeat=cell.dim):
        out.append(Cell(cell.depth + 1, tuple(b + o for b, o in zip(base, offsets))))
    return out


def children_coords(coords: np.ndarray) -> np.ndarray:
    """Vectorised children: (n, d) int coords at depth l -> (n * 2^d, d) at depth l+1."""
    coords = np.asarray(coords, dtype=np.int64)
    n, d = coords.shape
    offsets = np.array(list(product((0, 1), repeat=d)), dtype=np.int64)
    out = (2 * coords)[:, None, :] + offsets[None, :, :]
    return out.reshape(n * (1 << d), d)


def inflated_box(cell: Cell) -> tuple[np.ndarray, np.ndarray]:
    """Cell enlarged by one side length in every direction; not clipped to [0,1]^d."""
    h = 2.0 ** (-cell.depth)
    lo = cell.lower() - h
    hi = cell.upper() + h
    return lo, hi


def sample_uniform_inflated(cell: Cell, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    lo, hi = inflated_box(cell)
    u = rng.random((size, cell.dim))
    return lo + u * (hi - lo)


def subcells_at_depth(cell: Cell, depth: int) -> list[Cell]:
    """All cells of the depth-`depth` grid contained in `cell`."""
    if depth < cell.depth:
        raise ValueError("target depth must be >= cell depth")
    return [Cell(depth, tuple(c)) for c in subcell_coords(np.array([cell.coords]), cell.depth, depth)]


def subcell_coords(coords: np.ndarray, depth: int, target: int) -> np.ndarray:
    """Vectorised subcell enumeration: (n, d) at `depth` -> (n * 2^(d*(target-depth)), d)."""
    if target < depth:
        raise ValueError("target depth must be >= cell depth")
    coords = np.asarray(coords, dtype=np.int64)
    n, d = coords.shape
    k = target - depth
    side = 1 << k
    ranges = [np.arange(side, dtype=np.int64)] * d
    mesh = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d)
    out = (coords << k)[:, None, :] + mesh[None, :, :]
    return out.reshape(n * side**d, d)


def encode_coords(coords: np.ndarray, depth: int) -> np.ndarray:
    """Pack (n, d) integer coords at one depth into sortable int64 keys."""
    coords = np.asarray(coords, dtype=np.int64)
    d = coords.shape[1]
    if depth * d > MAX_DEPTH:
        raise ValueError(f"depth {depth} too deep to encode in {d} dimensions")
    key = np.zeros(coords.shape[0], dtype=np.int64)
    for i in range(d):
        key = (key << depth) | coords[:, i]
    return key


class Region:
    """A set of pairwise-disjoint dyadic cells at possibly mixed depths.

    Per-depth member sets give O(1) exact lookups; a prefix counter makes
    ancestor/descendant overlap checks O(depth) per insertion.
    """

    def __init__(self, dim: int, cells: Iterable[Cell] = ()):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self._levels: dict[int, set[tuple[int, ...]]] = {}
        # (depth, coords) -> number of member cells at or below that prefix
        self._prefix: dict[tuple[int, tuple[int, ...]], int] = {}
        self._volume = 0.0
        for c in cells:
            self.add(c)

    def __len__(self) -> int:
        return sum(len(s) for s in self._levels.values())

    def __contains__(self, cell: Cell) -> bool:
        return cell.coords in self._levels.get(cell.depth, ())

    def cells(self) -> Iterator[Cell]:
        for depth in sorted(self._levels):
            for coords in self._levels[depth]:
                yield Cell(depth, coords)

    @property
    def volume(self) -> float:
        return self._volume

    @property
    def max_depth(self) -> int:
        return max(self._levels) if self._levels else 0

    def covers(self, cell: Cell) -> bool:
        """True iff `cell` lies inside some member cell (or is one)."""
        for depth in self._levels:
            if depth <= cell.depth:
                shift = cell.depth - depth
                anc = tuple(c >> shift for c in cell.coords)
                if anc in self._levels[depth]:
                    return True
        return False

    def contains_descendant(self, cell: Cell) -> bool:
        """True iff some member cell lies strictly inside `cell`."""
        n_below = self._prefix.get((cell.depth, cell.coords), 0)
        return n_below > (1 if cell in self else 0)

    def overlaps(self, cell: Cell) -> bool:
        return self.covers(cell) or self._prefix.get((cell.depth, cell.coords), 0) > 0

    def add(self, cell: Cell) -> None:
        if cell.dim != self.dim:
            raise ValueError("cell dimension does not match region")
        if self.overlaps(cell):
            raise OverlapError(f"cell {cell} overlaps the region")
        self._levels.setdefault(cell.depth, set()).add(cell.coords)
        for depth in range(cell.depth + 1):
            shift = cell.depth - depth
            anc = tuple(c >> shift for c in cell.coords)
            self._prefix[(depth, anc)] = self._prefix.get((depth, anc), 0) + 1
        self._volume += 2.0 ** (-cell.depth * self.dim)

    def add_many(self, depth: int, coords: np.ndarray) -> None:
        for row in np.asarray(coords, dtype=np.int64):
            self.add(Cell(depth, tuple(int(v) for v in row)))

    def copy(self) -> "Region":
        r = Region(self.dim)
        r._levels = {d: set(s) for d, s in self._levels.items()}
        r._prefix = dict(self._prefix)
        r._volume = self._volume
        return r

    def contains_points(self, X: np.ndarray) -> np.ndarray:
        """Vectorised membership for an (n, d) array of points."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        mask = np.zeros(X.shape[0], dtype=bool)
        for depth in sorted(self._levels):
            members = self._levels[depth]
            if not members:
                continue
            side = 1 << depth
            idx = np.clip(np.floor(X * side).astype(np.int64), 0, side - 1)
            keys = encode_coords(idx, depth)
            table = np.sort(encode_coords(np.array(sorted(members)), depth))
            pos = np.searchsorted(table, keys)
            pos = np.minimum(pos, len(table) - 1)
            mask |= table[pos] == keys
        return mask

    def contains_point(self, x) -> bool:
        return bool(self.contains_points(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def intervals(self) -> list[tuple[float, float]]:
        """Merged footprint intervals; only meaningful for dim == 1."""
        if self.dim != 1:
            raise ValueError("intervals() requires dim == 1")
        spans = sorted((c.lower()[0], c.upper()[0]) for c in self.cells())
        merged: list[tuple[float, float]] = []
        for lo, hi in spans:
            if merged and lo <= merged[-1][1] + 1e-15:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return merged

    def to_list(self) -> list[tuple[int, list[int]]]:
        return [(c.depth, list(c.coords)) for c in self.cells()]

    @classmethod
    def from_list(cls, dim: int, data: Iterable) -> "Region":
        return cls(dim, (Cell(int(d), tuple(int(v) for v in coords)) for d, coords in data))


def region_difference(cells: Iterable[Cell], minus: Region) -> list[Cell]:
    """Footprint difference, re-expressed as disjoint dyadic cells.

    Cells partially covered by `minus` are refined down to the depth of the
    covering cells, so the result is always an exact dyadic representation.
    """
    out: list[Cell] = []
    stack = list(cells)
    while stack:
        cell = stack.pop()
        if minus.covers(cell):
            continue
        if minus.overlaps(cell):
            stack.extend(children(cell))
        else:
            out.append(cell)
    return out


def region_union(base: Region, extra: Iterable[Cell]) -> Region:
    """Union of footprints; incoming cells are refined around existing ones."""
    out = base.copy()
    for cell in extra:
        for piece in region_difference([cell], out):
            out.add(piece)
    return out


def regions_intersect(a: Region, b: Region) -> bool:
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    return any(large.overlaps(c) for c in small.cells())
