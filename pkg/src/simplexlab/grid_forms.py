"""Quadrature of the simplex form and of its single-tile pieces.

For functions ``F_0, ..., F_m`` of ``m`` variables the form is::

    Lambda(F) = int_{R^{m+1}} prod_i F_i(x_(i)) psi_S(x_0 + ... + x_m) dx

with ``x_(i)`` the point ``x`` with coordinate ``i`` removed. It is computed
with the tensor midpoint rule on a grid of spacing ``h = 2**-level`` whose
cell boundaries are multiples of ``h``. Dyadic tile boundaries of every
scale ``k >= -level`` then fall on cell boundaries, which makes the tile
decomposition an identity up to roundoff.

Cell centres are at ``lo_j + (n + 1/2) h``, so ``x_0 + ... + x_m`` only
takes values on a one-dimensional lattice and the kernel is evaluated once
per lattice point.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gridfunc import GridFunction
from .kernels import CutoffFunction, KernelSpec, ScaleWindow, psi, psi_window

__all__ = [
    "BudgetExceeded",
    "QuadratureGrid",
    "Tile",
    "evaluate_form",
    "evaluate_tile",
    "scale_tile_values",
    "single_scale_form",
    "tile_decomposition_check",
    "holder_ratio",
    "support_inflation",
    "observed_inflation",
]

DEFAULT_BUDGET = 2**25
CHUNK_ELEMENTS = 2**18


class BudgetExceeded(RuntimeError):
    """The quadrature grid would exceed the configured point budget."""


def _coords_of(i: int, m: int) -> list[int]:
    """Coordinates of R^{m+1} that F_i depends on, in axis order."""
    return [j for j in range(m + 1) if j != i]


def _check_functions(functions: Sequence[GridFunction]) -> int:
    m = len(functions) - 1
    if m < 1:
        raise ValueError("need at least two functions")
    if m > 3:
        raise ValueError("only m in {1, 2, 3} is supported")
    for i, F in enumerate(functions):
        if F.m != m:
            raise ValueError(f"F_{i} has dimension {F.m}, expected {m}")
    return m


@dataclass(frozen=True)
class QuadratureGrid:
    """Midpoint grid on a box in R^{m+1} with spacing ``2**-level``."""

    level: int
    box: tuple[tuple[float, float], ...]
    budget: int = DEFAULT_BUDGET
    threads: int = 1

    def __post_init__(self):
        h = self.h
        box = []
        for lo, hi in self.box:
            lo_s, hi_s = math.floor(lo / h) * h, math.ceil(hi / h) * h
            box.append((lo_s, max(hi_s, lo_s)))
        object.__setattr__(self, "box", tuple(box))
        if self.points > self.budget:
            raise BudgetExceeded(
                f"{self.points} quadrature points exceed budget {self.budget}; "
                "lower the level or raise the budget"
            )

    @property
    def h(self) -> float:
        return 2.0 ** -self.level

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(round((hi - lo) / self.h)) for lo, hi in self.box)

    @property
    def points(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def centers(self, j: int) -> np.ndarray:
        lo, _ = self.box[j]
        return lo + (np.arange(self.shape[j]) + 0.5) * self.h

    @classmethod
    def covering(cls, functions: Sequence[GridFunction], level: int | None = None,
                 budget: int = DEFAULT_BUDGET, threads: int = 1) -> "QuadratureGrid":
        """Smallest aligned grid containing the support of the integrand.

        Coordinate ``j`` only needs the overlap of the boxes of the
        functions that depend on it. Without ``level`` the finest function
        spacing (rounded to a power of two) is used.
        """
        m = _check_functions(functions)
        if level is None:
            h = min(float(F.spacing.min()) for F in functions)
            level = int(round(-math.log2(h)))
        box = []
        for j in range(m + 1):
            lo, hi = -math.inf, math.inf
            for i, F in enumerate(functions):
                if i == j:
                    continue
                flo, fhi = F.box[_coords_of(i, m).index(j)]
                lo, hi = max(lo, flo), min(hi, fhi)
            box.append((lo, max(lo, hi)))
        return cls(level=level, box=tuple(box), budget=budget, threads=threads)


@dataclass(frozen=True)
class Tile:
    """Dyadic cube ``2^k (m_0, ..., m_m) + [0, 2^k]^{m+1}`` with sum(m_i) = 0."""

    k: int
    offsets: tuple[int, ...]
    value: float | None = field(default=None, compare=False)

    def __post_init__(self):
        offsets = tuple(int(v) for v in self.offsets)
        if sum(offsets) != 0:
            raise ValueError(f"tile offsets must sum to zero, got {offsets}")
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def from_prefix(cls, k: int, prefix: Sequence[int], value: float | None = None) -> "Tile":
        prefix = tuple(int(v) for v in prefix)
        return cls(k, prefix + (-sum(prefix),), value)

    @property
    def m(self) -> int:
        return len(self.offsets) - 1

    @property
    def prefix(self) -> tuple[int, ...]:
        return self.offsets[:-1]

    @property
    def side(self) -> float:
        return 2.0**self.k

    @property
    def cube(self) -> tuple[tuple[float, float], ...]:
        s = self.side
        return tuple((s * o, s * (o + 1)) for o in self.offsets)

    @property
    def projection(self) -> tuple[tuple[float, float], ...]:
        """The cube ``I'`` formed by the first m coordinates."""
        return self.cube[:-1]

    @property
    def coefficient(self) -> float | None:
        if self.value is None:
            return None
        return math.ldexp(self.value, -self.k * self.m)

    def with_value(self, value: float) -> "Tile":
        return Tile(self.k, self.offsets, value)

    def contains_projection(self, other: "Tile") -> bool:
        """``other' subset self'`` for dyadic cubes with ``s(other) <= s(self)``."""
        d = self.k - other.k
        if d < 0:
            return False
        return all((o >> d) == p for o, p in zip(other.prefix, self.prefix))


# -- quadrature core ----------------------------------------------------


def _on_grid(F: GridFunction, centers: list[np.ndarray], h: float) -> np.ndarray:
    """Values of F on the tensor product of ``centers``."""
    aligned = True
    starts = []
    for ax, c in enumerate(centers):
        if c.size == 0:
            continue
        fh = F.spacing[ax]
        shift = (c[0] - F.centers(ax)[0]) / h
        if abs(fh - h) > 1e-12 * h or abs(shift - round(shift)) > 1e-9:
            aligned = False
            break
        starts.append(int(round(shift)))
    if aligned and all(c.size for c in centers):
        out = np.zeros(tuple(c.size for c in centers))
        src, dst = [], []
        for ax, (c, s) in enumerate(zip(centers, starts)):
            n = F.resolution[ax]
            a, b = max(s, 0), min(s + c.size, n)
            if b <= a:
                return out
            src.append(slice(a, b))
            dst.append(slice(a - s, b - s))
        out[tuple(dst)] = F.samples[tuple(src)]
        return out
    mesh = np.meshgrid(*centers, indexing="ij")
    return F(np.stack(mesh, axis=-1))


@dataclass
class _Prepared:
    """Function samples on a quadrature grid, reused across evaluations."""

    grid: QuadratureGrid
    m: int
    arrays: list[np.ndarray]

    @classmethod
    def build(cls, functions, grid: QuadratureGrid) -> "_Prepared":
        m = _check_functions(functions)
        if grid.dim != m + 1:
            raise ValueError(f"grid has dimension {grid.dim}, expected {m + 1}")
        arrays = []
        for i, F in enumerate(functions):
            centers = [grid.centers(j) for j in _coords_of(i, m)]
            arrays.append(_on_grid(F, centers, grid.h))
        return cls(grid, m, arrays)

    def lattice(self, starts, counts) -> np.ndarray:
        """Values of x_0 + ... + x_m over the index-sum lattice of a sub-block."""
        g = self.grid
        base = sum(g.box[j][0] + (starts[j] + 0.5) * g.h for j in range(self.m + 1))
        n = sum(c - 1 for c in counts) + 1
        return base + np.arange(n) * g.h

    def reduce(self, kernel_values: np.ndarray, starts, counts, keep_leading: bool = False):
        """Midpoint sum of prod F_i * kernel over the block ``starts + [0, counts)``.

        With ``keep_leading`` the last coordinate is summed out and an array
        over the first m coordinates is returned.
        """
        m, g = self.m, self.grid
        if any(c <= 0 for c in counts):
            return np.zeros(counts[:-1]) if keep_leading else 0.0
        blocks = []
        for i, A in enumerate(self.arrays):
            sl = tuple(slice(starts[j], starts[j] + counts[j]) for j in _coords_of(i, m))
            blocks.append(A[sl])
        row_elems = int(np.prod(counts[1:], dtype=np.int64))
        rows = max(1, CHUNK_ELEMENTS // max(row_elems, 1))
        local = [np.arange(c) for c in counts]

        def chunk(r0):
            r1 = min(r0 + rows, counts[0])
            prod = None
            for i, B in enumerate(blocks):
                if i == 0:
                    term = np.expand_dims(B, 0)
                else:
                    term = np.expand_dims(B[r0:r1], i)
                prod = term if prod is None else prod * term
            idx = local[0][r0:r1].reshape((-1,) + (1,) * m)
            for j in range(1, m + 1):
                idx = idx + local[j].reshape((1,) * j + (-1,) + (1,) * (m - j))
            vals = prod * kernel_values[idx]
            if keep_leading:
                return vals.sum(axis=-1)
            return float(vals.sum())

        starts_r = list(range(0, counts[0], rows))
        if g.threads > 1 and len(starts_r) > 1:
            with ThreadPoolExecutor(max_workers=g.threads) as pool:
                parts = list(pool.map(chunk, starts_r))
        else:
            parts = [chunk(r) for r in starts_r]
        if keep_leading:
            return np.concatenate(parts, axis=0) * g.cell_volume
        return math.fsum(parts) * g.cell_volume

    def full_block(self):
        shape = self.grid.shape
        return [0] * len(shape), list(shape)

    def projection_block(self, cube, starts, counts):
        """Restrict the first m coordinates of a block to the cube ``cube``."""
        g = self.grid
        starts, counts = list(starts), list(counts)
        for j, (lo, hi) in enumerate(cube):
            c = g.centers(j)
            a = int(np.searchsorted(c, lo, side="left"))
            b = int(np.searchsorted(c, hi, side="left"))
            a, b = max(a, starts[j]), min(b, starts[j] + counts[j])
            starts[j], counts[j] = a, max(b - a, 0)
        return starts, counts


def _window_values(kernel, cutoff, window, t):
    return psi_window(kernel, cutoff, window, t)


def evaluate_form(functions: Sequence[GridFunction], kernel: KernelSpec, cutoff: CutoffFunction,
                  window: ScaleWindow, grid: QuadratureGrid | None = None) -> float:
    """Midpoint approximation of the truncated simplex form ``Lambda_S(F_0, ..., F_m)``."""
    grid = grid or QuadratureGrid.covering(functions)
    prep = _Prepared.build(functions, grid)
    starts, counts = prep.full_block()
    kv = _window_values(kernel, cutoff, window, prep.lattice(starts, counts))
    return prep.reduce(kv, starts, counts)


def single_scale_form(functions, kernel, cutoff, k: int, grid: QuadratureGrid | None = None,
                      region=None) -> float:
    """The form with ``psi_k`` in place of ``psi_S``, optionally with the first
    m coordinates restricted to the cube ``region``."""
    grid = grid or QuadratureGrid.covering(functions)
    prep = _Prepared.build(functions, grid)
    return _single_scale(prep, kernel, cutoff, k, region)


def _single_scale(prep: _Prepared, kernel, cutoff, k, region=None) -> float:
    starts, counts = prep.full_block()
    if region is not None:
        starts, counts = prep.projection_block(region, starts, counts)
    kv = psi(kernel, cutoff, k, prep.lattice(starts, counts))
    return prep.reduce(kv, starts, counts)


def evaluate_tile(functions, kernel, cutoff, tile: Tile, grid: QuadratureGrid | None = None) -> float:
    """``Lambda_I``: the scale-``k`` form with ``x_i`` restricted to ``I_i`` for ``i < m``.

    The last coordinate is left free.
    """
    grid = grid or QuadratureGrid.covering(functions)
    prep = _Prepared.build(functions, grid)
    if tile.m != prep.m:
        raise ValueError("tile dimension does not match the functions")
    return _single_scale(prep, kernel, cutoff, tile.k, tile.projection)


def _tile_prefixes(grid: QuadratureGrid, m: int, k: int, region=None) -> list[tuple[int, ...]]:
    """Prefixes (m_0, ..., m_{m-1}) of scale-k tiles containing grid centres."""
    per_axis = []
    side = 2.0**k
    for j in range(m):
        c = grid.centers(j)
        if region is not None:
            lo, hi = region[j]
            c = c[(c >= lo) & (c < hi)]
        per_axis.append(np.unique(np.floor(c / side).astype(np.int64)))
    mesh = np.meshgrid(*per_axis, indexing="ij")
    return [tuple(int(v) for v in row) for row in np.stack([a.ravel() for a in mesh], axis=1)]


def scale_tile_values(functions, kernel, cutoff, k: int, grid: QuadratureGrid | None = None,
                      region=None, prepared: _Prepared | None = None) -> dict[tuple[int, ...], float]:
    """All ``Lambda_I`` at scale ``k`` from one sweep, keyed by tile prefix.

    Block sums of a single integrand array; :func:`evaluate_tile` is the
    per-tile path that this is checked against.
    """
    prep = prepared or _Prepared.build(functions, grid or QuadratureGrid.covering(functions))
    g, m = prep.grid, prep.m
    starts, counts = prep.full_block()
    if region is not None:
        starts, counts = prep.projection_block(region, starts, counts)
    kv = psi(kernel, cutoff, k, prep.lattice(starts, counts))
    partial = prep.reduce(kv, starts, counts, keep_leading=True)
    if partial.size == 0:
        return {}
    side = 2.0**k
    ids = []
    for j in range(m):
        c = g.centers(j)[starts[j]:starts[j] + counts[j]]
        ids.append(np.floor(c / side).astype(np.int64))
    mesh = np.meshgrid(*ids, indexing="ij")
    keys = np.stack([a.ravel() for a in mesh], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    sums = np.bincount(inverse.ravel(), weights=partial.ravel(), minlength=len(uniq))
    return {tuple(int(v) for v in u): float(s) for u, s in zip(uniq, sums)}


@dataclass
class TileDecompositionReport:
    window: ScaleWindow
    per_scale: dict[int, tuple[float, float, int]]
    tile_sum: float
    direct: float

    @property
    def difference(self) -> float:
        return self.tile_sum - self.direct

    @property
    def relative_difference(self) -> float:
        if self.direct == 0.0:
            return 0.0 if self.tile_sum == 0.0 else math.inf
        return abs(self.difference) / abs(self.direct)


def tile_decomposition_check(functions, kernel, cutoff, window: ScaleWindow,
                             grid: QuadratureGrid | None = None) -> TileDecompositionReport:
    """Compare ``sum_{k in S} sum_{I in I_k} Lambda_I`` with ``Lambda_S``.

    Each ``Lambda_I`` is an independent quadrature over its own sub-block;
    ``per_scale[k]`` holds ``(sum of tiles, untiled single-scale form, tile count)``.
    """
    grid = grid or QuadratureGrid.covering(functions)
    prep = _Prepared.build(functions, grid)
    per_scale = {}
    parts = []
    for k in window:
        values = []
        for prefix in _tile_prefixes(grid, prep.m, k):
            tile = Tile.from_prefix(k, prefix)
            values.append(_single_scale(prep, kernel, cutoff, k, tile.projection))
        tiles_k = math.fsum(values)
        per_scale[k] = (tiles_k, _single_scale(prep, kernel, cutoff, k), len(values))
        parts.append(tiles_k)
    starts, counts = prep.full_block()
    kv = _window_values(kernel, cutoff, window, prep.lattice(starts, counts))
    direct = prep.reduce(kv, starts, counts)
    return TileDecompositionReport(window, per_scale, math.fsum(parts), direct)


def holder_ratio(functions, kernel, cutoff, window: ScaleWindow, exponents: Sequence[float],
                 grid: QuadratureGrid | None = None) -> float:
    """``|Lambda_S| / (|S| prod_i ||F_i||_{p_i})`` for a Hoelder tuple ``p``."""
    if len(exponents) != len(functions):
        raise ValueError("need one exponent per function")
    inv = [0.0 if math.isinf(p) else 1.0 / p for p in exponents]
    if any(p <= 1 for p in exponents):
        raise ValueError("exponents must lie in (1, inf]")
    if abs(sum(inv) - 1.0) > 1e-12:
        raise ValueError(f"exponents are not a Hoelder tuple: sum 1/p = {sum(inv)}")
    denom = len(window) * math.prod(F.norm(p) for F, p in zip(functions, exponents))
    if denom == 0.0:
        raise ZeroDivisionError("zero denominator: some F_i has zero norm")
    return abs(evaluate_form(functions, kernel, cutoff, window, grid)) / denom


def support_inflation(m: int) -> float:
    """Smallest ``c`` such that the integrand of ``Lambda_I`` lives in ``cI``.

    ``I`` is dilated about its centre. The first m coordinates stay in I',
    while ``|x_0 + ... + x_m| in [2^k, 2^(k+2)]`` pushes the last
    coordinate to ``2^k [m_m - m - 4, m_m + 4]``, a distance
    ``2^k (m + 9/2)`` from the centre.
    """
    return 2.0 * m + 9.0


def observed_inflation(functions, kernel, cutoff, tile: Tile, grid: QuadratureGrid | None = None) -> float:
    """Smallest centre dilation of ``tile`` containing every grid cell where the
    integrand of ``Lambda_I`` is nonzero (0 if it vanishes identically)."""
    grid = grid or QuadratureGrid.covering(functions)
    prep = _Prepared.build(functions, grid)
    starts, counts = prep.projection_block(tile.projection, *prep.full_block())
    if any(c <= 0 for c in counts):
        return 0.0
    kv = psi(kernel, cutoff, tile.k, prep.lattice(starts, counts))
    m = prep.m
    prod = None
    for i, A in enumerate(prep.arrays):
        sl = tuple(slice(starts[j], starts[j] + counts[j]) for j in _coords_of(i, m))
        term = np.expand_dims(A[sl], i)
        prod = term if prod is None else prod * term
    idx = sum(np.arange(c).reshape((1,) * j + (-1,) + (1,) * (m - j)) for j, c in enumerate(counts))
    nz = np.nonzero(prod * kv[idx])
    if nz[0].size == 0:
        return 0.0
    factor = 0.0
    half = tile.side / 2.0
    for j, (lo, hi) in enumerate(tile.cube):
        centre = 0.5 * (lo + hi)
        c = grid.centers(j)[starts[j]:starts[j] + counts[j]][nz[j]]
        reach = np.max(np.abs(c - centre) + grid.h / 2.0)
        factor = max(factor, reach / half)
    return float(factor)
