"""Tile fields, trees, the dyadic maximal function and tree selection.

A tile at scale ``k`` is identified by its prefix ``(m_0, ..., m_{m-1})``;
the projection ``I'`` is ``2^k prefix + [0, 2^k]^m``. For ``s(I) <= s(J)``
the dyadic containment ``I' in J'`` is ``prefix_I >> (k_J - k_I) == prefix_J``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid_forms import QuadratureGrid, Tile, _Prepared, _single_scale, scale_tile_values
from .gridfunc import GridFunction
from .kernels import ScaleWindow

__all__ = [
    "TileField",
    "maximal_function",
    "loomis_whitney_diagnostic",
    "tree_sum",
    "single_tree_search",
    "corollary_budget",
    "small_tiles_sum",
    "select_trees",
    "SelectionResult",
    "coverage_check",
]

Key = tuple[int, tuple[int, ...]]


def _ancestor(key: Key, d: int) -> Key:
    k, p = key
    return k + d, tuple(o >> d for o in p)


def _contains(top: Key, key: Key) -> bool:
    d = top[0] - key[0]
    return d >= 0 and _ancestor(key, d)[1] == top[1]


@dataclass(frozen=True, eq=False)
class TileField:
    """Finitely many tiles with their values ``Lambda_I``; ``a_I = 2^{-km} Lambda_I``."""

    m: int
    values: dict[Key, float]
    window: ScaleWindow | None = None

    def __post_init__(self):
        clean = {}
        for (k, p), v in self.values.items():
            p = tuple(int(o) for o in p)
            if len(p) != self.m:
                raise ValueError(f"tile prefix {p} does not have length {self.m}")
            clean[(int(k), p)] = float(v)
        object.__setattr__(self, "values", dict(sorted(clean.items())))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def keys(self) -> list[Key]:
        return list(self.values)

    def coefficient(self, key: Key) -> float:
        return math.ldexp(self.values[key], -key[0] * self.m)

    def coefficients(self) -> dict[Key, float]:
        return {key: self.coefficient(key) for key in self.values}

    def tile(self, key: Key) -> Tile:
        return Tile.from_prefix(key[0], key[1], self.values[key])

    @classmethod
    def from_coefficients(cls, m: int, coefficients: dict[Key, float],
                          window: ScaleWindow | None = None) -> "TileField":
        return cls(m, {(k, p): math.ldexp(a, k * m) for (k, p), a in coefficients.items()}, window)

    @classmethod
    def from_functions(cls, functions: Sequence[GridFunction], kernel, cutoff, window: ScaleWindow,
                       grid: QuadratureGrid | None = None) -> "TileField":
        """All tiles at the scales of ``window`` meeting the grid, by block sums."""
        grid = grid or QuadratureGrid.covering(functions)
        prep = _Prepared.build(functions, grid)
        values = {}
        for k in window:
            for p, v in scale_tile_values(functions, kernel, cutoff, k, grid, prepared=prep).items():
                values[(k, p)] = v
        return cls(len(functions) - 1, values, window)

    @classmethod
    def random(cls, m: int, scales: Sequence[int], extent: int, seed: int,
               density: float = 0.6, scale: float = 1.0) -> "TileField":
        """Seeded field: every tile whose projection lies in ``[0, 2^extent)^m``
        is kept with probability ``density`` and gets a coefficient
        ``scale * N(0, 1)``."""
        rng = np.random.default_rng(seed)
        coeffs = {}
        for k in sorted(scales):
            n = 1 << max(extent - k, 0)
            for p in np.ndindex(*(n,) * m):
                if rng.random() < density:
                    coeffs[(k, tuple(int(o) for o in p))] = float(scale * rng.standard_normal())
        return cls.from_coefficients(m, coeffs)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("# simplexlab tilefield v1\n")
        buf.write(",".join(["k"] + [f"m_{i}" for i in range(self.m)] + ["lambda_I", "a_I"]) + "\n")
        for key, v in self.values.items():
            row = [str(key[0])] + [str(o) for o in key[1]] + [repr(v), repr(self.coefficient(key))]
            buf.write(",".join(row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


# -- maximal function ----------------------------------------------------


def _dyadic_maximal(values: np.ndarray, exponent: float) -> np.ndarray:
    """Max over dyadic cell-index cubes inside the array of the L^exponent mean."""
    power = np.abs(values) ** exponent
    best = power.copy()
    shape = power.shape
    b = 2
    while all(b <= n for n in shape):
        trimmed = tuple((n // b) * b for n in shape)
        block = power[tuple(slice(0, t) for t in trimmed)]
        split = []
        for t in trimmed:
            split += [t // b, b]
        means = block.reshape(split).mean(axis=tuple(range(1, 2 * len(shape), 2)))
        up = means
        for ax in range(len(shape)):
            up = np.repeat(up, b, axis=ax)
        view = best[tuple(slice(0, t) for t in trimmed)]
        np.maximum(view, up, out=view)
        b *= 2
    return best ** (1.0 / exponent)


def maximal_function(F: GridFunction, m: float) -> GridFunction:
    """Dyadic maximal function ``M_m F``.

    At each cell the largest ``(mean_Q |F|^m)^(1/m)`` over dyadic cubes
    ``Q`` of the cell grid (side 1, 2, 4, ... cells, aligned at index 0,
    entirely inside the grid) that contain the cell.
    """
    if m < 1:
        raise ValueError("exponent m must be >= 1")
    return F.with_samples(_dyadic_maximal(F.samples, m))


@dataclass(frozen=True)
class _PaddedMaximal:
    """``M_m F`` on a zero-padded power-of-two grid, looked up with clamping."""

    lo: np.ndarray
    h: np.ndarray
    values: np.ndarray

    @classmethod
    def build(cls, F: GridFunction, exponent: float) -> "_PaddedMaximal":
        n = np.array(F.resolution)
        size = 1 << int(math.ceil(math.log2(3 * n.max())))
        padded = np.zeros((size,) * F.m)
        offset = n.copy()
        padded[tuple(slice(o, o + r) for o, r in zip(offset, n))] = F.samples
        h = F.spacing
        lo = np.array([b[0] for b in F.box]) - offset * h
        return cls(lo, h, _dyadic_maximal(padded, exponent))

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        idx = np.floor((pts - self.lo) / self.h).astype(np.int64)
        idx = np.clip(idx, 0, np.array(self.values.shape) - 1)
        return self.values[tuple(idx[..., j] for j in range(idx.shape[-1]))]


def _diagonal_samples(key: Key, per_axis: int) -> np.ndarray:
    """Points of ``I'`` with the last coordinate ``-sum``: shape ``(n, m+1)``."""
    k, p = key
    side = 2.0**k
    u = (np.arange(per_axis) + 0.5) / per_axis
    axes = [side * (o + u) for o in p]
    mesh = np.meshgrid(*axes, indexing="ij")
    first = np.stack([a.ravel() for a in mesh], axis=1)
    return np.concatenate([first, -first.sum(axis=1, keepdims=True)], axis=1)


@dataclass
class LoomisWhitneyReport:
    ratios: dict[Key, float]
    minima: dict[Key, float]
    max_ratio: float
    violations: list[Key]

    @property
    def constant(self) -> float:
        """Empirical constant in ``|a_I| <= c prod_i min M_m F_i``."""
        return self.max_ratio


def loomis_whitney_diagnostic(tiles: TileField, functions: Sequence[GridFunction], m: float | None = None,
                              samples_per_axis: int = 4) -> LoomisWhitneyReport:
    """Ratio ``|a_I| / prod_i min_{pi_Delta I} M_m F_i(x_(i))`` for every tile.

    ``pi_Delta I`` is sampled on ``samples_per_axis^m`` points of ``I'``
    with the last coordinate set to minus their sum. A vanishing product
    with ``a_I != 0`` is listed as a violation.
    """
    dim = tiles.m
    if len(functions) != dim + 1:
        raise ValueError("need m+1 functions for the tile field")
    exponent = dim if m is None else m
    maxfs = [_PaddedMaximal.build(F, exponent) for F in functions]
    ratios, minima, violations = {}, {}, []
    for key in tiles:
        pts = _diagonal_samples(key, samples_per_axis)
        prod = np.ones(pts.shape[0])
        for i, M in enumerate(maxfs):
            prod = prod * M(np.delete(pts, i, axis=1))
        low = float(prod.min())
        a = abs(tiles.coefficient(key))
        minima[key] = low
        if a == 0.0:
            continue
        if low == 0.0:
            violations.append(key)
            continue
        ratios[key] = a / low
    max_ratio = max(ratios.values(), default=0.0)
    return LoomisWhitneyReport(ratios, minima, max_ratio, violations)


# -- trees ---------------------------------------------------------------


def _check_top_window(top: Tile, window: ScaleWindow):
    if window.hi != top.k:
        raise ValueError(f"window must end at the top scale {top.k}, got {window}")


def tree_sum(functions, kernel, cutoff, top: Tile, window: ScaleWindow,
             grid: QuadratureGrid | None = None, path: str = "closed") -> float:
    """``sum_{k in S} sum_{I in I_k, I' in J'} Lambda_I``.

    ``path="closed"`` restricts the single-scale form to ``J'`` directly;
    ``path="tiles"`` adds up independently integrated tiles.
    """
    _check_top_window(top, window)
    grid = grid or QuadratureGrid.covering(functions)
    prep = _Prepared.build(functions, grid)
    region = top.projection
    if path == "closed":
        return math.fsum(_single_scale(prep, kernel, cutoff, k, region) for k in window)
    if path != "tiles":
        raise ValueError("path must be 'closed' or 'tiles'")
    parts = []
    for k in window:
        n = 1 << (top.k - k)
        for sub in np.ndindex(*(n,) * top.m):
            prefix = tuple(p * n + s for p, s in zip(top.prefix, sub))
            parts.append(_single_scale(prep, kernel, cutoff, k, Tile.from_prefix(k, prefix).projection))
    return math.fsum(parts)


@dataclass
class SingleTreeResult:
    window: ScaleWindow
    ratio: float
    met: bool
    ratios: list[float]


def single_tree_search(functions, kernel, cutoff, top: Tile, delta: float, cap: int,
                       grid: QuadratureGrid | None = None) -> SingleTreeResult:
    """First window ``S'`` ending at ``s(J)`` with ``|tree sum| <= delta 2^{m s(J)} |S'|``.

    Lengths 1..cap are scanned with cumulative single-scale sums. If none
    qualifies the window with the smallest normalised ratio is returned
    with ``met=False``.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if any(np.max(np.abs(F.samples)) > 1 + 1e-12 for F in functions):
        raise ValueError("functions must be bounded by 1")
    grid = grid or QuadratureGrid.covering(functions)
    prep = _Prepared.build(functions, grid)
    scale = math.ldexp(1.0, top.m * top.k)
    parts, ratios = [], []
    for length in range(1, cap + 1):
        parts.append(_single_scale(prep, kernel, cutoff, top.k - length + 1, top.projection))
        ratio = abs(math.fsum(parts)) / (scale * length)
        ratios.append(ratio)
        if ratio <= delta:
            return SingleTreeResult(ScaleWindow.ending_at(top.k, length), ratio, True, ratios)
    best = int(np.argmin(ratios))
    return SingleTreeResult(ScaleWindow.ending_at(top.k, best + 1), ratios[best], False, ratios)


def corollary_budget(window_len: int, delta: float, S_delta: int) -> float:
    """``min(|S'|, S_delta) + delta * max(|S'| - S_delta, 0)``."""
    if window_len < 0 or S_delta < 0 or delta < 0:
        raise ValueError("arguments must be nonnegative")
    return min(window_len, S_delta) + delta * max(window_len - S_delta, 0)


@dataclass
class SmallTilesReport:
    linear: float
    moment: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.linear <= self.bound * (1 + 1e-12)

    def __iter__(self):
        return iter((self.linear, self.moment))


def small_tiles_sum(tiles: TileField, delta: float, alpha: float) -> SmallTilesReport:
    """``sum_{|a|<delta} |a| 2^{mk}`` against ``delta^(1-alpha) sum |a|^alpha 2^{mk}``."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    lin, mom = [], []
    for key in tiles:
        a = abs(tiles.coefficient(key))
        w = math.ldexp(1.0, tiles.m * key[0])
        if a < delta:
            lin.append(a * w)
        mom.append(a**alpha * w)
    linear, moment = math.fsum(lin), math.fsum(mom)
    return SmallTilesReport(linear, moment, delta ** (1 - alpha) * moment)


@dataclass
class SelectionResult:
    delta: float
    tops: list[Key]
    trees: dict[Key, list[Key]]
    residual: list[Key]
    residual_total: float
    field: TileField = field(repr=False)

    @property
    def tree_counts(self) -> dict[Key, int]:
        return {t: len(v) for t, v in self.trees.items()}

    def class_of(self) -> dict[Key, str]:
        out = {key: "residual" for key in self.residual}
        for n, top in enumerate(self.tops):
            for key in self.trees[top]:
                out[key] = f"top{n}"
        return out

    def to_csv(self, path=None) -> str:
        f = self.field
        cls = self.class_of()
        buf = io.StringIO()
        buf.write("# simplexlab selection v1\n")
        buf.write(",".join(["k"] + [f"m_{i}" for i in range(f.m)] + ["lambda_I", "a_I", "class"]) + "\n")
        for key, v in f.values.items():
            row = [str(key[0])] + [str(o) for o in key[1]] + [repr(v), repr(f.coefficient(key)), cls[key]]
            buf.write(",".join(row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def select_trees(tiles: TileField, delta: float) -> SelectionResult:
    """Maximal cubes with ``|a_J| >= delta`` and the trees below them.

    Every tile under a selected top (any coefficient) joins that tree; the
    rest form the residual. Distinct tops are incomparable, so a tile lies
    under at most one of them.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    coeffs = tiles.coefficients()
    big = {key for key, a in coeffs.items() if abs(a) >= delta}
    kmax = max((k for k, _ in coeffs), default=0)
    tops = sorted(
        (key for key in big if not any(_ancestor(key, d) in big for d in range(1, kmax - key[0] + 1))),
        key=lambda t: (-t[0], t[1]),
    )
    top_set = set(tops)
    trees = {t: [] for t in tops}
    residual = []
    for key in tiles:
        owner = next((_ancestor(key, d) for d in range(0, kmax - key[0] + 1)
                      if _ancestor(key, d) in top_set), None)
        if owner is None:
            residual.append(key)
        else:
            trees[owner].append(key)
    total = math.fsum(abs(coeffs[key]) * math.ldexp(1.0, tiles.m * key[0]) for key in residual)
    return SelectionResult(delta, tops, trees, residual, total, tiles)


@dataclass
class CoverageReport:
    constant: float
    worst: float
    ok: bool


def coverage_check(selection: SelectionResult, lw: LoomisWhitneyReport) -> CoverageReport:
    """Every selected top has ``prod_i M_m F_i >= delta / c`` on its diagonal samples,
    ``c`` being the empirical Loomis-Whitney constant."""
    c = lw.constant
    if not selection.tops:
        return CoverageReport(c, math.inf, True)
    worst = min(lw.minima[t] for t in selection.tops)
    ok = c > 0 and worst >= selection.delta / c * (1 - 1e-12)
    return CoverageReport(c, worst, ok)
