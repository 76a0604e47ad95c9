"""Sampled functions on axis-aligned boxes.

Samples sit at cell centres of a uniform tensor grid, so integrals are
midpoint sums and ``p``-norms use the cell volume as measure. Outside the
box a :class:`GridFunction` is zero.

File layouts (both store samples in C / lexicographic order, last axis
fastest)::

    CSV                                   binary (little endian)
    # simplexlab gridfunction v1          b"SLGF1\\n"
    m,<m>                                 int32   m
    resolution,<n_0>,...,<n_{m-1}>        int32   n_0 ... n_{m-1}
    box,<lo_0>,<hi_0>,...                 float64 lo_0 hi_0 ... lo_{m-1} hi_{m-1}
    value                                 float64 samples
    <sample>
    ...
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "GridFunction",
    "aligned_box",
    "sample",
    "gaussian",
    "smooth_bump",
    "indicator",
    "random_sign",
    "constant",
]

CSV_MAGIC = "# simplexlab gridfunction v1"
BIN_MAGIC = b"SLGF1\n"

Box = tuple[tuple[float, float], ...]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples on the cell centres of a tensor grid over ``box``."""

    box: Box
    samples: np.ndarray

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        samples = np.array(self.samples, dtype=float, copy=True)
        if samples.ndim != len(box):
            raise ValueError(f"samples have {samples.ndim} axes but box has {len(box)}")
        if any(n < 2 for n in samples.shape):
            raise ValueError("resolution must be >= 2 on every axis")
        if any(hi <= lo for lo, hi in box):
            raise ValueError("box intervals must have positive length")
        samples.setflags(write=False)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "samples", samples)

    @property
    def m(self) -> int:
        return len(self.box)

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.samples.shape

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / n for (lo, hi), n in zip(self.box, self.resolution)])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self, axis: int) -> np.ndarray:
        lo, _ = self.box[axis]
        h = self.spacing[axis]
        return lo + (np.arange(self.resolution[axis]) + 0.5) * h

    def norm(self, p: float) -> float:
        a = np.abs(self.samples)
        if np.isinf(p):
            return float(a.max())
        if p <= 0:
            raise ValueError("p must be positive")
        return float((np.sum(a**p) * self.cell_volume) ** (1.0 / p))

    def integral(self) -> float:
        return float(np.sum(self.samples) * self.cell_volume)

    def __call__(self, points) -> np.ndarray:
        """Multilinear interpolation between cell centres.

        ``points`` has shape ``(..., m)``. Between the box boundary and the
        outermost centres the edge value is held; outside the box the result
        is zero.
        """
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.m:
            raise ValueError(f"points must have trailing dimension {self.m}")
        return interpolate(self.samples, self.box, pts)

    def with_samples(self, samples) -> "GridFunction":
        return GridFunction(self.box, samples)

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.box, c * self.samples)

    # -- serialization -------------------------------------------------

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(CSV_MAGIC + "\n")
        buf.write(f"m,{self.m}\n")
        buf.write("resolution," + ",".join(str(n) for n in self.resolution) + "\n")
        buf.write("box," + ",".join(repr(v) for iv in self.box for v in iv) + "\n")
        buf.write("value\n")
        for v in self.samples.ravel():
            buf.write(repr(float(v)) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "GridFunction":
        if isinstance(source, (str, Path)) and "\n" not in str(source):
            text = Path(source).read_text()
        else:
            text = str(source)
        lines = text.splitlines()
        if not lines or lines[0].strip() != CSV_MAGIC:
            raise ValueError("not a simplexlab gridfunction CSV")
        header = {}
        for i, line in enumerate(lines[1:], start=1):
            key, _, rest = line.partition(",")
            if key == "value":
                body = lines[i + 1:]
                break
            header[key] = rest.split(",")
        else:
            raise ValueError("missing 'value' section")
        m = int(header["m"][0])
        res = tuple(int(v) for v in header["resolution"])
        flat = [float(v) for v in header["box"]]
        if len(res) != m or len(flat) != 2 * m:
            raise ValueError("inconsistent header")
        box = tuple((flat[2 * i], flat[2 * i + 1]) for i in range(m))
        values = np.array([float(v) for v in body if v.strip()])
        return cls(box, values.reshape(res))

    def to_bytes(self) -> bytes:
        head = BIN_MAGIC + struct.pack(f"<i{self.m}i", self.m, *self.resolution)
        head += struct.pack(f"<{2 * self.m}d", *(v for iv in self.box for v in iv))
        return head + np.ascontiguousarray(self.samples, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridFunction":
        if not data.startswith(BIN_MAGIC):
            raise ValueError("not a simplexlab gridfunction blob")
        off = len(BIN_MAGIC)
        (m,) = struct.unpack_from("<i", data, off)
        off += 4
        res = struct.unpack_from(f"<{m}i", data, off)
        off += 4 * m
        flat = struct.unpack_from(f"<{2 * m}d", data, off)
        off += 16 * m
        values = np.frombuffer(data, dtype="<f8", offset=off)
        box = tuple((flat[2 * i], flat[2 * i + 1]) for i in range(m))
        return cls(box, values.reshape(res))


def interpolate(samples: np.ndarray, box: Box, pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of cell-centred ``samples`` (any dtype)."""
    m = samples.ndim
    shape = pts.shape[:-1]
    pts = pts.reshape(-1, m)
    inside = np.ones(pts.shape[0], dtype=bool)
    base = []
    frac = []
    for ax in range(m):
        lo, hi = box[ax]
        n = samples.shape[ax]
        h = (hi - lo) / n
        x = pts[:, ax]
        inside &= (x >= lo) & (x <= hi)
        s = (x - lo) / h - 0.5
        i0 = np.clip(np.floor(s), 0, n - 2).astype(np.intp)
        base.append(i0)
        frac.append(np.clip(s - i0, 0.0, 1.0))
    out = np.zeros(pts.shape[0], dtype=np.result_type(samples.dtype, float))
    for corner in product((0, 1), repeat=m):
        idx = tuple(b + c for b, c in zip(base, corner))
        w = np.ones(pts.shape[0])
        for ax, c in enumerate(corner):
            w = w * (frac[ax] if c else 1.0 - frac[ax])
        out += w * samples[idx]
    out[~inside] = 0
    return out.reshape(shape)


def aligned_box(box: Sequence[tuple[float, float]], level: int) -> Box:
    """Snap each interval outward to multiples of ``2**-level``."""
    h = 2.0 ** -int(level)
    return tuple((np.floor(lo / h) * h, np.ceil(hi / h) * h) for lo, hi in box)


def _grid_points(box: Box, level: int):
    h = 2.0 ** -int(level)
    axes = []
    for lo, hi in box:
        n = int(round((hi - lo) / h))
        axes.append(lo + (np.arange(n) + 0.5) * h)
    return axes


def sample(fn: Callable[..., np.ndarray], box, level: int = 4) -> GridFunction:
    """Sample ``fn(*coords)`` on the aligned grid of spacing ``2**-level``."""
    box = aligned_box(box, level)
    axes = _grid_points(box, level)
    mesh = np.meshgrid(*axes, indexing="ij")
    values = np.broadcast_to(fn(*mesh), mesh[0].shape)
    return GridFunction(box, values)


def _default_box(m, box, half_width=4.0):
    if box is None:
        return ((-half_width, half_width),) * m
    return tuple(box)


def gaussian(m: int, center=None, box=None, level: int = 4, width: float = 1.0) -> GridFunction:
    """``exp(-|y - center|^2 / width^2)`` restricted to ``box``."""
    c = np.zeros(m) if center is None else np.broadcast_to(np.asarray(center, float), (m,))

    def fn(*ys):
        r2 = sum((y - ci) ** 2 for y, ci in zip(ys, c))
        return np.exp(-r2 / width**2)

    return sample(fn, _default_box(m, box), level)


def smooth_bump(m: int, center=None, radius: float = 1.0, box=None, level: int = 4) -> GridFunction:
    """Compactly supported ``exp(1 - 1/(1 - r^2))`` with peak value 1."""
    c = np.zeros(m) if center is None else np.broadcast_to(np.asarray(center, float), (m,))

    def fn(*ys):
        r2 = sum((y - ci) ** 2 for y, ci in zip(ys, c)) / radius**2
        out = np.zeros_like(r2)
        inside = r2 < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    return sample(fn, _default_box(m, box), level)


def indicator(m: int, region, box=None, level: int = 4) -> GridFunction:
    """Indicator of the axis-aligned ``region`` (cell centres inside count)."""
    region = tuple(region)

    def fn(*ys):
        out = np.ones_like(ys[0])
        for y, (lo, hi) in zip(ys, region):
            out = out * ((y >= lo) & (y <= hi))
        return out

    return sample(fn, _default_box(m, box), level)


def constant(m: int, value: float = 1.0, box=None, level: int = 4) -> GridFunction:
    return sample(lambda *ys: np.full_like(ys[0], value), _default_box(m, box), level)


def random_sign(m: int, seed: int, block: float = 0.5, box=None, level: int = 4) -> GridFunction:
    """Seeded +-1 field, constant on aligned cubes of side ``block``."""
    box = aligned_box(_default_box(m, box), level)
    rng = np.random.default_rng(seed)
    counts = [int(np.ceil((hi - lo) / block)) for lo, hi in box]
    signs = rng.choice([-1.0, 1.0], size=counts)

    def fn(*ys):
        idx = tuple(
            np.clip(((y - lo) // block).astype(int), 0, n - 1)
            for y, (lo, _), n in zip(ys, box, counts)
        )
        return signs[idx]

    return sample(fn, box, level)
