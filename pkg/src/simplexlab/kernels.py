"""Calderon-Zygmund kernels, the dyadic cutoff and their truncations.

A truncation keeps the scales ``k`` of an integer window ``S``::

    psi_k(t) = phi(2**-k * t) * K(t),        psi_S = sum_{k in S} psi_k

where ``phi`` is an even smooth bump supported on ``+-[1, 4]`` whose dyadic
dilates sum to one away from the origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "KernelSpec",
    "CutoffFunction",
    "ScaleWindow",
    "KERNELS",
    "get_kernel",
    "register_kernel",
    "make_cutoff",
    "make_plateau_cutoff",
    "psi",
    "psi_window",
    "psi_window_sum",
    "verify_cz",
    "psi_l1_norm",
]

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KernelSpec:
    """A one-dimensional kernel given by pointwise evaluators of K and K'."""

    name: str
    eval: ArrayFn
    eval_deriv: ArrayFn

    def __call__(self, t):
        return self.eval(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class ScaleWindow:
    """Inclusive integer interval ``[lo, hi]`` of dyadic scales."""

    lo: int
    hi: int

    def __post_init__(self):
        if int(self.lo) != self.lo or int(self.hi) != self.hi:
            raise ValueError("scale window bounds must be integers")
        if self.lo > self.hi:
            raise ValueError(f"empty scale window [{self.lo}, {self.hi}]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))

    def __contains__(self, k) -> bool:
        return self.lo <= k <= self.hi

    @classmethod
    def ending_at(cls, top: int, length: int) -> "ScaleWindow":
        """The window of ``length`` scales whose largest scale is ``top``."""
        if length < 1:
            raise ValueError("window length must be >= 1")
        return cls(top - length + 1, top)

    @property
    def support(self) -> tuple[float, float]:
        """Range of |t| outside of which psi_S vanishes."""
        return 2.0**self.lo, 2.0 ** (self.hi + 2)


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _step(s):
    """Smooth step: 0 for s <= 1, 1 for s >= 2."""
    a = _bump(s - 1.0)
    b = _bump(2.0 - s)
    return a / (a + b)


@dataclass(frozen=True)
class CutoffFunction:
    """Even smooth cutoff with ``phi(t) = step(|t|/inner) - step(|t|/(2*inner))``.

    With ``inner=1`` this is supported on ``+-[1, 4]`` and its dyadic
    dilates telescope to one.
    """

    inner: float = 1.0
    outer: float = 4.0
    name: str = "standard"

    def __post_init__(self):
        if not self.inner > 0 or self.outer != 4.0 * self.inner:
            raise ValueError("cutoff needs inner > 0 and outer = 4 * inner")

    def step(self, s):
        """The smooth step ``theta`` underlying the cutoff."""
        return _step(s)

    def __call__(self, t):
        a = np.abs(np.asarray(t, dtype=float)) / self.inner
        return _step(a) - _step(a / 2.0)

    eval = __call__


def make_cutoff() -> CutoffFunction:
    return CutoffFunction()


@dataclass(frozen=True)
class PlateauCutoff:
    """Smooth even bump equal to 1 on [-1, 1] and vanishing outside [-2, 2]."""

    name: str = "plateau"

    def __call__(self, t):
        return 1.0 - _step(np.abs(np.asarray(t, dtype=float)))


def make_plateau_cutoff() -> PlateauCutoff:
    return PlateauCutoff()


def _recip(t):
    return 1.0 / t


def _recip_deriv(t):
    return -1.0 / (t * t)


def _signed(t):
    return np.sign(t) / np.abs(t)


def _normalized(t):
    return 1.0 / (np.pi * t)


def _normalized_deriv(t):
    return -1.0 / (np.pi * (t * t))


def _sinc2(t):
    return np.sin(t) / (t * t)


def _sinc2_deriv(t):
    return np.cos(t) / (t * t) - 2.0 * np.sin(t) / (t * t * t)


KERNELS: dict[str, KernelSpec] = {
    "hilbert": KernelSpec("hilbert", _recip, _recip_deriv),
    "signed": KernelSpec("signed", _signed, _recip_deriv),
    "hilbert-normalized": KernelSpec("hilbert-normalized", _normalized, _normalized_deriv),
    "sin-over-t2": KernelSpec("sin-over-t2", _sinc2, _sinc2_deriv),
}


def register_kernel(kernel: KernelSpec) -> None:
    KERNELS[kernel.name] = kernel


def get_kernel(name: str) -> KernelSpec:
    try:
        return KERNELS[name]
    except KeyError:
        raise KeyError(f"unknown kernel {name!r}; known: {sorted(KERNELS)}") from None


def psi(kernel: KernelSpec, cutoff: CutoffFunction, k: int, t):
    """Single-scale piece ``phi(2**-k t) K(t)``; zero wherever phi vanishes."""
    t = np.asarray(t, dtype=float)
    c = cutoff(np.ldexp(t, -int(k)))
    out = np.zeros(np.broadcast(t, c).shape)
    nz = c != 0
    if np.ndim(out) == 0:
        return float(c * kernel.eval(t)) if nz else 0.0
    out[nz] = c[nz] * kernel.eval(t[nz])
    return out


def psi_window(kernel: KernelSpec, cutoff: CutoffFunction, window: ScaleWindow, t):
    """Truncated kernel ``psi_S`` evaluated through the telescoped cutoff.

    ``sum_{k=lo}^{hi} phi(2^-k t) = theta(2^-lo |t|) - theta(2^-(hi+1) |t|)``,
    so the cost does not grow with the window length. Agrees with
    :func:`psi_window_sum` up to roundoff.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    w = _step(np.ldexp(a, -window.lo)) - _step(np.ldexp(a, -(window.hi + 1)))
    out = np.zeros(np.shape(t))
    nz = w != 0
    if np.ndim(out) == 0:
        return float(w * kernel.eval(t)) if nz else 0.0
    out[nz] = w[nz] * kernel.eval(t[nz])
    return out


def psi_window_sum(kernel, cutoff, window: ScaleWindow, t):
    """``psi_S`` as the literal sum of its single-scale pieces."""
    t = np.asarray(t, dtype=float)
    total = np.zeros(np.shape(t))
    for k in window:
        total = total + psi(kernel, cutoff, k, t)
    return total if np.ndim(total) else float(total)


@dataclass
class CZReport:
    kernel: str
    window: ScaleWindow
    sample_count: int
    max_value_ratio: float
    max_deriv_ratio: float
    value_violations: np.ndarray = field(repr=False)
    deriv_violations: np.ndarray = field(repr=False)
    fourier_sup: float = float("nan")
    fourier_approximate: bool = True
    fourier_tolerance: float = 1.05

    @property
    def pointwise_ok(self) -> bool:
        return self.value_violations.size == 0 and self.deriv_violations.size == 0

    @property
    def fourier_ok(self) -> bool:
        return self.fourier_sup <= self.fourier_tolerance

    @property
    def fourier_warning(self) -> bool:
        return 1.0 < self.fourier_sup <= self.fourier_tolerance


def _fourier_sup(kernel, cutoff, window, max_points=2**21):
    lo, hi = window.support
    h = lo / 16.0
    n_half = int(np.ceil(hi / h)) + 1
    while 2 * n_half > max_points // 4:
        h *= 2.0
        n_half = int(np.ceil(hi / h)) + 1
    t = (np.arange(2 * n_half) - n_half) * h
    samples = psi_window(kernel, cutoff, window, t)
    nfft = 1 << int(np.ceil(np.log2(8 * samples.size)))
    spectrum = np.fft.fft(samples, n=nfft) * h
    return float(np.max(np.abs(spectrum)))


def verify_cz(kernel: KernelSpec, cutoff: CutoffFunction, window: ScaleWindow,
              sample_count: int, rtol: float = 1e-12) -> CZReport:
    """Check ``|t K(t)| <= 1`` and ``t^2 |K'(t)| <= 1`` on log-spaced samples.

    Samples cover ``+-[2^lo, 2^(hi+2)]`` and always include the two endpoints
    (exact powers of two). The Fourier column is an FFT estimate of
    ``sup |psi_S^(xi)|`` and is only indicative.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    lo, hi = window.support
    pos = np.geomspace(lo, hi, max(sample_count, 2)) if sample_count > 1 else np.array([lo])
    pos[0] = lo
    if pos.size > 1:
        pos[-1] = hi
    t = np.concatenate([pos, -pos])
    tt = t * t
    value_ratio = np.abs(t * kernel.eval(t))
    deriv_ratio = tt * np.abs(kernel.eval_deriv(t))
    with np.errstate(invalid="ignore"):
        value_bad = t[~(value_ratio <= 1.0 + rtol)]
        deriv_bad = t[~(deriv_ratio <= 1.0 + rtol)]
    return CZReport(
        kernel=kernel.name,
        window=window,
        sample_count=int(t.size),
        max_value_ratio=float(np.max(value_ratio)),
        max_deriv_ratio=float(np.max(deriv_ratio)),
        value_violations=value_bad,
        deriv_violations=deriv_bad,
        fourier_sup=_fourier_sup(kernel, cutoff, window),
    )


_GL_NODES, _GL_WEIGHTS = leggauss(24)


def psi_l1_norm(kernel: KernelSpec, cutoff: CutoffFunction, k: int, panels: int = 96) -> float:
    """``int |psi_k|`` by composite Gauss-Legendre in the rescaled variable.

    Substituting ``t = 2^k s`` gives ``2^k int_{1<=|s|<=4} phi(s) |K(2^k s)| ds``.
    """
    edges = np.linspace(cutoff.inner, cutoff.outer, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    s = (mid + half * _GL_NODES).ravel()
    w = (half * _GL_WEIGHTS).ravel()
    scale = 2.0 ** int(k)
    total = 0.0
    for sign in (1.0, -1.0):
        vals = cutoff(sign * s) * np.abs(kernel.eval(sign * scale * s))
        total += float(np.dot(w, vals))
    return scale * total
