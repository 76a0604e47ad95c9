"""The beta-form, its change of variables, and the modulated-operator encoding.

For ``beta_0, ..., beta_m`` in R^m the beta-form is::

    Lambda_beta(F) = int_{R^m} int_R prod_i F_i(x - beta_i t) psi_S(t) dt dx

With ``B = [[1, ..., 1], [beta_0, ..., beta_m]]`` and
``F~_i(u) = F_i(pi_i B^-1 (0, u))`` one has
``Lambda(F) = |det B|^-1 Lambda_beta(F~)``.

Complex-valued functions are only used here and are stored as a pair of
real :class:`GridFunction` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .grid_forms import DEFAULT_BUDGET, BudgetExceeded, QuadratureGrid, evaluate_form
from .gridfunc import GridFunction, aligned_box, interpolate
from .kernels import PlateauCutoff, ScaleWindow, make_plateau_cutoff, psi_window

__all__ = [
    "BetaConfiguration",
    "SingularConfiguration",
    "ComplexGridFunction",
    "evaluate_beta_form",
    "tilde_transform",
    "verify_change_of_variables",
    "norm_ratio_check",
    "binomial_identity",
    "phase_coefficients",
    "ModulationSetup",
    "evaluate_modulated_operator",
    "build_modulated_encoding",
    "encoding_discrepancy",
    "phase_identity_error",
]


class SingularConfiguration(ValueError):
    """``det B`` vanishes (within tolerance): the betas are not in general position."""


@dataclass(frozen=True, eq=False)
class BetaConfiguration:
    """Vectors ``beta_0, ..., beta_m`` in R^m, stored as rows of ``betas``."""

    betas: np.ndarray

    def __post_init__(self):
        b = np.array(self.betas, dtype=float, ndmin=2)
        if b.shape[0] != b.shape[1] + 1:
            raise ValueError(f"need m+1 vectors in R^m, got shape {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "betas", b)
        scale = max(1.0, float(np.abs(self.B).max()))
        if abs(self.det) <= 1e-12 * scale ** (self.m + 1):
            raise SingularConfiguration(f"det B = {self.det:.3e}: betas not in general position")

    @property
    def m(self) -> int:
        return self.betas.shape[1]

    @property
    def B(self) -> np.ndarray:
        return np.vstack([np.ones(self.m + 1), self.betas.T])

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.B))

    def substitution(self, i: int) -> np.ndarray:
        """``M_i``: B^-1 without its first column and its i-th row, so ``F~_i(u) = F_i(M_i u)``."""
        Binv = np.linalg.inv(self.B)
        return np.delete(Binv, i, axis=0)[:, 1:]

    @classmethod
    def random(cls, m: int, seed: int, spread: float = 1.0, min_det: float = 0.25) -> "BetaConfiguration":
        """Seeded betas uniform in ``[-spread, spread]^m`` with ``|det B| >= min_det``."""
        rng = np.random.default_rng(seed)
        while True:
            b = rng.uniform(-spread, spread, size=(m + 1, m))
            if abs(np.linalg.det(np.vstack([np.ones(m + 1), b.T]))) >= min_det:
                return cls(b)

    def to_text(self) -> str:
        """Key-value block, one ``beta_i = c_1, ..., c_m`` line per vector."""
        return "\n".join(f"beta_{i} = " + ", ".join(repr(float(v)) for v in row)
                         for i, row in enumerate(self.betas))

    @classmethod
    def from_text(cls, text: str) -> "BetaConfiguration":
        rows = {}
        for line in text.strip().splitlines():
            key, _, val = line.partition("=")
            key = key.strip()
            if not key.startswith("beta_"):
                raise ValueError(f"unexpected key {key!r}")
            rows[int(key[5:])] = [float(v) for v in val.split(",")]
        return cls(np.array([rows[i] for i in range(len(rows))]))


@dataclass(frozen=True, eq=False)
class ComplexGridFunction:
    """A complex function as paired real and imaginary :class:`GridFunction`."""

    real: GridFunction
    imag: GridFunction

    def __post_init__(self):
        if self.real.box != self.imag.box or self.real.resolution != self.imag.resolution:
            raise ValueError("real and imaginary parts must share the grid")

    @classmethod
    def from_samples(cls, box, samples) -> "ComplexGridFunction":
        samples = np.asarray(samples, dtype=complex)
        return cls(GridFunction(box, samples.real), GridFunction(box, samples.imag))

    @property
    def box(self):
        return self.real.box

    @property
    def m(self) -> int:
        return self.real.m

    @property
    def resolution(self):
        return self.real.resolution

    @property
    def spacing(self) -> np.ndarray:
        return self.real.spacing

    @property
    def samples(self) -> np.ndarray:
        return self.real.samples + 1j * self.imag.samples

    def norm(self, p: float) -> float:
        a = np.abs(self.samples)
        if np.isinf(p):
            return float(a.max())
        return float((np.sum(a**p) * self.real.cell_volume) ** (1.0 / p))

    def __call__(self, points):
        return interpolate(self.samples, self.box, np.asarray(points, float))


AnyGrid = GridFunction | ComplexGridFunction


# -- beta form ---------------------------------------------------------


def _t_nodes(window: ScaleWindow, h: float) -> np.ndarray:
    lo, hi = window.support
    j = np.arange(math.ceil(lo / h), math.floor(hi / h) + 1)
    pos = j * h
    return np.concatenate([-pos[::-1], pos])


def _x_box(functions, betas, tmax):
    m = betas.m
    box = []
    for ax in range(m):
        lo, hi = -math.inf, math.inf
        for F, b in zip(functions, betas.betas):
            flo, fhi = F.box[ax]
            reach = abs(b[ax]) * tmax
            lo, hi = max(lo, flo - reach), min(hi, fhi + reach)
        if hi <= lo:
            return None
        box.append((lo, hi))
    return tuple(box)


def _shift_plan(F, beta, x_lo, h):
    """Integer index offsets if ``F(x - beta t)`` at ``t = j h`` lands on sample centres."""
    if np.any(np.abs(F.spacing - h) > 1e-12 * h):
        return None
    if np.any(np.abs(beta - np.round(beta)) > 1e-12):
        return None
    base = (x_lo - np.array([b[0] for b in F.box])) / h
    if np.any(np.abs(base - np.round(base)) > 1e-9):
        return None
    return np.round(base).astype(np.int64), np.round(beta).astype(np.int64)


def _shifted_values(samples, start, shape):
    """``samples[start + n]`` over the index block ``shape``, zero outside."""
    out = np.zeros(shape, dtype=samples.dtype)
    src, dst = [], []
    for ax, (s, n) in enumerate(zip(start, shape)):
        a, b = max(s, 0), min(s + n, samples.shape[ax])
        if b <= a:
            return out
        src.append(slice(a, b))
        dst.append(slice(a - s, b - s))
    out[tuple(dst)] = samples[tuple(src)]
    return out


def evaluate_beta_form(functions: Sequence[AnyGrid], kernel, cutoff, window: ScaleWindow,
                       betas: BetaConfiguration, level: int = 4, budget: int = DEFAULT_BUDGET):
    """Quadrature of the beta-form with ``psi_S`` in place of ``K``.

    ``x`` runs over cell centres of spacing ``2**-level``, ``t`` over the
    nodes ``j 2**-level``; both rules are spectrally accurate for smooth
    compactly supported integrands. A function whose grid matches and whose
    ``beta_i`` is an integer vector is read by index shifts, any other by
    multilinear interpolation. Returns a complex number if any input is
    complex.
    """
    m = betas.m
    if len(functions) != m + 1 or any(F.m != m for F in functions):
        raise ValueError(f"need {m + 1} functions of {m} variables")
    is_complex = any(isinstance(F, ComplexGridFunction) for F in functions)
    h = 2.0**-level
    t = _t_nodes(window, h)
    box = _x_box(functions, betas, window.support[1])
    if box is None or t.size == 0:
        return 0j if is_complex else 0.0
    box = aligned_box(box, level)
    shape = tuple(int(round((hi - lo) / h)) for lo, hi in box)
    npts = math.prod(shape)
    if npts > budget:
        raise BudgetExceeded(f"{npts} x-grid points exceed budget {budget}")
    x_lo = np.array([lo + 0.5 * h for lo, _ in box])
    axes = [x_lo[ax] + np.arange(n) * h for ax, n in enumerate(shape)]
    X = None
    plans = []
    for F, b in zip(functions, betas.betas):
        plan = _shift_plan(F, b, x_lo, h)
        plans.append(plan)
        if plan is None and X is None:
            X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    kv = psi_window(kernel, cutoff, window, t)
    dtype = complex if is_complex else float
    re_parts, im_parts = [], []
    for jt, tj in enumerate(t):
        if kv[jt] == 0.0:
            continue
        j = int(round(tj / h))
        prod = np.ones(shape, dtype=dtype)
        for F, b, plan in zip(functions, betas.betas, plans):
            if plan is None:
                vals = interpolate(F.samples, F.box, X - b * tj)
            else:
                base, ib = plan
                vals = _shifted_values(F.samples, base - ib * j, shape)
            prod = prod * vals
        s = complex(prod.sum()) * kv[jt]
        re_parts.append(s.real)
        im_parts.append(s.imag)
    scale = h ** (m + 1)
    re, im = math.fsum(re_parts) * scale, math.fsum(im_parts) * scale
    return complex(re, im) if is_complex else re


# -- change of variables -------------------------------------------------


@dataclass
class TildeResult:
    functions: list[GridFunction]
    determinants: list[float]
    det_B: float


def tilde_transform(functions: Sequence[GridFunction], betas: BetaConfiguration,
                    level: int = 7) -> TildeResult:
    """``F~_i(u) = F_i(M_i u)`` sampled on an aligned grid of spacing ``2**-level``.

    The grid covers the preimage of each box under ``M_i``; values come from
    multilinear interpolation of the source samples, zero outside the box.
    ``determinants[i] = det M_i``, which should be ``+-1/det B``.
    """
    m = betas.m
    if len(functions) != m + 1:
        raise ValueError(f"need {m + 1} functions")
    out, dets = [], []
    for i, F in enumerate(functions):
        M = betas.substitution(i)
        Minv = np.linalg.inv(M)
        corners = np.array(list(product(*F.box)))
        pre = corners @ Minv.T
        box = aligned_box(tuple(zip(pre.min(axis=0), pre.max(axis=0))), level)
        h = 2.0**-level
        axes = [lo + (np.arange(int(round((hi - lo) / h))) + 0.5) * h for lo, hi in box]
        U = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        out.append(GridFunction(box, F(U @ M.T)))
        dets.append(float(np.linalg.det(M)))
    return TildeResult(out, dets, betas.det)


@dataclass
class ChangeOfVariablesReport:
    direct: float
    transformed: float
    det_B: float

    @property
    def relative_difference(self) -> float:
        if self.direct == 0.0:
            return 0.0 if self.transformed == 0.0 else math.inf
        return abs(self.transformed - self.direct) / abs(self.direct)


def verify_change_of_variables(functions, kernel, cutoff, window: ScaleWindow, betas: BetaConfiguration,
                               grid: QuadratureGrid | None = None, level: int = 4,
                               tilde_level: int = 7) -> ChangeOfVariablesReport:
    """``Lambda_S(F)`` against ``|det B|^-1 Lambda_beta(F~)``, each by its own quadrature."""
    grid = grid or QuadratureGrid.covering(functions, level=level)
    direct = evaluate_form(functions, kernel, cutoff, window, grid)
    tilde = tilde_transform(functions, betas, tilde_level)
    beta_val = evaluate_beta_form(tilde.functions, kernel, cutoff, window, betas, level=level)
    return ChangeOfVariablesReport(direct, beta_val / abs(tilde.det_B), tilde.det_B)


def norm_ratio_check(functions, tilde: TildeResult, exponents: Sequence[float]) -> list[float]:
    """Relative errors of ``||F~_i||_p = |det B|^(1/p) ||F_i||_p``, one per (i, p)."""
    errs = []
    for F, Ft in zip(functions, tilde.functions):
        for p in exponents:
            want = abs(tilde.det_B) ** (1.0 / p) * F.norm(p)
            errs.append(abs(Ft.norm(p) - want) / want)
    return errs


# -- binomial identity and phases ----------------------------------------


def binomial_identity(k: int, m: int) -> int:
    """``sum_{j=0}^k (-1)^(k-j) C(k, j) j^m`` in exact integers (``0^0 = 1``)."""
    if not (0 <= m <= k <= 64):
        raise ValueError("need 0 <= m <= k <= 64")
    return sum((-1) ** (k - j) * math.comb(k, j) * j**m for j in range(k + 1))


def phase_coefficients(d: int) -> dict[tuple[int, int], Fraction]:
    """Coefficient of ``N_k s^(k-r) t^r`` after expanding
    ``sum_j sum_k (-1)^j / k! C(k, j) N_k (s - j t)^k``; should be ``[r == k]``."""
    out = {}
    for k in range(1, d + 1):
        for r in range(k + 1):
            inner = (-1) ** k * binomial_identity(k, r) if r <= k else 0
            out[(k, r)] = Fraction(math.comb(k, r) * (-1) ** r * inner, math.factorial(k))
    return out


# -- modulated operator ----------------------------------------------------


@dataclass(frozen=True)
class ModulationSetup:
    """Degree ``d``, linearising functions ``N_1..N_d`` and speeds ``b_{d+1}..b_m``."""

    d: int
    N: tuple[Callable, ...]
    b: tuple[float, ...]
    epsilon: float = 0.08
    cutoff: PlateauCutoff = make_plateau_cutoff()

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be >= 0")
        if len(self.N) != self.d:
            raise ValueError(f"need {self.d} linearising functions")
        if not self.b:
            raise ValueError("need at least one speed")
        if any(v == 0 for v in self.b):
            raise ValueError("speeds must be nonzero")
        if len(set(self.b)) != len(self.b):
            raise ValueError("speeds must be distinct")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "N", tuple(self.N))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))

    @property
    def m(self) -> int:
        return self.d + len(self.b)

    def with_epsilon(self, epsilon: float) -> "ModulationSetup":
        return ModulationSetup(self.d, self.N, self.b, epsilon, self.cutoff)

    def n_values(self, k: int, x) -> np.ndarray:
        """``N_k(x)`` for a callable or a 1-D :class:`GridFunction`."""
        N = self.N[k - 1]
        x = np.asarray(x, float)
        if isinstance(N, GridFunction):
            return N(x[..., None])
        return np.asarray(N(x), float) * np.ones_like(x)

    def betas(self) -> BetaConfiguration:
        m, d, eps = self.m, self.d, self.epsilon
        B = np.zeros((m + 1, m))
        for j in range(1, d + 1):
            B[j, j - 1] = 1.0
        B[d + 1, d] = self.b[0]
        for j in range(d + 2, m + 1):
            B[j, d] = self.b[j - d - 1]
            B[j, j - 1] = eps
        return BetaConfiguration(B)


def _phase(setup: ModulationSetup, j: int, X) -> np.ndarray:
    """Total phase of ``F_j`` at points ``X[..., l-1] = x_l``."""
    d = setup.d
    xd = X[..., d]
    total = np.zeros(X.shape[:-1])
    for k in range(max(j, 1), d + 1):
        s = sum(l * X[..., l - 1] for l in range(1, k + 1))
        total = total + (-1) ** j / math.factorial(k) * math.comb(k, j) * setup.n_values(k, xd) * s**k
    return total


def evaluate_modulated_operator(setup: ModulationSetup, gs: Sequence[GridFunction], fs: Sequence[GridFunction],
                                kernel, cutoff, window: ScaleWindow, level: int = 4) -> complex:
    """``int g_0 ... g_d(x) int e^{i sum N_k(x) t^k} prod_j f_j(x - b_j t) psi_S(t) dt dx``.

    Direct two-dimensional quadrature: ``x`` on the cell centres of the
    common box of the ``g``'s, ``t`` on the nodes ``j 2**-level``.
    """
    d = setup.d
    if len(gs) != d + 1 or len(fs) != len(setup.b):
        raise ValueError(f"need {d + 1} g's and {len(setup.b)} f's")
    h = 2.0**-level
    lo = max(g.box[0][0] for g in gs)
    hi = min(g.box[0][1] for g in gs)
    if hi <= lo:
        return 0j
    (lo, hi), = aligned_box(((lo, hi),), level)
    x = lo + (np.arange(int(round((hi - lo) / h))) + 0.5) * h
    t = _t_nodes(window, h)
    kv = psi_window(kernel, cutoff, window, t)
    keep = kv != 0
    t, kv = t[keep], kv[keep]
    G = np.ones_like(x)
    for g in gs:
        G = G * g(x[:, None])
    Nx = [setup.n_values(k, x) for k in range(1, d + 1)]
    re_parts, im_parts = [], []
    for tj, kj in zip(t, kv):
        phase = sum(n * tj**k for k, n in enumerate(Nx, start=1)) if d else np.zeros_like(x)
        val = G * np.exp(1j * phase)
        for f, b in zip(fs, setup.b):
            val = val * f((x - b * tj)[:, None])
        s = complex(val.sum()) * kj
        re_parts.append(s.real)
        im_parts.append(s.imag)
    return complex(math.fsum(re_parts), math.fsum(im_parts)) * h * h


@dataclass
class ModulatedEncoding:
    functions: list[AnyGrid]
    betas: BetaConfiguration
    normalization: float


def build_modulated_encoding(setup: ModulationSetup, gs: Sequence[GridFunction], fs: Sequence[GridFunction],
                             level: int = 4) -> ModulatedEncoding:
    """Functions ``F_0..F_m`` on R^m and betas whose beta-form encodes the pairing.

    ``F_j`` for ``j <= d`` is ``g_j(x_{d+1})`` times its phase product, and
    ``F_j = f_j(x_{d+1})`` for ``j > d``. Each is multiplied by
    ``prod_{l != d+1} phi~(eps x_l)``. The cutoff is dilated by ``1/eps`` so
    the shifts ``beta_j t`` become negligible for it as ``eps -> 0``;
    dividing the beta-form by ``normalization = (int phi~^{m+1} / eps)^(m-1)``
    then recovers the pairing up to ``O(eps^2)``.
    """
    d, m, eps = setup.d, setup.m, setup.epsilon
    if len(gs) != d + 1 or len(fs) != m - d:
        raise ValueError(f"need {d + 1} g's and {m - d} f's")
    one_d = list(gs) + list(fs)
    lo = min(g.box[0][0] for g in one_d)
    hi = max(g.box[0][1] for g in one_d)
    reach = 2.0 / eps
    box = tuple((lo, hi) if ax == d else (-reach, reach) for ax in range(m))
    box = aligned_box(box, level)
    h = 2.0**-level
    axes = [lo_ + (np.arange(int(round((hi_ - lo_) / h))) + 0.5) * h for lo_, hi_ in box]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    xd = X[..., d]
    cut = np.ones(X.shape[:-1])
    for ax in range(m):
        if ax != d:
            cut = cut * setup.cutoff(eps * X[..., ax])
    functions = []
    for j, g in enumerate(one_d):
        base = g(xd[..., None]) * cut
        if j <= d and d > 0:
            functions.append(ComplexGridFunction.from_samples(box, base * np.exp(1j * _phase(setup, j, X))))
        else:
            functions.append(GridFunction(box, base))
    integral, _ = quad(lambda s: float(setup.cutoff(s)) ** (m + 1), -2.0, 2.0,
                       points=(-1.0, 1.0), epsabs=1e-14, epsrel=1e-13)
    return ModulatedEncoding(functions, setup.betas(), (integral / eps) ** (m - 1))


@dataclass
class EncodingDiscrepancy:
    epsilon: float
    beta_form: complex
    pairing: complex

    @property
    def discrepancy(self) -> float:
        return abs(self.beta_form - self.pairing)


def encoding_discrepancy(setup: ModulationSetup, gs, fs, kernel, cutoff, window: ScaleWindow,
                         level: int = 4) -> EncodingDiscrepancy:
    """Normalised ``Lambda_beta`` of the encoding against the direct pairing."""
    enc = build_modulated_encoding(setup, gs, fs, level)
    val = evaluate_beta_form(enc.functions, kernel, cutoff, window, enc.betas, level=level)
    direct = evaluate_modulated_operator(setup, gs, fs, kernel, cutoff, window, level)
    return EncodingDiscrepancy(setup.epsilon, complex(val) / enc.normalization, direct)


def phase_identity_error(setup: ModulationSetup, g_fns: Sequence[Callable], f_fns: Sequence[Callable],
                         points: np.ndarray, t: np.ndarray) -> float:
    """Max of ``|prod_j F_j(x - beta_j t) - e^{i sum N_k t^k} prod g_j(x_{d+1}) prod f_j(x_{d+1} - b_j t)|``
    over sample pairs, with analytic ``g``/``f`` and no cutoff."""
    d = setup.d
    X = np.asarray(points, float)
    t = np.asarray(t, float)
    B = setup.betas().betas
    fns = list(g_fns) + list(f_fns)
    lhs = np.ones(X.shape[0], dtype=complex)
    for j, fn in enumerate(fns):
        Y = X - t[:, None] * B[j]
        val = fn(Y[:, d]).astype(complex)
        if j <= d:
            val = val * np.exp(1j * _phase(setup, j, Y))
        lhs = lhs * val
    xd = X[:, d]
    phase = sum(setup.n_values(k, xd) * t**k for k in range(1, d + 1)) if d else 0.0
    rhs = np.exp(1j * phase) * np.ones(X.shape[0])
    for g in g_fns:
        rhs = rhs * g(xd)
    for f, b in zip(f_fns, setup.b):
        rhs = rhs * f(xd - b * t)
    return float(np.max(np.abs(lhs - rhs)))
