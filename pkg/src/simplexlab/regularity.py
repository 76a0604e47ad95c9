"""Atomic norms, separation and the Hilbert-space regularity decomposition.

Everything lives in a finite-dimensional ``H = R^N`` (a grid ``X``) with the
inner product ``<f, g> = w * sum(f * g)``, ``w`` being the cell measure.
The atoms are *dual functions*: products ``prod_i f_i(x_(i))`` of
+-1-valued factors, each ignoring one coordinate of ``X``. Factors on
smaller coordinate sets are absorbed into these, so nothing is lost.

The decomposition searches the constant schedule ``C_r = 1``,
``C_{i-1} = max(C_i, 2 / eta(C_i))`` for the first level at which::

    f in C V_sigma + eta(C) V_dual + delta V_H

where ``V_*`` are open unit balls of the atomic norm, its dual norm and the
Hilbert norm. Each membership test is a small convex program; every
returned bound is re-certified afterwards.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog

__all__ = [
    "AtomDictionary",
    "NormCertificate",
    "MembershipError",
    "SeparationError",
    "DecompositionError",
    "atomic_norm",
    "dual_norm",
    "dual_function_norm",
    "bidual_norm",
    "dual_ball_vertices",
    "duality_check",
    "separate",
    "ConstantSchedule",
    "constant_schedule",
    "RegularityDecomposition",
    "regularity_decompose",
    "phi_family_diagnostics",
]

EXHAUSTIVE_CAP = 2**20
INSIDE_MARGIN = 1e-6
_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class MembershipError(ValueError):
    """``f`` lies in the (inflated) set, so no separating vector exists."""


class SeparationError(RuntimeError):
    """The computed separator failed its certificate."""


class DecompositionError(RuntimeError):
    """No level of the schedule could be certified."""


def _factor_shapes(shape):
    return [tuple(n for a, n in enumerate(shape) if a != i) for i in range(len(shape))]


def _dual_function(factors, shape):
    """``prod_i f_i(x_(i))`` as an array of ``shape``."""
    out = np.ones(shape)
    for i, f in enumerate(factors):
        out = out * np.expand_dims(np.asarray(f, float), i)
    return out


@dataclass(frozen=True, eq=False)
class AtomDictionary:
    """Finite atom set in ``R^shape``, stored flattened as rows of ``atoms``."""

    atoms: np.ndarray
    shape: tuple[int, ...]
    measure: float = 1.0
    descriptor: str = ""

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        if atoms.shape[0] == 0:
            raise ValueError("empty atom dictionary")
        if atoms.shape[1] != math.prod(self.shape):
            raise ValueError("atom length does not match the grid shape")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "shape", tuple(self.shape))

    def __len__(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def inner(self, f, g) -> float:
        return float(self.measure * np.dot(np.ravel(f), np.ravel(g)))

    def h_norm(self, f) -> float:
        return math.sqrt(max(self.inner(f, f), 0.0))

    def pairings(self, f) -> np.ndarray:
        return self.measure * (self.atoms @ np.ravel(f))

    def atom(self, t: int) -> np.ndarray:
        return self.atoms[t].reshape(self.shape)

    def is_symmetric(self) -> bool:
        rows = {tuple(r) for r in self.atoms}
        return all(tuple(-r) in rows for r in self.atoms)

    @classmethod
    def dual_functions(cls, shape, measure: float = 1.0, cap: int = EXHAUSTIVE_CAP) -> "AtomDictionary":
        """All distinct +-1 dual functions on a grid of ``shape``."""
        shape = tuple(int(n) for n in shape)
        fshapes = _factor_shapes(shape)
        bits = sum(math.prod(s) for s in fshapes)
        if 2**bits > cap:
            raise ValueError(f"{2**bits} sign patterns exceed the enumeration cap {cap}")
        per_factor = [
            [np.array(p, float).reshape(s) for p in itertools.product((-1.0, 1.0), repeat=math.prod(s))]
            for s in fshapes
        ]
        rows = [_dual_function(fs, shape).ravel() for fs in itertools.product(*per_factor)]
        atoms = np.unique(np.array(rows), axis=0)
        return cls(atoms, shape, measure, f"+-1 dual functions on grid {shape}")


@dataclass
class NormCertificate:
    value: float
    witness: dict[int, float] = field(default_factory=dict)
    exact: bool = True


def atomic_norm(f, atoms: AtomDictionary) -> NormCertificate:
    """``min sum |lambda_t|`` over ``f = sum lambda_t sigma_t`` as a linear program.

    The dictionary is closed under negation, so nonnegative coefficients
    suffice. Returns ``inf`` with an empty witness when ``f`` is not in the
    span of the atoms. The witness is the solver's basic optimal solution.
    """
    f = np.ravel(np.asarray(f, float))
    if not np.any(f):
        return NormCertificate(0.0)
    T = len(atoms)
    res = linprog(np.ones(T), A_eq=atoms.atoms.T, b_eq=f, bounds=(0, None),
                  method="highs", options=_LP_OPTIONS)
    if res.status == 2:
        return NormCertificate(math.inf)
    if res.status != 0:
        raise RuntimeError(f"atomic norm LP failed: {res.message}")
    lam = res.x
    witness = {int(t): float(lam[t]) for t in np.flatnonzero(lam > 1e-14)}
    return NormCertificate(float(lam.sum()), witness)


def dual_norm(f, atoms: AtomDictionary) -> tuple[float, int]:
    """``max_t |<f, sigma_t>|`` and the index of a maximising atom."""
    if len(atoms) == 0:
        raise ValueError("empty dictionary")
    p = np.abs(atoms.pairings(f))
    t = int(np.argmax(p))
    return float(p[t]), t


def _marginal(F, factors, skip):
    """Sum over x_skip of F times every factor except ``skip``."""
    prod = np.array(F, float)
    for i, f in enumerate(factors):
        if i != skip:
            prod = prod * np.expand_dims(f, i)
    return prod.sum(axis=skip)


def dual_function_norm(F, measure: float = 1.0, cap: int = EXHAUSTIVE_CAP,
                       restarts: int = 32, seed: int = 0) -> tuple[float, list[np.ndarray], bool]:
    """``sup |<F, sigma>|`` over +-1 dual functions without an explicit dictionary.

    The last factor is always chosen optimally (sign of its marginal). If the
    remaining factors have at most ``cap`` sign patterns they are enumerated
    and the result is exact; otherwise alternating sign updates with seeded
    random restarts give a lower bound (``exact=False``).
    """
    F = np.asarray(F, float)
    m = F.ndim
    fshapes = _factor_shapes(F.shape)
    last = m - 1
    free_bits = sum(math.prod(s) for s in fshapes[:last])
    best, best_factors = -1.0, None

    def complete(factors):
        marg = _marginal(F, factors + [np.ones(fshapes[last])], last)
        factors = factors + [np.where(marg >= 0, 1.0, -1.0)]
        return float(np.abs(marg).sum()), factors

    if 2**free_bits <= cap:
        if free_bits == 0:
            best, best_factors = complete([])
        else:
            for bits in itertools.product((-1.0, 1.0), repeat=free_bits):
                factors, pos = [], 0
                for s in fshapes[:last]:
                    n = math.prod(s)
                    factors.append(np.array(bits[pos:pos + n]).reshape(s))
                    pos += n
                val, full = complete(factors)
                if val > best:
                    best, best_factors = val, full
        return measure * best, best_factors, True

    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        factors = [rng.choice([-1.0, 1.0], size=s) for s in fshapes]
        val = -1.0
        while True:
            for i in range(m):
                marg = _marginal(F, factors, i)
                factors[i] = np.where(marg >= 0, 1.0, -1.0)
            new = float(abs(np.sum(F * _dual_function(factors, F.shape))))
            if new <= val + 1e-15:
                break
            val = new
        if val > best:
            best, best_factors = val, [f.copy() for f in factors]
    return measure * best, best_factors, False


def bidual_norm(f, atoms: AtomDictionary) -> float:
    """``sup <f, phi>`` over ``||phi||_dual <= 1``, as an LP in ``phi``."""
    f = np.ravel(np.asarray(f, float))
    if not np.any(f):
        return 0.0
    A = atoms.measure * atoms.atoms
    res = linprog(-atoms.measure * f, A_ub=np.vstack([A, -A]), b_ub=np.ones(2 * len(atoms)),
                  bounds=(None, None), method="highs", options=_LP_OPTIONS)
    if res.status == 3:
        return math.inf
    if res.status != 0:
        raise RuntimeError(f"bidual LP failed: {res.message}")
    return float(-res.fun)


def dual_ball_vertices(atoms: AtomDictionary, tol: float = 1e-9) -> np.ndarray:
    """Extreme points of ``{u : |<u, sigma>| <= 1 for all atoms}`` by enumeration.

    Every vertex is the solution of N linearly independent active
    constraints. Only meant for tiny grids.
    """
    A = atoms.measure * atoms.atoms
    normals = np.unique(np.array([r if r[np.flatnonzero(r)[0]] > 0 else -r for r in A]), axis=0)
    N = atoms.dim
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=N))).T
    found = []
    for rows in itertools.combinations(range(len(normals)), N):
        M = normals[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        cand = np.linalg.solve(M, signs).T
        ok = np.all(np.abs(cand @ A.T) <= 1 + tol, axis=1)
        found.extend(cand[ok])
    if not found:
        raise ValueError("dual ball is unbounded; atoms do not span the space")
    return np.unique(np.round(np.array(found), 12), axis=0)


@dataclass
class DualityReport:
    pairs: int
    max_pairing_ratio: float
    pairing_ok: bool
    primal: float
    bidual: float

    @property
    def bidual_gap(self) -> float:
        return abs(self.primal - self.bidual)


def duality_check(f, atoms: AtomDictionary, pairs: int = 20, seed: int = 0,
                  tol: float = 1e-9) -> DualityReport:
    """``|<f, g>| <= ||f||_dual ||g||_atomic`` on random ``g`` plus the bidual identity."""
    rng = np.random.default_rng(seed)
    fd, _ = dual_norm(f, atoms)
    worst = 0.0
    ok = True
    for _ in range(pairs):
        g = rng.standard_normal(atoms.dim)
        lhs = abs(atoms.inner(f, g))
        rhs = fd * atomic_norm(g, atoms).value
        if lhs > rhs + tol:
            ok = False
        if rhs > 0:
            worst = max(worst, lhs / rhs)
    primal = atomic_norm(f, atoms).value
    return DualityReport(pairs, worst, ok, primal, bidual_norm(f, atoms))


# -- nearest points and separation --------------------------------------

BALL_KINDS = ("sigma", "dual", "hilbert")


def _merge_balls(balls):
    radii = dict.fromkeys(BALL_KINDS, 0.0)
    for kind, c in balls:
        if kind not in radii:
            raise ValueError(f"unknown ball kind {kind!r}; expected one of {BALL_KINDS}")
        if c <= 0:
            raise ValueError("ball scales must be positive")
        radii[kind] += float(c)
    return radii


@dataclass
class _Projection:
    point: np.ndarray
    sigma: np.ndarray
    u: np.ndarray
    lam: np.ndarray


def _project_polytope(f, atoms: AtomDictionary | None, a_sigma: float, a_dual: float) -> _Projection:
    """Nearest point to ``f`` in ``a_sigma conv(atoms) + a_dual V_dual`` (closed)."""
    f = np.ravel(np.asarray(f, float))
    N = f.size
    zero = np.zeros(N)
    if a_sigma == 0 and a_dual == 0:
        return _Projection(zero, zero, zero, np.zeros(0))
    if atoms is None:
        raise ValueError("sigma and dual balls need an atom dictionary")
    w = atoms.measure
    A = atoms.atoms
    terms, cons = [], []
    lam = u = None
    if a_sigma > 0:
        lam = cp.Variable(len(atoms), nonneg=True)
        terms.append(A.T @ lam)
        cons.append(cp.sum(lam) <= a_sigma)
    if a_dual > 0:
        u = cp.Variable(N)
        terms.append(u)
        cons.append(cp.abs(w * (A @ u)) <= a_dual)
    p = terms[0] if len(terms) == 1 else terms[0] + terms[1]
    prob = cp.Problem(cp.Minimize(cp.sum_squares(f - p)), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"projection solver status {prob.status}")
    lam_v = np.maximum(lam.value, 0.0) if lam is not None else np.zeros(0)
    sigma = A.T @ lam_v if lam is not None else zero
    u_v = np.asarray(u.value) if u is not None else zero
    return _Projection(sigma + u_v, sigma, u_v, lam_v)


@dataclass
class SeparationResult:
    phi: np.ndarray
    nearest: np.ndarray
    pairing: float
    support: dict[str, float]
    bounds: dict[str, float]


def _support(kind, phi, atoms):
    """``sup <v, phi>`` over the closed unit ball of ``kind``."""
    if kind == "sigma":
        return dual_norm(phi, atoms)[0]
    if kind == "dual":
        return atomic_norm(phi, atoms).value
    return atoms.h_norm(phi) if atoms is not None else float(np.linalg.norm(phi))


def separate(f, balls: Sequence[tuple[str, float]], epsilon: float,
             atoms: AtomDictionary | None = None, measure: float | None = None) -> SeparationResult:
    """Separating vector with an ``epsilon`` loss, via a nearest point.

    ``g`` is the point of ``(1+eps)^-1 closure(sum_i c_i V_i)`` closest to
    ``f`` and ``phi = (f - g) / <f - g, f>``. The Hilbert part of the
    Minkowski sum is handled in closed form; the polyhedral part is a QP.
    The result is certified: ``<f, phi> >= 1`` and
    ``sup_{V_i} <v, phi> < (1 + eps) / c_i`` for every ball.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    shape = np.shape(f)
    f = np.ravel(np.asarray(f, float))
    w = atoms.measure if atoms is not None else (1.0 if measure is None else measure)

    def inner(a, b):
        return float(w * np.dot(a, b))

    radii = _merge_balls(balls)
    s = 1.0 / (1.0 + epsilon)
    proj = _project_polytope(f, atoms, s * radii["sigma"], s * radii["dual"])
    r = f - proj.point
    d = math.sqrt(inner(r, r))
    a_h = s * radii["hilbert"]
    if d <= a_h * (1 + 1e-9) + 1e-12:
        raise MembershipError("f lies in the inflated set; no separator at this epsilon")
    g = proj.point + (a_h / d) * r
    diff = f - g
    phi = diff / inner(diff, f)
    support, bounds = {}, {}
    for kind, c in balls:
        support[kind] = _support(kind, phi, atoms) if kind != "hilbert" else math.sqrt(inner(phi, phi))
        bounds[kind] = (1.0 + epsilon) / c
    pairing = inner(f, phi)
    if pairing < 1 - 1e-12 or any(support[k] >= bounds[k] for k in support):
        raise SeparationError(f"separator not certified: pairing {pairing}, support {support}")
    return SeparationResult(phi.reshape(shape), g.reshape(shape), pairing, support, bounds)


# -- the decomposition --------------------------------------------------


@dataclass(frozen=True)
class ConstantSchedule:
    """``values[i] = C_i`` for ``i = 0, ..., r``."""

    r: int
    values: tuple[float, ...]

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def descending(self):
        """Levels in the order they are tried: ``(i, C_i)`` for i = r, ..., 1."""
        return [(i, self.values[i]) for i in range(self.r, 0, -1)]


def _levels(r: int, eta: Callable[[float], float]):
    """Yield ``(i, C_i, eta(C_i))`` for i = r, r-1, ..., 0."""
    C = 1.0
    for i in range(r, -1, -1):
        e = float(eta(C))
        if not e > 0:
            raise ValueError(f"eta must be positive, got eta({C}) = {e}")
        yield i, C, e
        if i:
            C = max(C, 2.0 / e)
            if not math.isfinite(C):
                raise OverflowError(f"schedule overflows at C_{i - 1}; reduce r or let eta decay slower")


def constant_schedule(r: int, eta: Callable[[float], float]) -> ConstantSchedule:
    if r < 1:
        raise ValueError("r must be >= 1")
    values = [0.0] * (r + 1)
    for i, C, _ in _levels(r, eta):
        values[i] = C
    return ConstantSchedule(r, tuple(values))


@dataclass
class RegularityDecomposition:
    sigma: np.ndarray
    u: np.ndarray
    v: np.ndarray
    C: float
    eta_C: float
    delta: float
    level: int
    steps: int
    sigma_bound: float
    sigma_witness: dict[int, float]
    u_dual: float
    v_norm: float
    phis: list[np.ndarray] = field(default_factory=list)
    failed_levels: list[int] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.sigma_bound < self.C and self.u_dual < self.eta_C and self.v_norm < self.delta


def regularity_decompose(f, atoms: AtomDictionary, delta: float, eta: Callable[[float], float],
                         margin: float = INSIDE_MARGIN) -> RegularityDecomposition:
    """``f = sigma + u + v`` with ``||sigma||_atomic < C``, ``||u||_dual < eta(C)``,
    ``||v||_H < delta`` and ``C`` from the schedule with ``r = ceil(2 / delta^2)``.

    Levels are tried from ``C_r = 1`` upwards. At each level ``sigma`` takes
    all of ``f`` if its atomic norm allows; otherwise a QP minimises
    ``||f - sigma - u||_H`` over the two shrunken balls. For every failed
    level the separating vector ``(f - p) / <f - p, f>`` (``p`` the nearest
    point) is kept in ``phis``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    shape = np.shape(f)
    f = np.ravel(np.asarray(f, float))
    if atoms.h_norm(f) > 1 + 1e-12:
        raise ValueError("need ||f||_H <= 1")
    r = math.ceil(2.0 / delta**2 - 1e-12)
    f_norm = atomic_norm(f, atoms)
    keep = 1.0 - margin
    phis, failed = [], []
    best = math.inf
    levels = ((i, C, e) for i, C, e in _levels(r, eta) if i > 0)
    for steps, (i, C, e) in enumerate(levels, start=1):
        if f_norm.value <= keep * C:
            zero = np.zeros_like(f)
            return RegularityDecomposition(
                f.reshape(shape), zero.reshape(shape), zero.reshape(shape), C, e, delta, i, steps,
                f_norm.value, f_norm.witness, 0.0, 0.0, phis, failed)
        proj = _project_polytope(f, atoms, keep * C, keep * e)
        v = f - proj.sigma - proj.u
        v_norm = atoms.h_norm(v)
        best = min(best, v_norm)
        if v_norm < keep * delta:
            lam = proj.lam
            witness = {int(t): float(lam[t]) for t in np.flatnonzero(lam > 1e-14)}
            u_dual, _ = dual_norm(proj.u, atoms)
            return RegularityDecomposition(
                proj.sigma.reshape(shape), proj.u.reshape(shape), v.reshape(shape), C, e, delta, i,
                steps, float(lam.sum()), witness, u_dual, v_norm, phis, failed)
        diff = f - proj.point
        phis.append((diff / atoms.inner(diff, f)).reshape(shape))
        failed.append(i)
    raise DecompositionError(f"no level certified within {r} steps; best residual {best:.3e}")


@dataclass
class PhiFamilyReport:
    count: int
    max_pair: float
    pair_bound: float
    pairs_ok: bool
    sum_norm_sq: float
    sum_norm_bound: float
    sum_ok: bool
    pairings: list[float]


def phi_family_diagnostics(phis: Sequence[np.ndarray], schedule: ConstantSchedule | None, delta: float,
                           measure: float = 1.0, f=None, slack: float = 1e-6) -> PhiFamilyReport:
    """Pairwise inner products and the norm of the sum for a separator family.

    Checks ``|<phi_i, phi_j>| <= 1/2`` for ``i != j`` and
    ``||sum phi||^2 <= r delta^-2 + (r^2 - r) / 2``; with ``f`` also reports
    each ``<phi_i, f>``.
    """
    phis = [np.ravel(p) for p in phis]
    r = len(phis)
    G = measure * np.array([[np.dot(a, b) for b in phis] for a in phis]) if r else np.zeros((0, 0))
    off = [abs(G[i, j]) for i in range(r) for j in range(r) if i != j]
    max_pair = max(off) if off else 0.0
    total = float(G.sum()) if r else 0.0
    bound = r / delta**2 + (r * r - r) / 2.0
    pairings = [float(measure * np.dot(p, np.ravel(f))) for p in phis] if f is not None else []
    return PhiFamilyReport(r, max_pair, 0.5, max_pair <= 0.5 + slack, total, bound,
                           total <= bound * (1 + slack), pairings)
