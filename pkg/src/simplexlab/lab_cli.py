"""Command-line experiment runner.

Subcommands ``verify <suite>``, ``cancellation``, ``tree-pipeline``,
``single-tree`` and ``encode-modulated`` each read an optional config file
(see :mod:`simplexlab.config`) and write one CSV report. The exit status is
0 when every declared tolerance holds, 1 when one fails and 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .encodings import (
    BetaConfiguration,
    ModulationSetup,
    binomial_identity,
    encoding_discrepancy,
    norm_ratio_check,
    phase_identity_error,
    tilde_transform,
    verify_change_of_variables,
)
from .grid_forms import BudgetExceeded, QuadratureGrid, Tile, holder_ratio, tile_decomposition_check
from .gridfunc import gaussian
from .kernels import ScaleWindow, get_kernel, make_cutoff, psi, psi_l1_norm, verify_cz
from .regularity import (
    AtomDictionary,
    atomic_norm,
    bidual_norm,
    dual_ball_vertices,
    dual_function_norm,
    regularity_decompose,
    separate,
)
from .trees import (
    TileField,
    corollary_budget,
    coverage_check,
    loomis_whitney_diagnostic,
    select_trees,
    single_tree_search,
    small_tiles_sum,
)

SCHEMA = "simplexlab-report/1"


@dataclass
class ExperimentReport:
    experiment: str
    config: ExperimentConfig
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    attachments: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def add(self, *row):
        self.rows.append(list(row))

    def check(self, label: str, ok: bool):
        if not ok:
            self.failures.append(label)
        return ok

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema: {SCHEMA} experiment={self.experiment}\n")
        buf.write(f"# config: {self.config.echo_json()}\n")
        buf.write(f"# env: simplexlab={__version__} numpy={np.__version__}\n")
        for note in self.notes:
            buf.write(f"# note: {note}\n")
        buf.write(f"# status: {'pass' if self.passed else 'fail'}")
        if self.failures:
            buf.write(" failed=" + ";".join(self.failures))
        buf.write("\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return " ".join(str(x) for x in v)
    return v


def _grid(cfg: ExperimentConfig, functions):
    return QuadratureGrid.covering(functions, level=cfg.level, budget=cfg.budget, threads=cfg.threads)


def _default_gaussians(cfg: ExperimentConfig):
    if cfg.functions:
        return cfg.build_functions()
    centres = [(0.5,) * cfg.m, (0.3,) + (-0.2,) * (cfg.m - 1), (-0.4,) + (0.6,) * (cfg.m - 1)]
    return [gaussian(cfg.m, centres[i % 3], level=cfg.level) for i in range(cfg.m + 1)]


# -- verification suites -------------------------------------------------

VERIFY_COLUMNS = ["suite", "check", "instance", "value", "tolerance", "passed"]


def _row(rep: ExperimentReport, suite, check, instance, value, tol, ok):
    rep.add(suite, check, instance, value, tol, rep.check(f"{check}[{instance}]", bool(ok)))


def suite_partition(cfg, rep):
    c = make_cutoff()
    t = np.geomspace(1e-3, 1e3, 10_000)
    total = sum(c(np.ldexp(t, -k)) for k in range(-20, 21))
    err = float(np.max(np.abs(total - 1.0)))
    _row(rep, "partition-of-unity", "max |sum phi - 1|", 0, err, 1e-10, err < 1e-10)


def suite_kernel_bounds(cfg, rep):
    K, c = get_kernel(cfg.kernel), make_cutoff()
    window = ScaleWindow(*(cfg.window or (-3, 3)))
    r = verify_cz(K, c, window, 2001)
    _row(rep, "kernel-bounds", "max |t K(t)|", 0, r.max_value_ratio, 1.0, r.max_value_ratio <= 1.0)
    _row(rep, "kernel-bounds", "max t^2 |K'(t)|", 0, r.max_deriv_ratio, 1.0, r.max_deriv_ratio <= 1.0)
    t = np.geomspace(2.0**window.lo / 8, 2.0 ** (window.hi + 4), 4001)
    for k in window:
        v = psi(K, c, k, t)
        outside = (t < 2.0**k) | (t > 2.0 ** (k + 2))
        _row(rep, "kernel-bounds", "support violations", k, int(np.count_nonzero(v[outside])), 0,
             not np.any(v[outside]))
        odd = float(np.max(np.abs(psi(K, c, k, -t) + v)))
        _row(rep, "kernel-bounds", "oddness defect", k, odd, 0.0, odd == 0.0)
    rep.notes.append(f"fourier sup of psi_S ~ {r.fourier_sup:.4f} (approximate, diagnostic only)")


def suite_psi_l1(cfg, rep):
    K, c = get_kernel(cfg.kernel), make_cutoff()
    vals = {k: psi_l1_norm(K, c, k) for k in range(-3, 4)}
    ref = vals[0]
    for k, v in vals.items():
        rel = abs(v - ref) / ref
        _row(rep, "psi-l1", "relative spread vs k=0", k, rel, 1e-8, rel < 1e-8)


def suite_tile_decomposition(cfg, rep):
    F = _default_gaussians(replace(cfg, m=2) if not cfg.functions else cfg)
    window = ScaleWindow(*(cfg.window or (-1, 1)))
    r = tile_decomposition_check(F, get_kernel(cfg.kernel), make_cutoff(), window, _grid(cfg, F))
    _row(rep, "tile-decomposition", "relative difference", 0, r.relative_difference, 1e-6,
         r.relative_difference < 1e-6)


def suite_binomial(cfg, rep):
    bad = 0
    for k in range(0, 13):
        for m in range(0, k + 1):
            want = math.factorial(k) if m == k else 0
            bad += binomial_identity(k, m) != want
    _row(rep, "binomial", "mismatches for 0<=m<=k<=12", 0, bad, 0, bad == 0)


def suite_change_of_variables(cfg, rep):
    K, c = get_kernel(cfg.kernel), make_cutoff()
    window = ScaleWindow(*(cfg.window or (-1, 0)))
    centres = [(0.5, 0.5), (0.3, -0.2), (-0.4, 0.6)]
    F = [gaussian(2, cc, level=7) for cc in centres]
    grid = QuadratureGrid.covering(F, level=cfg.level, budget=cfg.budget, threads=cfg.threads)
    for n in range(cfg.instances):
        betas = BetaConfiguration.random(2, cfg.seed + n)
        r = verify_change_of_variables(F, K, c, window, betas, grid=grid, level=cfg.level)
        _row(rep, "change-of-variables", "relative difference", n, r.relative_difference, 1e-4,
             r.relative_difference < 1e-4)
        err = max(norm_ratio_check(F, tilde_transform(F, betas), (2, 3, 4)))
        _row(rep, "change-of-variables", "norm ratio error", n, err, 1e-3, err < 1e-3)


def suite_duality(cfg, rep):
    rng = np.random.default_rng(cfg.seed)
    for shape in ((2, 2), (2, 3)):
        atoms = AtomDictionary.dual_functions(shape)
        for n in range(cfg.instances):
            f = rng.standard_normal(shape)
            gap = abs(atomic_norm(f, atoms).value - bidual_norm(f, atoms))
            _row(rep, "duality", f"bidual gap {shape[0]}x{shape[1]}", n, gap, 1e-9, gap < 1e-9)
            g = rng.standard_normal(shape)
            lhs = abs(atoms.inner(f, g))
            rhs = dual_function_norm(f)[0] * atomic_norm(g, atoms).value
            _row(rep, "duality", "pairing slack", n, lhs - rhs, 1e-9, lhs <= rhs + 1e-9)


def suite_separation(cfg, rep):
    atoms = AtomDictionary.dual_functions((2, 2))
    verts = dual_ball_vertices(atoms)
    reach_sig = max(atoms.h_norm(a) for a in atoms.atoms)
    reach_dual = max(atoms.h_norm(v) for v in verts)
    rng = np.random.default_rng(cfg.seed)
    eps = 0.1
    for n in range(cfg.instances):
        c_sig, c_dual, c_h = rng.uniform(0.2, 1.0, 3)
        balls = [("sigma", c_sig), ("dual", c_dual), ("hilbert", c_h)]
        f = rng.standard_normal((2, 2))
        # the Minkowski sum lies in an H-ball of radius `reach`, so f is outside it
        reach = c_sig * reach_sig + c_dual * reach_dual + c_h
        f *= rng.uniform(1.05, 2.0) * reach / atoms.h_norm(f)
        res = separate(f, balls, eps, atoms=atoms)
        phi = res.phi.ravel()
        worst = max(float(np.max(atoms.atoms @ phi)) * atoms.measure * c_sig / (1 + eps),
                    float(np.max(verts @ phi)) * atoms.measure * c_dual / (1 + eps),
                    atoms.h_norm(phi) * c_h / (1 + eps))
        _row(rep, "separation", "pairing <f,phi>", n, res.pairing, 1.0, res.pairing >= 1 - 1e-12)
        _row(rep, "separation", "max c_i sup_V_i <v,phi> / (1+eps)", n, worst, 1.0, worst < 1.0)


def suite_regularity(cfg, rep):
    atoms = AtomDictionary.dual_functions((4, 4), measure=1 / 16)
    delta = 0.3
    eta = lambda a: 1.0 / (10.0 * a)  # noqa: E731
    for n in range(cfg.instances):
        f = np.random.default_rng(cfg.seed + n).choice([-1.0, 1.0], (4, 4))
        f /= atoms.h_norm(f)
        d = regularity_decompose(f, atoms, delta, eta)
        ok = (d.steps <= 23 and atomic_norm(d.sigma, atoms).value < d.C
              and dual_function_norm(d.u, atoms.measure)[0] < d.eta_C
              and atoms.h_norm(d.v) < delta
              and float(np.max(np.abs(d.sigma + d.u + d.v - f))) < 1e-12)
        _row(rep, "regularity", "certified decomposition (steps)", n, d.steps, 23, ok)


def suite_selection(cfg, rep):
    bad = 0
    for n in range(cfg.instances):
        fld = TileField.random(2, (0, 1, 2), 3, cfg.seed + n)
        sel = select_trees(fld, 0.8)
        seen = sorted(sel.residual + [k for v in sel.trees.values() for k in v])
        bad += seen != sorted(fld.keys())
        bad += any(abs(fld.coefficient(k)) >= 0.8 for k in sel.residual)
    _row(rep, "selection", "partition defects", 0, bad, 0, bad == 0)


def suite_small_tiles(cfg, rep):
    for n in range(cfg.instances):
        fld = TileField.random(2, (-1, 0, 1), 2, cfg.seed + n, scale=0.3)
        for alpha in (0.8, 0.9, 1.0):
            r = small_tiles_sum(fld, 0.3, alpha)
            _row(rep, "small-tiles", f"linear - bound (alpha={alpha})", n, r.linear - r.bound, 0.0, r.holds)


def suite_corollary(cfg, rep):
    for args, want in (((5, 0.1, 10), 5.0), ((10, 0.1, 10), 10.0), ((20, 0.1, 10), 11.0)):
        got = corollary_budget(*args)
        _row(rep, "corollary", f"budget{args}", 0, got, want, abs(got - want) < 1e-12)


def suite_encoding(cfg, rep):
    K, c = get_kernel(cfg.kernel), make_cutoff()
    window = ScaleWindow(*(cfg.window or (-2, 0)))
    setup = _modulation_setup(cfg)
    err = _phase_identity(setup, cfg.seed)
    _row(rep, "encoding", "phase identity error", 0, err, 1e-10, err < 1e-10)
    gs, fs = _modulation_inputs(cfg, setup)
    eps = list(cfg.epsilon)
    disc = [encoding_discrepancy(setup.with_epsilon(e), gs, fs, K, c, window, cfg.level).discrepancy for e in eps]
    for e, v in zip(eps, disc):
        rep.add("encoding", "discrepancy", e, v, "", "")
    shrink = cfg.shrink if cfg.shrink is not None else 0.6
    ratio = disc[-1] / disc[0] if disc[0] else 0.0
    _row(rep, "encoding", "discrepancy ratio last/first epsilon", 0, ratio, shrink, ratio <= shrink)


SUITES: dict[str, Callable] = {
    "partition-of-unity": suite_partition,
    "kernel-bounds": suite_kernel_bounds,
    "psi-l1": suite_psi_l1,
    "tile-decomposition": suite_tile_decomposition,
    "binomial": suite_binomial,
    "change-of-variables": suite_change_of_variables,
    "duality": suite_duality,
    "separation": suite_separation,
    "regularity": suite_regularity,
    "selection": suite_selection,
    "small-tiles": suite_small_tiles,
    "corollary": suite_corollary,
    "encoding": suite_encoding,
}


def run_verify(cfg: ExperimentConfig, suite: str) -> ExperimentReport:
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; known: {', '.join(SUITES)}")
    rep = ExperimentReport(f"verify:{suite}", cfg, VERIFY_COLUMNS)
    SUITES[suite](cfg, rep)
    return rep


# -- experiments -----------------------------------------------------------


def run_cancellation(cfg: ExperimentConfig) -> ExperimentReport:
    """Hoelder-normalised ratios along a ladder of window lengths.

    Measures how the ratio decays; it does not prove sublinear growth.
    """
    if len(cfg.ladder) < 3:
        raise ConfigError("cancellation needs a ladder of at least 3 window lengths")
    K, c = get_kernel(cfg.kernel), make_cutoff()
    exps = cfg.exponents or tuple([float(cfg.m + 1)] * (cfg.m + 1))
    families = [("configured", cfg.build_functions())]
    families += [(f"random-sign[{i}]", cfg.random_sign_family(i)) for i in range(cfg.random_family)]
    rep = ExperimentReport("cancellation", cfg, ["length", "window_lo", "window_hi", "family", "ratio"])
    rep.notes.append("measured decay of |Lambda_S| / (|S| prod ||F_i||_p); a measurement, not a proof")
    best = {}
    for L in cfg.ladder:
        w = ScaleWindow.ending_at(cfg.top, L)
        for name, F in families:
            r = holder_ratio(F, K, c, w, exps, _grid(cfg, F))
            rep.add(L, w.lo, w.hi, name, r)
            best[L] = max(best.get(L, 0.0), r)
    for L in cfg.ladder:
        rep.add(L, "", "", "max", best[L])
    for a, b in zip(cfg.ladder, cfg.ladder[1:]):
        rep.add(b, "", "", f"decay {a}->{b}", best[b] / best[a] if best[a] else float("nan"))
    if cfg.max_decay is not None:
        first, last = cfg.ladder[0], cfg.ladder[-1]
        ratio = best[last] / best[first] if best[first] else 0.0
        rep.add(last, "", "", f"decay {first}->{last}", ratio)
        rep.check(f"decay {first}->{last} <= {cfg.max_decay}", ratio <= cfg.max_decay)
    return rep


def run_tree_pipeline(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.m not in (1, 2):
        raise ConfigError("tree-pipeline supports m = 1 or 2")
    K, c = get_kernel(cfg.kernel), make_cutoff()
    F = cfg.build_functions()
    window = cfg.scale_window
    grid = _grid(cfg, F)
    fld = TileField.from_functions(F, K, c, window, grid)
    sel = select_trees(fld, cfg.delta)
    small = small_tiles_sum(fld, cfg.delta, cfg.alpha)
    lw = loomis_whitney_diagnostic(fld, F)
    cov = coverage_check(sel, lw)
    rep = ExperimentReport("tree-pipeline", cfg, ["record", "name", "value"])
    rep.add("field", "tiles", len(fld))
    rep.add("field", "max |a_I|", max((abs(a) for a in fld.coefficients().values()), default=0.0))
    covered = sorted(sel.residual + [k for v in sel.trees.values() for k in v])
    rep.add("partition", "exact", rep.check("partition", covered == fld.keys()
                                            and not any(abs(fld.coefficient(k)) >= cfg.delta for k in sel.residual)))
    rep.add("selection", "tops", len(sel.tops))
    rep.add("selection", "residual tiles", len(sel.residual))
    rep.add("selection", "residual total", sel.residual_total)
    rep.add("small-tiles", "linear", small.linear)
    rep.add("small-tiles", "moment", small.moment)
    rep.add("small-tiles", "holds", rep.check("small-tiles", small.holds))
    rep.add("loomis-whitney", "empirical constant", lw.constant)
    rep.add("loomis-whitney", "violations", len(lw.violations))
    rep.check("loomis-whitney violations", not lw.violations)
    rep.add("coverage", "worst product", cov.worst)
    rep.add("coverage", "ok", rep.check("coverage", cov.ok))
    rep.attachments["selection"] = sel.to_csv()
    for n, top in enumerate(sel.tops):
        tile = Tile.from_prefix(top[0], top[1])
        st = single_tree_search(F, K, c, tile, cfg.delta, cfg.cap, grid)
        S_delta = len(st.window) if st.met else cfg.cap
        rep.add(f"top{n}", "tile", f"{top[0]}:{' '.join(map(str, top[1]))}")
        rep.add(f"top{n}", "a_J", fld.coefficient(top))
        rep.add(f"top{n}", "tree tiles", len(sel.trees[top]))
        rep.add(f"top{n}", "qualifying length", len(st.window))
        rep.add(f"top{n}", "met", st.met)
        rep.add(f"top{n}", "budget", corollary_budget(top[0] - window.lo + 1, cfg.delta, S_delta))
    return rep


def run_single_tree(cfg: ExperimentConfig) -> ExperimentReport:
    K, c = get_kernel(cfg.kernel), make_cutoff()
    F = cfg.build_functions()
    offsets = cfg.tile_offsets or (0,) * cfg.m
    if len(offsets) != cfg.m:
        raise ConfigError(f"tile_offsets needs {cfg.m} entries (the last offset is implied)")
    top = Tile.from_prefix(cfg.tile_k, offsets)
    st = single_tree_search(F, K, c, top, cfg.delta, cfg.cap, _grid(cfg, F))
    rep = ExperimentReport("single-tree", cfg, ["length", "window_lo", "window_hi", "ratio", "qualifies"])
    for L, r in enumerate(st.ratios, start=1):
        w = ScaleWindow.ending_at(top.k, L)
        rep.add(L, w.lo, w.hi, r, r <= cfg.delta)
    rep.notes.append(f"selected length {len(st.window)} met={st.met}")
    return rep


def _poly(text: str):
    kind, _, coeffs = text.partition(":")
    if kind != "poly":
        raise ConfigError(f"modulation functions are 'poly:c0,c1,...', got {text!r}")
    cs = [float(v) for v in coeffs.split(",")]
    return lambda x: np.polynomial.polynomial.polyval(np.asarray(x, float), cs)


def _modulation_setup(cfg: ExperimentConfig) -> ModulationSetup:
    mods = cfg.modulation or tuple("poly:0,1" for _ in range(cfg.d))
    if len(mods) != cfg.d:
        raise ConfigError(f"need {cfg.d} modulation functions")
    return ModulationSetup(cfg.d, tuple(_poly(s) for s in mods), cfg.speeds, cfg.epsilon[0])


def _modulation_inputs(cfg: ExperimentConfig, setup: ModulationSetup):
    n = setup.m + 1
    if cfg.functions:
        if len(cfg.functions) != n:
            raise ConfigError(f"need {n} one-dimensional functions f0..f{n - 1}")
        one = [s.build(1, cfg.level) for s in cfg.functions]
    else:
        centres = (0.3, -0.2, 0.5, -0.5, 0.1)
        one = [gaussian(1, centres[i % 5], level=cfg.level) for i in range(n)]
    return one[: setup.d + 1], one[setup.d + 1:]


def _phase_identity(setup: ModulationSetup, seed: int) -> float:
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2, 2, (1000, setup.m))
    t = rng.uniform(-2, 2, 1000)
    gs = [lambda x, a=a: np.exp(-(x - a) ** 2) for a in np.linspace(-0.5, 0.5, setup.d + 1)]
    fs = [lambda x, a=a: np.cos(x + a) for a in np.linspace(0, 1, len(setup.b))]
    return phase_identity_error(setup, gs, fs, pts, t)


def run_encode_modulated(cfg: ExperimentConfig) -> ExperimentReport:
    K, c = get_kernel(cfg.kernel), make_cutoff()
    window = cfg.scale_window if cfg.window else ScaleWindow(-2, 0)
    setup = _modulation_setup(cfg)
    gs, fs = _modulation_inputs(cfg, setup)
    rep = ExperimentReport("encode-modulated", cfg,
                           ["epsilon", "beta_re", "beta_im", "pairing_re", "pairing_im", "discrepancy"])
    err = _phase_identity(setup, cfg.seed)
    rep.notes.append(f"phase identity error {err!r}")
    rep.check("phase identity", err < 1e-10)
    disc = []
    for e in cfg.epsilon:
        r = encoding_discrepancy(setup.with_epsilon(e), gs, fs, K, c, window, cfg.level)
        rep.add(e, r.beta_form.real, r.beta_form.imag, r.pairing.real, r.pairing.imag, r.discrepancy)
        disc.append(r.discrepancy)
    if cfg.shrink is not None and len(disc) >= 2:
        rep.check(f"discrepancy shrink <= {cfg.shrink}", disc[-1] <= cfg.shrink * disc[0])
    return rep


# -- entry point ---------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="experiment config file")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for quadrature")
    p.add_argument("--budget", type=int, help="maximum quadrature points")
    p.add_argument("--kernel", help="kernel name, overriding the config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simplexlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"simplexlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=sorted(SUITES))
    _add_common(p)
    for name, help_ in (("cancellation", "Hoelder ratios along a window-length ladder"),
                        ("tree-pipeline", "tile field, tree selection and accounting"),
                        ("single-tree", "window scan for one tree top"),
                        ("encode-modulated", "modulated-operator encoding at several epsilons")):
        _add_common(sub.add_parser(name, help=help_))
    return parser


RUNNERS = {
    "cancellation": run_cancellation,
    "tree-pipeline": run_tree_pipeline,
    "single-tree": run_single_tree,
    "encode-modulated": run_encode_modulated,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = replace(cfg, threads=args.threads)
        if args.budget is not None:
            cfg = replace(cfg, budget=args.budget)
        if args.kernel is not None:
            cfg = replace(cfg, kernel=args.kernel)
        get_kernel(cfg.kernel)
        if args.command == "verify":
            rep = run_verify(cfg, args.suite)
        else:
            rep = RUNNERS[args.command](cfg)
    except (ValueError, KeyError, BudgetExceeded, ZeroDivisionError, OverflowError) as exc:
        print(f"simplexlab: error: {exc}", file=sys.stderr)
        return 2
    text = rep.to_csv()
    out = args.out or cfg.out
    if out and out != "-":
        out = Path(out)
        out.write_text(text)
        for tag, body in rep.attachments.items():
            out.with_suffix(f".{tag}.csv").write_text(body)
    else:
        sys.stdout.write(text)
    if not rep.passed:
        print(f"simplexlab: failed: {', '.join(rep.failures)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
