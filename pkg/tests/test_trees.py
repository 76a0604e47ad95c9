import itertools

import numpy as np
import pytest

from oracles import dyadic_maximal_bruteforce
from simplexlab.grid_forms import QuadratureGrid, Tile, single_scale_form
from simplexlab.gridfunc import constant, gaussian, indicator
from simplexlab.kernels import ScaleWindow, get_kernel, make_cutoff
from simplexlab.trees import (
    TileField,
    corollary_budget,
    coverage_check,
    loomis_whitney_diagnostic,
    maximal_function,
    select_trees,
    single_tree_search,
    small_tiles_sum,
    tree_sum,
)

K = get_kernel("hilbert")
PHI = make_cutoff()


@pytest.fixture(scope="module")
def gaussians():
    return [gaussian(2, (0.5, 0.5), level=4) for _ in range(3)]


@pytest.fixture(scope="module")
def field(gaussians):
    return TileField.from_functions(gaussians, K, PHI, ScaleWindow(-2, 1))


def under(key, top):
    """Brute-force projection containment: I' inside J' and s(I) <= s(J)."""
    (k, p), (kt, pt) = key, top
    if k > kt:
        return False
    lo = [2.0**k * o for o in p]
    tlo = [2.0**kt * o for o in pt]
    return all(a >= b and a + 2.0**k <= b + 2.0**kt for a, b in zip(lo, tlo))


# -- maximal function ----------------------------------------------------


def test_maximal_constant():
    M = maximal_function(constant(2, 0.7, ((0, 2), (0, 2)), level=2), 2)
    np.testing.assert_allclose(M.samples, 0.7, rtol=1e-14)


def test_maximal_indicator():
    E = indicator(2, ((0, 1), (0, 1)), box=((-2, 2), (-2, 2)), level=2)
    M = maximal_function(E, 2)
    assert M.samples.min() >= 0 and M.samples.max() <= 1
    assert np.all(M.samples[E.samples == 1] == 1)


def test_maximal_bruteforce_1d():
    E = indicator(1, ((0, 1),), box=((0, 4),), level=1)
    assert E.samples.tolist() == [1, 1, 0, 0, 0, 0, 0, 0]
    ref = dyadic_maximal_bruteforce(E.samples, 1)
    np.testing.assert_allclose(maximal_function(E, 1).samples, ref, rtol=1e-14)
    np.testing.assert_allclose(ref, [1, 1, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25])


def test_maximal_properties():
    F = gaussian(1, 0.3, box=((-2, 2),), level=3)
    M = maximal_function(F, 2)
    assert np.all(M.samples >= np.abs(F.samples) - 1e-15)
    np.testing.assert_allclose(maximal_function(F.scaled(3.0), 2).samples, 3 * M.samples, rtol=1e-13)
    G = F.with_samples(F.samples + 0.1)
    assert np.all(maximal_function(G, 2).samples >= M.samples)


# -- tile fields and Loomis-Whitney ----------------------------------------


def test_field_values(field, gaussians):
    assert len(field) == 1360
    key = (0, (0, 0))
    assert field.coefficient(key) == field.values[key]
    key = (1, (0, 0))
    assert field.coefficient(key) == pytest.approx(field.values[key] / 4)
    assert field.tile(key).value == field.values[key]


def test_field_csv(field, tmp_path):
    text = field.to_csv(tmp_path / "f.csv")
    lines = text.splitlines()
    assert lines[0] == "# simplexlab tilefield v1"
    assert lines[1] == "k,m_0,m_1,lambda_I,a_I"
    assert len(lines) == 2 + len(field)


def test_lw_zero_functions():
    Z = [constant(2, 0.0, ((-1, 1), (-1, 1)), level=2)] * 3
    fld = TileField.from_functions(Z, K, PHI, ScaleWindow(-1, 0))
    r = loomis_whitney_diagnostic(fld, Z)
    assert r.ratios == {} and r.violations == [] and r.constant == 0.0


def test_lw_constant_functions():
    ones = [constant(2, 1.0, ((-2, 2), (-2, 2)), level=3)] * 3
    fld = TileField.from_functions(ones, K, PHI, ScaleWindow(-1, 0))
    r = loomis_whitney_diagnostic(fld, ones)
    full = [key for key, low in r.minima.items() if low == 1.0 and key in r.ratios]
    assert full
    for key in full:
        assert r.ratios[key] == pytest.approx(abs(fld.coefficient(key)), rel=1e-14)


def test_lw_gaussian(field, gaussians):
    r = loomis_whitney_diagnostic(field, gaussians)
    assert not r.violations
    assert np.isfinite(r.constant) and r.constant > 0


# -- tree sums -------------------------------------------------------------


def test_tree_sum_examples(gaussians):
    grid = QuadratureGrid.covering(gaussians)
    big = Tile.from_prefix(3, (-1, -1))
    whole = tree_sum(gaussians, K, PHI, big, ScaleWindow(3, 3), grid)
    assert whole == pytest.approx(single_scale_form(gaussians, K, PHI, 3, grid), rel=1e-14)
    far = Tile.from_prefix(0, (40, 40))
    assert tree_sum(gaussians, K, PHI, far, ScaleWindow(-2, 0), grid) == 0.0
    with pytest.raises(ValueError):
        tree_sum(gaussians, K, PHI, far, ScaleWindow(-2, 1), grid)


def test_tree_sum_two_paths(gaussians):
    top = Tile.from_prefix(0, (0, 0))
    closed = tree_sum(gaussians, K, PHI, top, ScaleWindow(-2, 0), path="closed")
    tiles = tree_sum(gaussians, K, PHI, top, ScaleWindow(-2, 0), path="tiles")
    assert tiles == pytest.approx(closed, rel=1e-8)


def test_single_tree_zero():
    Z = [constant(2, 0.0, ((-1, 1), (-1, 1)), level=3)] * 3
    r = single_tree_search(Z, K, PHI, Tile.from_prefix(0, (0, 0)), 0.1, 4)
    assert r.met and len(r.window) == 1 and r.ratio == 0.0


def test_single_tree_odd_m1():
    # x0 -> 4 - x0, x1 -> -4 - x1 fixes J' = [0, 4] and both indicators and flips the sum
    F0 = indicator(1, ((-3, -1),), level=4)
    F1 = indicator(1, ((1, 3),), level=4)
    top = Tile.from_prefix(2, (0,))
    half = Tile.from_prefix(1, (0,)).projection
    assert single_scale_form([F0, F1], K, PHI, 0, region=half) != 0.0
    r = single_tree_search([F0, F1], K, PHI, top, 1e-12, 4)
    assert r.met and len(r.window) == 1 and r.ratio < 1e-15


def test_single_tree_gaussian(gaussians):
    r = single_tree_search(gaussians, K, PHI, Tile.from_prefix(0, (0, 0)), 0.1, 6)
    assert len(r.ratios) == 6 and not r.met
    assert r.ratio == min(r.ratios) and r.window == ScaleWindow(-5, 0)
    assert r.ratio == pytest.approx(0.1266, abs=1e-4)


def test_single_tree_requires_bounded(gaussians):
    with pytest.raises(ValueError):
        single_tree_search([g.scaled(2.0) for g in gaussians], K, PHI, Tile.from_prefix(0, (0, 0)), 0.1, 2)
    with pytest.raises(ValueError):
        single_tree_search(gaussians, K, PHI, Tile.from_prefix(0, (0, 0)), 0.1, 0)


# -- accounting ------------------------------------------------------------


def test_corollary_budget():
    assert corollary_budget(5, 0.1, 10) == 5
    assert corollary_budget(10, 0.1, 10) == 10
    assert corollary_budget(20, 0.1, 10) == pytest.approx(11)
    vals = [corollary_budget(n, 0.3, 7) for n in range(30)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        corollary_budget(-1, 0.1, 1)


def test_small_tiles_examples():
    empty = small_tiles_sum(TileField(2, {}), 0.3, 0.9)
    assert tuple(empty) == (0.0, 0.0)
    single = TileField.from_coefficients(2, {(0, (0, 0)): 0.15})
    r = small_tiles_sum(single, 0.3, 1.0)
    assert (r.linear, r.moment, r.bound) == (0.15, 0.15, 0.15) and r.holds
    for seed in range(5):
        rnd = TileField.random(2, (-1, 0, 1), 2, seed, scale=0.3)
        assert small_tiles_sum(rnd, 0.3, 0.9).holds
    with pytest.raises(ValueError):
        small_tiles_sum(single, 0.3, 1.5)


# -- selection -------------------------------------------------------------


def test_select_all_small():
    fld = TileField.random(2, (0, 1), 2, 0, scale=0.01)
    sel = select_trees(fld, 1.0)
    assert sel.tops == [] and sorted(sel.residual) == fld.keys()


def test_select_single_top():
    coeffs = {(1, (0, 0)): 2.0, (0, (0, 0)): 0.1, (0, (1, 1)): 0.2, (0, (2, 0)): 0.3}
    sel = select_trees(TileField.from_coefficients(2, coeffs), 1.0)
    assert sel.tops == [(1, (0, 0))]
    assert sorted(sel.trees[(1, (0, 0))]) == [(0, (0, 0)), (0, (1, 1)), (1, (0, 0))]
    assert sel.residual == [(0, (2, 0))]
    assert sel.residual_total == pytest.approx(0.3)


def test_select_nested():
    coeffs = {(1, (0, 0)): 2.0, (0, (1, 0)): 5.0}
    sel = select_trees(TileField.from_coefficients(2, coeffs), 1.0)
    assert sel.tops == [(1, (0, 0))]
    assert sel.tree_counts == {(1, (0, 0)): 2}


def test_select_threshold_is_inclusive():
    sel = select_trees(TileField.from_coefficients(1, {(0, (0,)): 1.0}), 1.0)
    assert sel.tops == [(0, (0,))]
    with pytest.raises(ValueError):
        select_trees(TileField(1, {}), 0.0)


@pytest.mark.parametrize("seed", range(20))
def test_selection_partition_bruteforce(seed):
    fld = TileField.random(2, (0, 1, 2), 3, seed)
    delta = 0.8
    sel = select_trees(fld, delta)
    seen = sorted(sel.residual + [k for v in sel.trees.values() for k in v])
    assert seen == fld.keys()
    assert all(abs(fld.coefficient(k)) < delta for k in sel.residual)
    for a, b in itertools.permutations(sel.tops, 2):
        assert not under(a, b)
    for key in fld.keys():
        if abs(fld.coefficient(key)) >= delta:
            assert any(under(key, t) for t in sel.tops)
    for top, members in sel.trees.items():
        assert all(under(k, top) for k in members)


def test_selection_csv_and_coverage(field, gaussians):
    sel = select_trees(field, 0.05)
    assert len(sel.tops) == 10
    text = sel.to_csv()
    assert text.splitlines()[1] == "k,m_0,m_1,lambda_I,a_I,class"
    classes = {line.rsplit(",", 1)[1] for line in text.splitlines()[2:]}
    assert "residual" in classes and "top0" in classes
    cov = coverage_check(sel, loomis_whitney_diagnostic(field, gaussians))
    assert cov.ok
