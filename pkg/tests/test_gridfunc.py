import numpy as np
import pytest

from simplexlab.gridfunc import (
    GridFunction,
    aligned_box,
    constant,
    gaussian,
    indicator,
    interpolate,
    random_sign,
    sample,
    smooth_bump,
)


def test_norms_use_cell_measure():
    F = constant(2, 2.0, ((0, 1), (0, 2)), level=3)
    assert F.cell_volume == pytest.approx(1 / 64)
    assert F.norm(1) == pytest.approx(4.0)
    assert F.norm(2) == pytest.approx(np.sqrt(8.0))
    assert F.norm(np.inf) == 2.0
    assert F.integral() == pytest.approx(4.0)
    with pytest.raises(ValueError):
        F.norm(0)


def test_shape_validation():
    with pytest.raises(ValueError):
        GridFunction(((0, 1),), np.zeros((1,)))
    with pytest.raises(ValueError):
        GridFunction(((0, 1), (0, 1)), np.zeros(4))
    with pytest.raises(ValueError):
        GridFunction(((1, 0),), np.zeros(4))


def test_samples_are_immutable():
    F = gaussian(1, level=2)
    with pytest.raises(ValueError):
        F.samples[0] = 3.0


def test_aligned_box():
    assert aligned_box(((-0.3, 0.7),), 2) == ((-0.5, 0.75),)


def test_interpolation_exact_for_multilinear():
    F = sample(lambda x, y: 1 + 2 * x - y + 0.5 * x * y, ((-1, 1), (-1, 1)), level=3)
    pts = np.random.default_rng(0).uniform(-0.9, 0.9, (200, 2))
    want = 1 + 2 * pts[:, 0] - pts[:, 1] + 0.5 * pts[:, 0] * pts[:, 1]
    np.testing.assert_allclose(F(pts), want, atol=1e-13)


def test_interpolation_zero_outside_box():
    F = constant(1, 1.0, ((0, 1),), level=3)
    assert F(np.array([[1.5], [-0.1]])).tolist() == [0.0, 0.0]
    assert F(np.array([[0.01]]))[0] == 1.0


def test_interpolate_complex_samples():
    box = ((0.0, 1.0),)
    vals = np.array([1 + 1j, 3 - 1j])
    out = interpolate(vals, box, np.array([[0.5]]))
    assert out[0] == pytest.approx(2.0 + 0j)


def test_generators():
    assert smooth_bump(1, 0.0, 1.0, level=5).norm(np.inf) <= 1.0
    assert smooth_bump(1, 0.0, 1.0, level=5)(np.array([[1.5]]))[0] == 0.0
    E = indicator(2, ((0, 1), (0, 1)), level=3)
    assert set(np.unique(E.samples)) == {0.0, 1.0}
    assert E.integral() == pytest.approx(1.0)
    S = random_sign(2, seed=3, block=0.5, box=((-1, 1), (-1, 1)), level=3)
    assert set(np.unique(S.samples)) <= {-1.0, 1.0}
    assert np.array_equal(S.samples, random_sign(2, 3, 0.5, ((-1, 1), (-1, 1)), 3).samples)


def test_csv_and_binary_roundtrip(tmp_path):
    F = gaussian(2, (0.1, -0.2), ((-1, 1), (-0.5, 1)), level=3)
    G = GridFunction.from_csv(F.to_csv(tmp_path / "f.csv"))
    assert G.box == F.box and np.array_equal(G.samples, F.samples)
    assert np.array_equal(GridFunction.from_csv(tmp_path / "f.csv").samples, F.samples)
    H = GridFunction.from_bytes(F.to_bytes())
    assert H.box == F.box and np.array_equal(H.samples, F.samples)
    with pytest.raises(ValueError):
        GridFunction.from_bytes(b"nope")
    with pytest.raises(ValueError):
        GridFunction.from_csv("garbage\n1,2\n")
