import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import gaussian_beta_form, gaussian_modulated
from simplexlab.encodings import (
    BetaConfiguration,
    ComplexGridFunction,
    ModulationSetup,
    SingularConfiguration,
    binomial_identity,
    build_modulated_encoding,
    encoding_discrepancy,
    evaluate_beta_form,
    evaluate_modulated_operator,
    norm_ratio_check,
    phase_coefficients,
    phase_identity_error,
    tilde_transform,
    verify_change_of_variables,
)
from simplexlab.gridfunc import GridFunction, gaussian, smooth_bump
from simplexlab.kernels import ScaleWindow, get_kernel, make_cutoff

K = get_kernel("hilbert")
PHI = make_cutoff()
CENTRES = [(0.5, 0.5), (0.3, -0.2), (-0.4, 0.6)]
BETAS = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))

# closed-form x integral, adaptive t quadrature; see oracles.gaussian_beta_form
BETA_REF = -0.39077518281484847
# g0 at 0.3, g1 at -0.2, f2 at 0.5, N1(x) = x, b = 1, S = [-2, 0]; see oracles.gaussian_modulated
MOD_REF = complex(-0.6643038124493079, 0.014669908814785956)


def linear(x):
    return np.asarray(x, float)


# -- configurations ----------------------------------------------------------


def test_beta_configuration_matrix():
    b = BetaConfiguration(BETAS)
    assert b.m == 2
    np.testing.assert_array_equal(b.B, [[1, 1, 1], [0, 1, 0], [0, 0, 1]])
    assert b.det == pytest.approx(1.0)
    for i in range(3):
        assert abs(np.linalg.det(b.substitution(i)) * b.det) == pytest.approx(1.0)


def test_beta_configuration_errors():
    with pytest.raises(SingularConfiguration):
        BetaConfiguration([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(ValueError):
        BetaConfiguration([[0.0, 0.0], [1.0, 0.0]])


def test_beta_configuration_text_roundtrip():
    b = BetaConfiguration.random(3, seed=4)
    assert abs(b.det) >= 0.25
    again = BetaConfiguration.from_text(b.to_text())
    np.testing.assert_array_equal(again.betas, b.betas)
    with pytest.raises(ValueError):
        BetaConfiguration.from_text("gamma_0 = 1.0")


def test_complex_grid_function():
    box = ((0.0, 1.0),)
    z = ComplexGridFunction.from_samples(box, [3 + 4j, 0j])
    assert z.norm(np.inf) == 5.0
    assert z.norm(1) == pytest.approx(2.5)
    assert z(np.array([[0.5]]))[0] == pytest.approx(1.5 + 2j)
    with pytest.raises(ValueError):
        ComplexGridFunction(GridFunction(box, np.zeros(2)), GridFunction(box, np.zeros(4)))


# -- beta form --------------------------------------------------------------


def test_beta_form_zero():
    F = [gaussian(2, c, level=4) for c in CENTRES]
    F[1] = F[1].scaled(0.0)
    assert evaluate_beta_form(F, K, PHI, ScaleWindow(-1, 1), BetaConfiguration(BETAS)) == 0.0


def test_beta_form_m1_reduction():
    # beta = (0, 1) turns the form into int int F0(x) F1(x - t) psi_S(t) dt dx
    W = ScaleWindow(-2, 1)
    F = [gaussian(1, 0.2, level=5), gaussian(1, -0.4, level=5)]
    val = evaluate_beta_form(F, K, PHI, W, BetaConfiguration([[0.0], [1.0]]), level=5)
    ref = gaussian_beta_form([(0.2,), (-0.4,)], [(0.0,), (1.0,)], K, PHI, W)
    assert val == pytest.approx(ref, rel=1e-6)


def test_beta_form_gaussian_oracle():
    W = ScaleWindow(-2, 2)
    assert gaussian_beta_form(CENTRES, BETAS, K, PHI, W) == pytest.approx(BETA_REF, rel=1e-10)
    F = [gaussian(2, c, level=4) for c in CENTRES]
    assert evaluate_beta_form(F, K, PHI, W, BetaConfiguration(BETAS)) == pytest.approx(BETA_REF, rel=1e-4)


def test_beta_form_interpolated_path():
    # non-integer betas go through interpolation and still agree with the oracle
    betas = ((0.0, 0.0), (0.5, 0.0), (0.0, 0.75))
    W = ScaleWindow(-1, 1)
    F = [gaussian(2, c, level=5) for c in CENTRES]
    ref = gaussian_beta_form(CENTRES, betas, K, PHI, W)
    assert evaluate_beta_form(F, K, PHI, W, BetaConfiguration(betas), level=5) == pytest.approx(ref, rel=2e-3)


# -- change of variables ------------------------------------------------------


def test_tilde_transform_shear_m1():
    F = [smooth_bump(1, 0.5, 1.0, level=5), gaussian(1, -0.3, level=5)]
    b = BetaConfiguration([[0.0], [1.0]])
    tilde = tilde_transform(F, b, level=5)
    assert tilde.det_B == pytest.approx(1.0)
    assert [abs(d) for d in tilde.determinants] == pytest.approx([1.0, 1.0])
    errs = norm_ratio_check(F, tilde, (1, 2))
    assert max(errs) < 1e-10


def test_change_of_variables_m1():
    F = [smooth_bump(1, 0.5, 1.0, level=5), gaussian(1, -0.3, level=5)]
    r = verify_change_of_variables(F, K, PHI, ScaleWindow(-2, 1), BetaConfiguration([[0.0], [1.0]]),
                                   level=5, tilde_level=5)
    assert r.relative_difference < 1e-6


def test_change_of_variables_m2():
    # F~ is read off F by interpolation, so F needs a finer grid than the quadrature
    F = [gaussian(2, c, level=7) for c in CENTRES]
    b = BetaConfiguration.random(2, seed=1)
    r = verify_change_of_variables(F, K, PHI, ScaleWindow(-1, 0), b)
    assert r.direct != 0.0
    assert r.relative_difference < 1e-4


def test_norm_ratio_scaled_config():
    F = [gaussian(2, c, level=4) for c in CENTRES]
    b = BetaConfiguration(((0.0, 0.0), (2.0, 0.0), (0.0, 1.0)))
    tilde = tilde_transform(F, b, level=6)
    assert abs(tilde.det_B) == pytest.approx(2.0)
    assert max(norm_ratio_check(F, tilde, (1, 2, 3))) < 1e-3


# -- binomial identity --------------------------------------------------------


def test_binomial_examples():
    assert binomial_identity(2, 2) == 2
    assert binomial_identity(3, 1) == 0
    assert binomial_identity(5, 5) == 120
    assert binomial_identity(0, 0) == 1
    with pytest.raises(ValueError):
        binomial_identity(2, 3)


@pytest.mark.parametrize("d", [1, 2, 5])
def test_phase_coefficients_are_kronecker(d):
    coeffs = phase_coefficients(d)
    assert all(v == Fraction(int(r == k)) for (k, r), v in coeffs.items())
    assert len(coeffs) == sum(k + 1 for k in range(1, d + 1))


# -- modulated operator -------------------------------------------------------


def test_modulation_setup_validation():
    with pytest.raises(ValueError):
        ModulationSetup(-1, (), (1.0,))
    with pytest.raises(ValueError):
        ModulationSetup(1, (), (1.0,))
    with pytest.raises(ValueError):
        ModulationSetup(0, (), ())
    with pytest.raises(ValueError):
        ModulationSetup(0, (), (0.0,))
    with pytest.raises(ValueError):
        ModulationSetup(0, (), (1.0, 1.0))
    with pytest.raises(ValueError):
        ModulationSetup(0, (), (1.0,), epsilon=0.0)


def test_modulation_betas():
    s = ModulationSetup(1, (linear,), (1.0, 2.0), epsilon=0.1)
    assert s.m == 3
    np.testing.assert_allclose(s.betas().betas, [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 2, 0.1]])


def test_modulated_operator_oracle():
    s = ModulationSetup(1, (linear,), (1.0,))
    gs = [gaussian(1, 0.3, level=4), gaussian(1, -0.2, level=4)]
    fs = [gaussian(1, 0.5, level=4)]
    W = ScaleWindow(-2, 0)
    assert gaussian_modulated((0.3, -0.2), 0.5, K, PHI, W) == pytest.approx(MOD_REF, rel=1e-10)
    assert evaluate_modulated_operator(s, gs, fs, K, PHI, W) == pytest.approx(MOD_REF, rel=1e-4)
    assert evaluate_modulated_operator(s, gs, [fs[0].scaled(0.0)], K, PHI, W) == 0


def test_modulated_operator_d0_is_beta_form():
    s = ModulationSetup(0, (), (1.0,))
    g, f = gaussian(1, 0.3, level=5), gaussian(1, -0.1, level=5)
    W = ScaleWindow(-2, 1)
    direct = evaluate_modulated_operator(s, [g], [f], K, PHI, W, level=5)
    beta = evaluate_beta_form([g, f], K, PHI, W, BetaConfiguration([[0.0], [1.0]]), level=5)
    assert direct.imag == 0.0
    assert direct.real == pytest.approx(beta, rel=1e-12)


def test_encoding_d0_m1():
    s = ModulationSetup(0, (), (2.0,))
    g, f = gaussian(1, 0.3, level=4), gaussian(1, -0.1, level=4)
    enc = build_modulated_encoding(s, [g], [f])
    np.testing.assert_array_equal(enc.betas.betas, [[0.0], [2.0]])
    assert enc.normalization == 1.0
    assert all(isinstance(F, GridFunction) for F in enc.functions)
    x = np.array([[0.3], [-0.5], [1.1]])
    np.testing.assert_allclose(enc.functions[0](x), g(x), rtol=1e-14)
    np.testing.assert_allclose(enc.functions[1](x), f(x), rtol=1e-14)


@pytest.mark.parametrize("d, b", [(1, (1.0,)), (1, (1.0, -0.5)), (2, (0.7,)), (2, (1.0, 2.0))])
def test_phase_identity(d, b):
    s = ModulationSetup(d, tuple(linear if k % 2 else np.sin for k in range(d)), b, epsilon=0.05)
    rng = np.random.default_rng(d)
    pts = rng.uniform(-2, 2, (500, s.m))
    t = rng.uniform(-2, 2, 500)
    gs = [lambda x, a=a: np.exp(-(x - a) ** 2) for a in np.linspace(-0.5, 0.5, d + 1)]
    fs = [lambda x, a=a: np.cos(x + a) for a in np.linspace(0, 1, len(b))]
    assert phase_identity_error(s, gs, fs, pts, t) < 1e-10


def test_encoding_discrepancy_small():
    s = ModulationSetup(1, (linear,), (1.0,), epsilon=0.08)
    gs = [gaussian(1, 0.3, level=4), gaussian(1, -0.2, level=4)]
    fs = [gaussian(1, 0.5, level=4)]
    r = encoding_discrepancy(s, gs, fs, K, PHI, ScaleWindow(-2, 0))
    assert r.pairing == pytest.approx(MOD_REF, rel=1e-4)
    assert r.discrepancy < 5e-3
    assert r.discrepancy / abs(r.pairing) < 1e-2
    assert math.isfinite(r.beta_form.imag)
