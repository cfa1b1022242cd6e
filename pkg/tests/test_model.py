import numpy as np
import pytest

from splash.model import StModel, check_stability, population_autocov, reduced_form
from splash.simulate import gen_design_a, gen_design_b, RngSpec
from splash.exceptions import ConvergenceError

from oracles import lyapunov_by_series, random_stable_model


def _model(a, b, k=None, sigma=None):
    n = np.asarray(a).shape[0]
    return StModel(np.asarray(a, float), np.asarray(b, float),
                   np.eye(n) if sigma is None else sigma, bandwidth_k=n - 1 if k is None else k)


def test_invariants_rejected():
    with pytest.raises(ValueError, match="diagonal"):
        _model([[0.1, 0], [0, 0]], np.eye(2))
    with pytest.raises(ValueError, match="bandwidth"):
        _model(np.zeros((3, 3)), [[0, 0, 1.0], [0, 0, 0], [0, 0, 0]], k=1)
    with pytest.raises(ValueError, match="positive definite"):
        _model(np.zeros((2, 2)), np.zeros((2, 2)), sigma=np.diag([1.0, -1.0]))
    with pytest.raises(ValueError, match="symmetric"):
        StModel(np.zeros((2, 2)), np.zeros((2, 2)), np.array([[1.0, 0.1], [0.0, 1.0]]), 1, 1)


def test_model_arrays_are_frozen_copies():
    a = np.zeros((2, 2))
    m = _model(a, np.eye(2) * 0.5)
    a[0, 1] = 1.0
    assert m.a[0, 1] == 0.0
    with pytest.raises(ValueError):
        m.b[0, 0] = 2.0


def test_stability_examples():
    rep = check_stability(_model(np.zeros((3, 3)), 0.5 * np.eye(3)), 0.1)
    assert rep.passed and rep.norm_a == 0 and rep.norm_b == 0.5
    # C_B / (1 - delta_a) = 1 is not strictly below one
    assert not check_stability(_model(np.zeros((3, 3)), 0.5 * np.eye(3)), 0.5).b_bounded
    a = np.array([[0, 0.6, 0.6], [0.1, 0, 0], [0, 0.1, 0]])
    rep = check_stability(_model(a, 0.1 * np.eye(3)), 0.9)
    assert not rep.a_bounded and not rep.passed
    # Design B: ||A||_{1v inf} = 0.8 and ||B||_{1v inf} = 0.25, so clause (a) holds
    # for delta_a = 0.8 but 0.25 / 0.2 > 1 violates the (sufficient) clause (b)
    # for every admissible delta_a, although the reduced form is stable.
    rep = check_stability(gen_design_b(5), 0.8)
    assert rep.a_bounded and not rep.b_bounded
    assert rep.norm_a == pytest.approx(0.8) and rep.norm_b == pytest.approx(0.25)
    assert rep.spectral_norm_c == pytest.approx(0.814, abs=1e-3)
    with pytest.raises(ValueError):
        check_stability(gen_design_b(2), 1.0)


def test_reduced_form_examples():
    b = np.array([[0.3, 0.1], [0.0, 0.2]])
    rf = reduced_form(_model(np.zeros((2, 2)), b))
    assert np.array_equal(rf.c, b) and np.array_equal(rf.d, np.eye(2))
    rf = reduced_form(_model([[0.0]], [[0.5]]))
    assert rf.c[0, 0] == 0.5
    m = gen_design_a(12, 2, RngSpec(3))
    rf = reduced_form(m)
    assert np.abs((np.eye(12) - m.a) @ rf.c - m.b).max() <= 1e-10


def test_reduced_form_singular():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(np.linalg.LinAlgError):
        reduced_form(_model(a, np.eye(2) * 0.1))


def test_population_autocov_trivial_cases():
    rf = reduced_form(_model(np.zeros((2, 2)), np.zeros((2, 2)), sigma=np.diag([2.0, 3.0])))
    assert np.allclose(population_autocov(rf, np.diag([2.0, 3.0])), np.diag([2.0, 3.0]))
    assert np.allclose(population_autocov(rf, np.diag([2.0, 3.0]), lag=1), 0.0)
    rf = reduced_form(_model([[0.0]], [[0.5]]))
    assert population_autocov(rf, np.eye(1))[0, 0] == pytest.approx(4 / 3, abs=1e-12)
    assert population_autocov(rf, np.eye(1), lag=1)[0, 0] == pytest.approx(2 / 3, abs=1e-12)


def test_population_autocov_lyapunov_residual_and_series_oracle():
    rng = np.random.default_rng(7)
    a, b, s = random_stable_model(4, 3, rng)
    m = StModel(a, b, s, 3)
    rf = reduced_form(m)
    tol = 1e-12
    s0 = population_autocov(rf, s, tol=tol)
    q = rf.d @ s @ rf.d.T
    assert np.abs(s0 - rf.c @ s0 @ rf.c.T - q).max() <= 10 * tol
    assert np.allclose(s0, lyapunov_by_series(rf.c, q), atol=1e-10)
    assert np.allclose(s0, s0.T) and np.linalg.eigvalsh(s0).min() > 0
    s2 = population_autocov(rf, s, lag=2, tol=tol)
    assert np.allclose(s2, rf.c @ rf.c @ s0)


def test_population_yule_walker_identity():
    m = gen_design_a(16, 3, RngSpec(11))
    rf = reduced_form(m)
    s0 = population_autocov(rf, m.sigma_eps)
    s1 = population_autocov(rf, m.sigma_eps, lag=1)
    assert np.abs(s1 - m.a @ s1 - m.b @ s0).max() <= 1e-10


def test_population_autocov_decays_off_band():
    m = gen_design_a(24, 1, RngSpec(5))
    s0 = population_autocov(reduced_form(m), m.sigma_eps)
    i, j = np.indices(s0.shape)
    near = np.abs(s0[np.abs(i - j) <= 1]).mean()
    far = np.abs(s0[np.abs(i - j) > 4]).mean()
    assert far < near


def test_population_autocov_diverges_when_unstable():
    from splash.model import ReducedForm
    rf = ReducedForm(np.array([[1.1]]), np.eye(1))
    with pytest.raises(ConvergenceError):
        population_autocov(rf, np.eye(1))
