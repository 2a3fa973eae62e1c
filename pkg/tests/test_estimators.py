import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from semishrink import (CoeffSet, FamilyBounds, NoiseModel, ValidationError,
                        dictionary_projection, evaluate_on_grid, fourier_coeffs, h2_constants,
                        make_grid, proxy_variance, reconstruct, shrink, signal_s1)
from semishrink.analytics import coefficient_variances
from semishrink.basis import PHI_STAR, trig_value, trig_value_matrix
from semishrink.estimators import (fourier_coeffs_from_increments, proxy_variance_from_coeffs,
                                   shrink_values, true_coefficients)
from semishrink.grid import signal_from_coeffs, zero_signal
from semishrink.noise import (ObservationPath, derive_seed, signal_cell_integrals,
                              simulate_noise_batch, simulate_observations)


def _noiseless(signal, n, p):
    g = make_grid(n, p)
    return simulate_observations(signal, NoiseModel.noiseless(), g, 0)


def test_zero_increments():
    g = make_grid(2, 5)
    path = ObservationPath(grid=g, increments=np.zeros(g.N))
    assert np.all(fourier_coeffs(path).values == 0)
    assert proxy_variance(path) == 0.0


def test_direct_sum_definition():
    g = make_grid(3, 9)
    dy = np.random.default_rng(0).standard_normal(g.N)
    t = np.arange(1, g.N + 1) / g.p
    direct = trig_value_matrix(g.p, t).T @ dy / g.n
    assert np.allclose(fourier_coeffs_from_increments(dy, g), direct, atol=1e-13)
    with pytest.raises(ValidationError):
        fourier_coeffs_from_increments(dy[:-1], g)


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, a, b):
    g = make_grid(2, 11)
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, g.N))
    lhs = fourier_coeffs_from_increments(a * x + b * y, g)
    rhs = a * fourier_coeffs_from_increments(x, g) + b * fourier_coeffs_from_increments(y, g)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_basis_signal_coefficient():
    sig = signal_from_coeffs([0.0, 1.0])  # S = Trg_2
    p = 5
    theta = fourier_coeffs(_noiseless(sig, 2, p)).values
    oracle, _ = integrate.quad(lambda t: sig(t) * trig_value(2, math.ceil(t * p - 1e-12) / p),
                               0, 1, points=[k / p for k in range(1, p)], epsabs=1e-13)
    # noiseless theta_hat_j is the L2 product of S with the step function psi_j, up to
    # the composite-Simpson error (b - a) h^4 max|S''''| / 180 with h = 1 / (8 p)
    simpson = (1 / (8 * p)) ** 4 * math.sqrt(2) * (2 * math.pi) ** 4 / 180
    assert theta[1] == pytest.approx(oracle, abs=simpson)
    assert abs(theta[1] - 1) <= PHI_STAR * sig.lipschitz_L / p


def test_bias_bound_and_refinement():
    sig = signal_s1()
    errs = []
    for p in (101, 1001):
        theta_hat = fourier_coeffs(_noiseless(sig, 1, p)).values
        theta = true_coefficients(sig, make_grid(1, p)).values
        assert np.max(np.abs(theta_hat - theta)) <= PHI_STAR * sig.lipschitz_L / p
        errs.append(theta_hat[:101])
    # oracle: coefficients at p=10001 stand in for the continuous-record limit
    ref = fourier_coeffs(_noiseless(sig, 1, 10001)).values[:101]
    e101, e1001 = (np.max(np.abs(e - ref)) for e in errs)
    assert e1001 < e101


def test_shrink_examples():
    raw = CoeffSet(np.array([3.0, 4.0, 0.0, 1.5]))
    consts = h2_constants(2, 100, FamilyBounds())
    assert shrink(raw, consts).values.tolist() == raw.values.tolist()  # c_n = 0 below the gate
    vals, deg, over = shrink_values(raw.values, 2, 1.0)
    assert np.allclose(vals, [2.4, 3.2, 0.0, 1.5])
    assert not deg and not over
    vals, deg, _ = shrink_values(np.zeros(4), 2, 1.0)
    assert deg and np.all(vals == 0)
    _, _, over = shrink_values(raw.values, 2, 7.0)
    assert over


@given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.floats(0.0, 5.0))
def test_shrink_norm_and_tail(seed, d, c):
    raw = np.random.default_rng(seed).standard_normal(25)
    out, _, _ = shrink_values(raw, d, c)
    assert np.linalg.norm(out[:d]) == pytest.approx(abs(np.linalg.norm(raw[:d]) - c), abs=1e-12)
    assert np.array_equal(out[d:], raw[d:])


def test_shrink_rejects_large_d():
    with pytest.raises(ValidationError):
        shrink(CoeffSet(np.ones(5)), h2_constants(70, 100, FamilyBounds()))


def test_proxy_variance_rules():
    g = make_grid(100, 9)
    with pytest.raises(ValidationError):
        proxy_variance(ObservationPath(grid=g, increments=np.zeros(g.N)))
    # adding a constant touches only j = 1
    sig = signal_s1()
    g = make_grid(100, 101)
    p1 = simulate_observations(sig, NoiseModel(), g, derive_seed(1))
    dy2 = p1.increments + 0.3 / g.p
    assert proxy_variance(p1) == pytest.approx(
        proxy_variance(ObservationPath(grid=g, increments=dy2)), rel=1e-12)


def test_proxy_variance_mean_matches_exact_expectation():
    """Pure noise: the mean of sigma_hat over replications matches its exact expectation
    (n/p) sum_j sigma_Q tau_n(psi_j, psi_j)/n over the summed range."""
    m = NoiseModel()
    n, p, reps = 400, 1001, 200
    g = make_grid(n, p)
    dxi = simulate_noise_batch(m, g, reps, derive_seed(21))
    sig = np.array([proxy_variance_from_coeffs(fourier_coeffs_from_increments(x, g), n)
                    for x in dxi])
    # E theta_hat_j^2 = sigma_Q tau_n(psi_j, psi_j) / n^2 for pure noise
    var = coefficient_variances(p, n, m.a, m.sigma_q, d=min(n, p), first=math.isqrt(n) + 1)
    expected = (n / p) * var.sum() / n
    se = sig.std(ddof=1) / math.sqrt(reps)
    assert abs(sig.mean() - expected) <= 4 * se
    # with min(n, p) terms the level is sigma_Q (n - sqrt n) / p, not sigma_Q, when p > n
    assert expected == pytest.approx(m.sigma_q * (n - 20) / p, rel=0.05)


def test_reconstruct_exact_on_grid():
    sig = signal_s1()
    g = make_grid(1, 101)
    theta = true_coefficients(sig, g)
    rec = reconstruct(theta, np.ones(g.p))
    assert np.allclose(evaluate_on_grid(rec, g), sig(g.period_times()), atol=1e-10)
    assert np.all(evaluate_on_grid(reconstruct(theta, np.zeros(g.p)), g) == 0)
    e1 = np.zeros(g.p)
    e1[0] = 1
    assert np.allclose(evaluate_on_grid(reconstruct(theta, e1), g), theta.values[0], atol=1e-14)
    # step function: constant on each cell
    assert rec(0.5 / g.p) == pytest.approx(rec(1.0 / g.p))
    assert rec(1.0) == pytest.approx(sig(1.0), abs=1e-10)
    with pytest.raises(ValidationError):
        reconstruct(theta, np.ones(5))
    with pytest.raises(ValidationError):
        evaluate_on_grid(rec, make_grid(1, 11))


def test_dictionary_projection():
    sig = signal_s1()
    g = make_grid(1, 101)
    theta = true_coefficients(sig, g)
    rec = reconstruct(theta, np.ones(g.p))
    beta = dictionary_projection(rec, "trig", q=21)
    # oracle: direct quadrature of the step function against Trg_j
    vals = rec.grid_values()
    for j in (1, 2, 3, 10):
        oracle = sum(integrate.quad(lambda t: trig_value(j, t), (k - 1) / g.p, k / g.p,
                                    epsabs=1e-14)[0] * vals[k - 1] for k in range(1, g.p + 1))
        assert beta[j - 1] == pytest.approx(oracle, abs=1e-12)
    assert np.max(np.abs(beta - theta.values[:21])) <= 0.05
    assert np.sum(beta**2) <= rec.norm_sq() + 1e-8
    funcs = [lambda t, j=j: trig_value(j, t) for j in range(1, 6)]
    bq = dictionary_projection(rec, funcs)
    assert np.allclose(bq, beta[:5], atol=1e-3)
    zero = reconstruct(CoeffSet(np.zeros(g.p)), np.ones(g.p))
    assert np.all(dictionary_projection(zero, "trig") == 0)


def test_csv_exports(tmp_path):
    theta = true_coefficients(signal_s1(), make_grid(1, 7))
    theta.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "j,value,role" and lines[1].endswith("true_projected") and len(lines) == 8
    reconstruct(theta, np.ones(7)).to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "t_l,value"


def test_zero_signal_cells():
    g = make_grid(1, 5)
    assert np.all(signal_cell_integrals(zero_signal(), g) == 0)
