"""Acceptance criteria 1-11. Each test records one PASS/FAIL line, printed in the
terminal summary, and then asserts."""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from semishrink import NoiseModel, make_grid, signal_s1, simulate_observations
from semishrink.analytics import gram_bounds, gram_gaussian, psi_matrix, tau_matrix
from semishrink.basis import dirichlet_excess, grid_gram
from semishrink.estimators import fourier_coeffs_from_increments, proxy_variance_from_coeffs
from semishrink.experiments import (ExperimentConfig, default_workers, improvement_experiment,
                                    oracle_check, table_experiment)
from semishrink.noise import derive_seed, simulate_noise_batch


def _record(k, ok, detail):
    ACCEPTANCE_LINES.append(f"CRITERION {k:2d}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def _var_se(x):
    c = x - x.mean()
    v = c.var(ddof=1)
    return v, math.sqrt(max(np.mean(c**4) - v**2, 0.0) / x.size)


def test_c01_basis_orthonormal():
    start = time.time()
    worst = max(np.max(np.abs(grid_gram(p) - np.eye(p))) for p in (3, 5, 21, 101, 1001))
    secs = time.time() - start
    _record(1, worst < 1e-10 and secs < 10, f"max deviation {worst:.2e}, {secs:.1f}s")


def test_c02_dirichlet_bound():
    start = time.time()
    excess = [dirichlet_excess(d) for d in range(1, 201)]
    secs = time.time() - start
    worst = max(excess)
    _record(2, worst <= 5.0 and secs < 60,
            f"max excess {worst:.4f} at d={int(np.argmax(excess)) + 1}, {secs:.1f}s")


def test_c03_noise_variance():
    start = time.time()
    model = NoiseModel(a=-1.0)
    grid = make_grid(1, 21)
    xi1 = simulate_noise_batch(model, grid, 100_000, derive_seed(31)).sum(axis=1)
    v, se = _var_se(xi1)
    target = 0.5 * (1 - math.exp(-2)) / 2
    secs = time.time() - start
    _record(3, abs(v - target) <= 4 * se and secs < 60,
            f"var {v:.5f} vs {target:.5f} (SE {se:.1e}), {secs:.1f}s")


def test_c04_covariance_oracle():
    start = time.time()
    grid = make_grid(2, 21)
    F = psi_matrix(7, grid)
    worst, ok = 0.0, True
    for a in (0.0, -1.0):
        model = NoiseModel(a=a)
        T = tau_matrix(F, grid, a) * model.sigma_q
        I = simulate_noise_batch(model, grid, 100_000, derive_seed(41, 0, f"a{a}")) @ F
        for i, j in ((1, 1), (2, 2), (2, 3), (4, 7)):
            prod = I[:, i - 1] * I[:, j - 1]
            z = abs(prod.mean() - T[i - 1, j - 1]) / (prod.std(ddof=1) / math.sqrt(prod.size))
            worst = max(worst, z)
            ok &= z <= 4
    secs = time.time() - start
    _record(4, ok and secs < 120, f"max |z| {worst:.2f} over 8 cases, {secs:.1f}s")


def test_c05_gram_bounds():
    start = time.time()
    parts, ok = [], True
    for d in (58, 100, 150):
        tr, lam, _ = gram_bounds(gram_gaussian(d, make_grid(2, 2 * d + 1), -1.0))
        ok &= tr > d / 2 and lam <= 3
        parts.append(f"d={d}: tr {tr:.2f} lam {lam:.3f}")
    secs = time.time() - start
    _record(5, ok and secs < 60, "; ".join(parts) + f", {secs:.1f}s")


def test_c06_shrinkage_improvement():
    start = time.time()
    out = improvement_experiment("s1", n=100, d=70, replications=1000,
                                 workers=default_workers())
    secs = time.time() - start
    delta, se, bound = out["delta_hat"], out["stderr"], out["bound"]
    ok = (out["constants"]["c_n"] > 0 and out["p"] >= out["p_zero"]
          and delta <= bound + 3 * se and delta + 3 * se < 0 and secs < 600)
    _record(6, ok, f"p={out['p']} delta {delta:.5f} (SE {se:.1e}) bound {bound:.2e}, "
                   f"{secs:.1f}s")


def test_c07_fixed_gamma_dominance():
    start = time.time()
    cfg = ExperimentConfig.for_scale("desk", workers=default_workers())
    report = table_experiment(cfg, "table2")
    secs = time.time() - start
    dominance = all(s["paired_diff"] >= -3 * s["paired_diff_se"]
                    if s["paired_diff_se"] > 0 else s["paired_diff"] >= 0
                    for s in report.summaries)
    big = [s for s in report.summaries if s["n"] >= 200]
    ratio_ok = all(s["ratio"] >= 1.1 for s in big)
    detail = ", ".join(f"{s['signal']} n={s['n']} ratio {s['ratio']:.3f} "
                       f"active {s['shrink_active_fraction']:.2f}" for s in report.summaries)
    _record(7, dominance and ratio_ok and secs < 1800,
            f"dominance {'ok' if dominance else 'violated'}; {detail}; {secs:.0f}s")


@pytest.mark.paper_scale
def test_c08_table_reproduction():
    cfg = ExperimentConfig.for_scale("paper", signals=["s1"], ns=[1000],
                                     workers=default_workers())
    s = table_experiment(cfg, "table1").summaries[0]
    ok = 0.003 <= s["risk_shrunk"] <= 0.008 and 2.5 <= s["ratio"] <= 4.5
    _record(8, ok, f"R(S*) {s['risk_shrunk']:.5f} ratio {s['ratio']:.3f}")


def test_c09_oracle_inequality():
    start = time.time()
    cfg = ExperimentConfig(signals=["s1"], ns=[500], p=1001, replications=300,
                           workers=default_workers())
    out = oracle_check(cfg, "s1", 500)
    secs = time.time() - start
    _record(9, out["holds"] and secs < 1800,
            f"R(S*) {out['risk_selected']:.5f} <= {out['constant']:.4f} x "
            f"{out['min_member_risk']:.5f} + slack {out['slack']:.4f}, {secs:.1f}s")


def test_c10_proxy_variance_consistency():
    start = time.time()
    model = NoiseModel()
    errors = []
    for n in (100, 400, 1600):
        grid = make_grid(n, n - 1 if n % 2 == 0 else n)
        err = []
        for rep in range(100):
            path = simulate_observations(signal_s1(), model, grid, derive_seed(101, rep, "sigma"))
            theta_hat = fourier_coeffs_from_increments(path.increments, grid)
            err.append(abs(proxy_variance_from_coeffs(theta_hat, n) - model.sigma_q))
        errors.append(float(np.mean(err)))
    secs = time.time() - start
    ok = errors[0] > errors[1] > errors[2] and secs < 900
    _record(10, ok, "mean |sigma_hat - sigma_Q| " + " > ".join(f"{e:.4f}" for e in errors)
            + f", {secs:.1f}s")


def test_c11_determinism(tmp_path):
    base = dict(signals=["s1", "s2"], ns=[100], p=1001, replications=20, seed=11)
    outputs = []
    for i, workers in enumerate((1, 1, 2, 3)):
        path = tmp_path / f"run{i}.csv"
        table_experiment(ExperimentConfig(**base, workers=workers), "table1").to_csv(path)
        outputs.append(path.read_bytes())
    ok = all(o == outputs[0] for o in outputs)
    _record(11, ok, "table1 CSV identical across reruns and 1/2/3 workers")
