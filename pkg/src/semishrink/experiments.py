"""Monte-Carlo harness: empirical risks, shrinkage-improvement runs, risk tables,
oracle-inequality checks and the condition audit.

Every replication ``l`` draws its noise from ``derive_seed(master_seed, l, stream)``
and its losses are stored at position ``l``; averages are taken over the ordered
array, so results do not depend on the number of workers.
"""

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from ._validation import ValidationError, check_int
from .analytics import d_zero, default_r_n, h2_constants, p_zero
from .basis import PHI_STAR, synthesize
from .estimators import (fourier_coeffs_from_increments, proxy_variance_from_coeffs,
                         shrink_values, true_coefficients)
from .grid import get_signal, make_grid
from .noise import NoiseModel, derive_seed, signal_cell_integrals, simulate_noise_increments
from .selection import check_rho, default_rho, member_thresholds, select
from .weights import build_family

logger = logging.getLogger(__name__)

ESTIMATORS = ("shrunk-selected", "raw-selected", "fixed-raw-shrunk")
SCALES = {
    "desk": {"p": 1001, "replications": 300, "ns": [100, 200, 500]},
    "paper": {"p": 10001, "replications": 1000, "ns": [100, 200, 500, 1000]},
}


@dataclass
class ExperimentConfig:
    signals: list = field(default_factory=lambda: ["s1", "s2"])
    ns: list = field(default_factory=lambda: [100, 200, 500])
    p: int = 1001
    replications: int = 300
    seed: int = 20240601
    noise: dict = field(default_factory=lambda: NoiseModel().to_dict())
    mode: str = "simulation"
    rho: float = None
    workers: int = 1
    signal_options: dict = field(default_factory=dict)
    scale: str = "desk"

    def __post_init__(self):
        check_int(self.p, "p", minimum=3)
        check_int(self.replications, "replications", minimum=1)
        check_int(self.seed, "seed", minimum=0)
        check_int(self.workers, "workers", minimum=1)
        if not self.ns:
            raise ValidationError("ns must not be empty")
        for n in self.ns:
            check_int(n, "n", minimum=3)
        for s in self.signals:
            if s not in ("s1", "s2", "custom-coeffs"):
                raise ValidationError(f"unknown signal {s!r}")
        if self.rho is not None:
            check_rho(self.rho)
        if self.scale not in SCALES:
            raise ValidationError(f"scale must be one of {sorted(SCALES)}")
        self.noise_model()

    def noise_model(self):
        return NoiseModel.from_dict(self.noise)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def for_scale(cls, scale="desk", **overrides):
        if scale not in SCALES:
            raise ValidationError(f"scale must be one of {sorted(SCALES)}")
        if scale == "paper":
            logger.warning("paper scale: about 1e9 path steps per table, expect hours")
        return cls(scale=scale, **{**SCALES[scale], **overrides})


@dataclass
class RiskReport:
    rows: list
    summaries: list
    config: dict

    def to_dict(self):
        return {"rows": self.rows, "summaries": self.summaries, "config": self.config}

    def to_json(self, path):
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["signal", "n", "estimator", "risk", "stderr", "ratio"])
            for r in self.rows:
                w.writerow([r["signal"], r["n"], r["estimator"], repr(r["risk"]),
                            repr(r["stderr"]), repr(r["ratio"])])


def mean_se(x):
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def ratio_se(num, den):
    """Delta-method standard error of ``mean(num) / mean(den)`` for paired samples."""
    num, den = np.asarray(num, float), np.asarray(den, float)
    a, b = num.mean(), den.mean()
    if b == 0.0 or num.size < 2:
        return float("nan")
    r = a / b
    resid = num - r * den
    return float(resid.std(ddof=1) / (math.sqrt(num.size) * abs(b)))


# ---------------------------------------------------------------- shared context

class _Context:
    """Everything a replication needs for one ``(signal, n)`` cell of a config."""

    def __init__(self, cfg_json, signal_name, n):
        cfg = ExperimentConfig.from_dict(json.loads(cfg_json))
        self.cfg = cfg
        self.signal = get_signal(signal_name, **cfg.signal_options.get(signal_name, {}))
        self.grid = make_grid(n, cfg.p)
        self.model = cfg.noise_model()
        self.cells = signal_cell_integrals(self.signal, self.grid)
        self.theta = true_coefficients(self.signal, self.grid).values
        self.family = build_family(n, self.grid.p, self.model.bounds.varsigma_star, cfg.mode)
        self.rho = default_rho(n) if cfg.rho is None else cfg.rho
        self.c_n = member_thresholds(self.family, n, self.model.bounds)

    def path(self, rep, stream):
        noise = simulate_noise_increments(self.model, self.grid,
                                          derive_seed(self.cfg.seed, rep, stream))
        return np.tile(self.cells, self.grid.n) + noise

    def raw(self, rep, stream):
        theta_hat = fourier_coeffs_from_increments(self.path(rep, stream), self.grid)
        return theta_hat, float(proxy_variance_from_coeffs(theta_hat, self.grid.n))


@lru_cache(maxsize=8)
def _context(cfg_json, signal_name, n):
    return _Context(cfg_json, signal_name, n)


def _loss(weighted, theta):
    # grid Parseval: (1/p) sum_j (S*(t_j) - S(t_j))^2 = |weighted - theta|^2
    diff = weighted - theta
    return float(diff @ diff)


def _fixed_shrunk(ctx, theta_hat, i):
    d = int(ctx.family.d_gammas[i])
    star, _, over = shrink_values(theta_hat, d, float(ctx.c_n[i]))
    return ctx.family.gamma(i) * star, over


def _table_rep(ctx, rep):
    theta_hat, sigma_hat = ctx.raw(rep, "table")
    bounds = ctx.model.bounds
    sel = select(theta_hat, ctx.family, sigma_hat, ctx.rho, bounds, shrink=True)
    ref = select(theta_hat, ctx.family, sigma_hat, ctx.rho, bounds, shrink=False)
    fixed, over = _fixed_shrunk(ctx, theta_hat, ref.index)
    return [_loss(sel.estimate, ctx.theta), _loss(ref.estimate, ctx.theta),
            _loss(fixed, ctx.theta), sigma_hat, float(sel.coeffs_star.c_n_used > 0),
            float(ctx.c_n[ref.index] > 0), float(sel.coeffs_star.over_shrunk or over),
            float(sel.coeffs_star.degenerate)]


def _oracle_rep(ctx, rep, index):
    theta_hat, sigma_hat = ctx.raw(rep, "oracle")
    sel = select(theta_hat, ctx.family, sigma_hat, ctx.rho, ctx.model.bounds, shrink=True)
    out = [_loss(sel.estimate, ctx.theta), sigma_hat]
    for i in index:
        out.append(_loss(_fixed_shrunk(ctx, theta_hat, i)[0], ctx.theta))
    return out


def _run_chunk(kind, cfg_json, signal_name, n, reps, extra):
    ctx = _context(cfg_json, signal_name, n)
    if kind == "table":
        return [_table_rep(ctx, r) for r in reps]
    if kind == "oracle":
        return [_oracle_rep(ctx, r, extra) for r in reps]
    raise ValueError(kind)


def _chunks(total, workers):
    size = max(1, math.ceil(total / (4 * workers)))
    return [range(s, min(s + size, total)) for s in range(0, total, size)]


def _map_reps(kind, cfg, signal_name, n, extra=None):
    """Per-replication result rows in replication order."""
    cfg_json = json.dumps(cfg.to_dict(), sort_keys=True)
    reps = cfg.replications
    if cfg.workers == 1:
        return np.asarray(_run_chunk(kind, cfg_json, signal_name, n, range(reps), extra))
    chunks = _chunks(reps, cfg.workers)
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = pool.map(_run_chunk, [kind] * len(chunks), [cfg_json] * len(chunks),
                         [signal_name] * len(chunks), [n] * len(chunks), chunks,
                         [extra] * len(chunks))
        return np.asarray([row for part in parts for row in part])


# ---------------------------------------------------------------- risk tables

def table_experiment(cfg, mode="table1"):
    """Risk table: ``table1`` compares the shrunk and unshrunk selections; ``table2``
    compares the shrunk and unshrunk estimates at the unshrunk selection."""
    if mode not in ("table1", "table2"):
        raise ValidationError("mode must be 'table1' or 'table2'")
    rows, summaries = [], []
    for signal_name in cfg.signals:
        for n in cfg.ns:
            data = _map_reps("table", cfg, signal_name, n)
            shrunk = data[:, 0] if mode == "table1" else data[:, 2]
            raw = data[:, 1]
            r_s, se_s = mean_se(shrunk)
            r_r, se_r = mean_se(raw)
            diff, diff_se = mean_se(raw - shrunk)
            ratio = r_r / r_s if r_s > 0 else float("nan")
            names = ("shrunk-selected", "raw-selected") if mode == "table1" else \
                ("fixed-raw-shrunk", "fixed-raw")
            rows.append({"signal": signal_name, "n": n, "estimator": names[0],
                         "risk": r_s, "stderr": se_s, "ratio": 1.0})
            rows.append({"signal": signal_name, "n": n, "estimator": names[1],
                         "risk": r_r, "stderr": se_r, "ratio": ratio})
            summaries.append({
                "signal": signal_name, "n": n, "mode": mode, "p": make_grid(n, cfg.p).p,
                "replications": int(data.shape[0]),
                "risk_shrunk": r_s, "risk_raw": r_r, "ratio": ratio,
                "ratio_se": ratio_se(raw, shrunk),
                "paired_diff": diff, "paired_diff_se": diff_se,
                "mean_sigma_hat": float(data[:, 3].mean()),
                "shrink_active_fraction": float(data[:, 4 if mode == "table1" else 5].mean()),
                "over_shrunk": int(data[:, 6].sum()), "degenerate": int(data[:, 7].sum()),
            })
    return RiskReport(rows=rows, summaries=summaries, config=cfg.to_dict())


def empirical_risk(cfg, signal_name, n, estimator="shrunk-selected"):
    """``(risk, stderr)`` of one estimator over ``cfg.replications`` replications."""
    if estimator not in ESTIMATORS:
        raise ValidationError(f"estimator must be one of {ESTIMATORS}")
    data = _map_reps("table", cfg, signal_name, n)
    return mean_se(data[:, ESTIMATORS.index(estimator)])


def fixed_gamma_risk(signal, grid, model, gamma, replications, seed, shrink=True, d=None,
                     r_n=None):
    """Risk ``(risk, stderr)`` of a fixed weight vector, with or without shrinkage."""
    from .selector import WeightedLeastSquares

    theta = true_coefficients(signal, grid).values
    cells = signal_cell_integrals(signal, grid)
    gamma = np.ones(grid.p) if gamma is None else np.asarray(gamma, dtype=float)
    est = WeightedLeastSquares(n_periods=grid.n, gamma=gamma, shrink=shrink, d=d, r_n=r_n,
                               a_max=model.bounds.a_max, rho_lower=model.bounds.rho_lower,
                               varsigma_star=model.bounds.varsigma_star)
    losses = []
    for rep in range(replications):
        dy = np.tile(cells, grid.n) + simulate_noise_increments(
            model, grid, derive_seed(seed, rep, "fixed"))
        est.fit(dy)
        losses.append(_loss(est.gamma_ * est.coef_, theta))
    return mean_se(losses)


# ---------------------------------------------------------------- improvement

def _improvement_chunk(args):
    signal_name, n, p, d, noise, seed, reps, c_n = args
    signal = get_signal(signal_name)
    grid = make_grid(n, p)
    model = NoiseModel.from_dict(noise)
    cells = signal_cell_integrals(signal, grid)
    theta = true_coefficients(signal, grid).values[:d]
    out = []
    for rep in reps:
        dy = np.tile(cells, n) + simulate_noise_increments(model, grid,
                                                           derive_seed(seed, rep, "improve"))
        theta_hat = fourier_coeffs_from_increments(dy, grid)[:d]
        star, _, _ = shrink_values(theta_hat, d, c_n)
        out.append(float(np.sum((star - theta) ** 2) - np.sum((theta_hat - theta) ** 2)))
    return out


def improvement_experiment(signal_name="s1", n=100, p=None, d=70, noise=None, replications=1000,
                           seed=20240601, workers=1, r_n=None):
    """Monte-Carlo estimate of ``E|theta* - theta|_d^2 - E|theta_hat - theta|_d^2``.

    ``p=None`` picks the smallest odd ``p`` at or above the frequency where the
    analytic bound turns negative. Returns a dict with the estimate, its
    standard error and the bound.
    """
    model = NoiseModel.from_dict(noise) if isinstance(noise, dict) else (noise or NoiseModel())
    signal = get_signal(signal_name)
    consts = h2_constants(d, n, model.bounds, r_n)
    L = signal.lipschitz_L
    p0 = p_zero(consts, L) if consts.c_n > 0 else float("nan")
    if p is None:
        if not consts.c_n > 0:
            raise ValidationError("shrinkage is inactive at this d; give p explicitly")
        p = int(math.ceil(p0))
        p += 1 - p % 2
    grid = make_grid(n, p)
    if d > grid.p:
        raise ValidationError(f"d={d} exceeds p={grid.p}")
    reps = list(range(replications))
    args = (signal_name, n, grid.p, d, model.to_dict(), seed)
    if consts.c_n == 0.0:
        deltas = np.zeros(replications)
    elif workers == 1:
        deltas = np.asarray(_improvement_chunk(args + (reps, consts.c_n)))
    else:
        chunks = _chunks(replications, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_improvement_chunk, [args + (c, consts.c_n) for c in chunks])
            deltas = np.asarray([x for part in parts for x in part])
    delta, se = mean_se(deltas)
    bound = -consts.c_n**2 + 2.0 * math.sqrt(d) * PHI_STAR * L * consts.c_n / grid.p
    return {"signal": signal_name, "n": n, "p": grid.p, "d": d, "replications": replications,
            "delta_hat": delta, "stderr": se, "bound": float(bound), "p_zero": float(p0),
            "lipschitz_L": float(L), "constants": consts.to_dict(), "seed": seed}


# ---------------------------------------------------------------- oracle check

def oracle_check(cfg, signal_name="s1", n=500, max_members=50):
    """Empirical check of the oracle inequality with a ``1/(rho n)`` remainder."""
    ctx = _context(json.dumps(cfg.to_dict(), sort_keys=True), signal_name, n)
    step = max(1, math.ceil(len(ctx.family) / max_members))
    index = tuple(range(0, len(ctx.family), step))
    data = _map_reps("oracle", cfg, signal_name, n, index)
    sel = data[:, 0]
    sigma_hat = data[:, 1]
    members = data[:, 2:]
    risks = members.mean(axis=0)
    best = int(np.argmin(risks))
    rho = ctx.rho
    const = (1 + 5 * rho) / (1 - rho)
    sigma_err = float(np.mean(np.abs(sigma_hat - ctx.model.sigma_q)))
    remainder = (1.0 + ctx.family.nu_star * sigma_err) / (rho * n)
    _, joint_se = mean_se(sel - const * members[:, best])
    r_sel = float(sel.mean())
    min_risk = float(risks[best])
    slack = remainder + 3.0 * joint_se
    return {"signal": signal_name, "n": n, "p": ctx.grid.p, "replications": int(sel.size),
            "rho": rho, "constant": const, "risk_selected": r_sel,
            "min_member_risk": min_risk, "best_member": int(index[best]),
            "members_checked": len(index), "ratio": r_sel / min_risk if min_risk > 0 else None,
            "nu_star": ctx.family.nu_star, "mean_abs_sigma_error": sigma_err,
            "remainder": remainder, "joint_se": joint_se, "slack": slack,
            "holds": bool(r_sel <= const * min_risk + slack)}


# ---------------------------------------------------------------- audit / figures

def condition_audit(cfg):
    model = cfg.noise_model()
    b = model.bounds
    d0 = d_zero(b.a_max)
    out = {"kappa_star": b.kappa_star, "d0": d0, "sigma_q": model.sigma_q, "per_n": []}
    for n in cfg.ns:
        grid = make_grid(n, cfg.p)
        fam = build_family(n, grid.p, b.varsigma_star, cfg.mode)
        c_n = member_thresholds(fam, n, b)
        gated = int(np.count_nonzero(fam.d_gammas >= max(7, d0)))
        out["per_n"].append({
            "n": n, "p": grid.p, "nu": fam.nu, "unique_members": len(fam),
            "nu_star": fam.nu_star, "max_d_gamma": int(fam.d_gammas.max()),
            "members_clearing_gate": gated, "c_star_n": float(n * np.max(c_n**2)),
            "p_over_n_5_6": grid.p / n ** (5 / 6), "p_le_n": grid.p <= n,
            "condition_D": bool(grid.p <= n and grid.p / n ** (5 / 6) > 1),
            "sqrt_n_lt_p": grid.p > math.sqrt(n), "r_n_default": default_r_n(n),
            "rho": default_rho(n) if cfg.rho is None else cfg.rho,
        })
    return out


def figure_data(cfg, signal_name, n, rep=0):
    """Rows ``(t, S(t), Shat(t), Sstar(t))`` on one period for a single replication."""
    ctx = _context(json.dumps(cfg.to_dict(), sort_keys=True), signal_name, n)
    theta_hat, sigma_hat = ctx.raw(rep, "table")
    b = ctx.model.bounds
    sel = select(theta_hat, ctx.family, sigma_hat, ctx.rho, b, shrink=True)
    ref = select(theta_hat, ctx.family, sigma_hat, ctx.rho, b, shrink=False)
    t = ctx.grid.period_times()
    return np.column_stack([t, ctx.signal(t), synthesize(ref.estimate), synthesize(sel.estimate)])


def write_figure_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "S", "Shat", "Sstar"])
        for r in rows:
            w.writerow([repr(float(x)) for x in r])


def default_workers():
    return max(1, min(os.cpu_count() or 1, 8))
