"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 a verify/audit/oracle-check assertion
failed, 64 unknown or missing subcommand.
"""

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from ._validation import ValidationError
from .analytics import (a_check, d_zero, eps_check, gram_bounds, gram_gaussian, h2_constants,
                        psi_matrix, tau_matrix)
from .basis import dirichlet_excess
from .estimators import ReconstructedSignal, fourier_coeffs, proxy_variance, shrink
from .experiments import (ExperimentConfig, condition_audit, figure_data, improvement_experiment,
                          oracle_check, table_experiment, write_figure_csv)
from .grid import get_signal, make_grid
from .noise import NoiseModel, ObservationPath, derive_seed, simulate_noise_batch, simulate_observations
from .selection import select
from .weights import build_family

logger = logging.getLogger("semishrink")

COMMANDS = ("simulate", "estimate", "select", "improve", "table1", "table2", "oracle-check",
            "verify", "audit")
ENV_PREFIX = "SEMISHRINK_"
EXIT_OK, EXIT_INVALID, EXIT_ASSERT, EXIT_USAGE = 0, 1, 2, 64


class AssertionFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _code_version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--scale", choices=("desk", "paper"))
    common.add_argument("--out", type=Path)

    parser = _Parser(prog="semishrink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", parents=[common], help="simulate observation increments")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--signal")
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--binary", action="store_true", help="also write a compact .npz copy")

    for name in ("estimate", "select"):
        p = sub.add_parser(name, parents=[common], help=f"{name} from an observation CSV")
        p.add_argument("--input", type=Path, required=True)
        p.add_argument("--n", type=int, required=True)
        if name == "estimate":
            p.add_argument("--d", type=int, default=0, help="shrinkage dimension (0 = none)")
        else:
            p.add_argument("--rho", type=float)
            p.add_argument("--no-shrink", action="store_true")
            p.add_argument("--sigma", type=float, help="known noise variance")

    p = sub.add_parser("improve", parents=[common], help="shrinkage improvement experiment")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--signal")
    p.add_argument("--replications", type=int)

    for name in ("table1", "table2"):
        sub.add_parser(name, parents=[common], help=f"risk {name}")

    p = sub.add_parser("oracle-check", parents=[common], help="oracle inequality check")
    p.add_argument("--n", type=int)
    p.add_argument("--signal")
    p.add_argument("--max-members", type=int, default=50)

    p = sub.add_parser("verify", parents=[common], help="analytic identities and bounds")
    p.add_argument("--d-max", type=int, default=200)
    p.add_argument("--mc-paths", type=int, default=20000)

    sub.add_parser("audit", parents=[common], help="condition audit")
    return parser


def _env(name, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError as exc:
        raise ValidationError(f"{ENV_PREFIX}{name}={raw!r} is invalid") from exc


def _resolve(args):
    """Config file, then environment, then flags (last wins)."""
    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ValidationError("config must be a JSON object")
    for key, cast in (("seed", int), ("workers", int), ("scale", str), ("out", str)):
        value = _env(key.upper(), cast)
        if value is not None:
            cfg[key] = value
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = str(flag) if key == "out" else flag
    return cfg


def _experiment_config(cfg, **overrides):
    settings = {k: v for k, v in cfg.items()
                if k in ExperimentConfig.__dataclass_fields__ and k != "scale"}
    settings.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.for_scale(cfg.get("scale", "desk"), **settings)


class _Run:
    def __init__(self, command, cfg):
        self.command = command
        self.cfg = cfg
        self.out = Path(cfg.get("out") or f"semishrink-{command}")
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.started = time.time()

    def path(self, name):
        self.files.append(name)
        return self.out / name

    def json(self, name, obj):
        with open(self.path(name), "w", newline="\n") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    def manifest(self):
        inventory = []
        for name in self.files:
            if not (self.out / name).exists():
                continue
            data = (self.out / name).read_bytes()
            inventory.append({"file": name, "bytes": len(data),
                              "sha256": hashlib.sha256(data).hexdigest()})
        doc = {"command": self.command, "config": self.cfg, "code_version": _code_version(),
               "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(self.started)),
               "finished": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
               "outputs": inventory}
        with open(self.out / "manifest.json", "w", newline="\n") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"not JSON serialisable: {type(x)}")


def _pick(flag, cfg, key, default=None):
    return flag if flag is not None else cfg.get(key, default)


def _noise(cfg):
    return NoiseModel.from_dict(cfg.get("noise", NoiseModel().to_dict()))


# ---------------------------------------------------------------- commands

def cmd_simulate(args, run):
    cfg = run.cfg
    n = _pick(args.n, cfg, "n", 2)
    grid = make_grid(n, _pick(args.p, cfg, "p", 5))
    name = _pick(args.signal, cfg, "signal", "s1")
    signal = get_signal(name, **cfg.get("signal_options", {}).get(name, {}))
    seed = derive_seed(cfg.get("seed", 0), args.replication, "table")
    path = simulate_observations(signal, _noise(cfg), grid, seed)
    path.to_csv(run.path("observations.csv"))
    if args.binary:
        path.to_npz(run.path("observations.npz"))
    run.json("simulate.json", {"grid": grid.to_dict(), "signal": signal.to_dict(),
                               "noise": _noise(cfg).to_dict(), "seed": cfg.get("seed", 0),
                               "replication": args.replication,
                               "signal_integration": "composite Simpson, 8 panels per cell"})


def _load(args):
    try:
        return ObservationPath.from_csv(args.input, args.n)
    except OSError as exc:
        raise ValidationError(f"cannot read {args.input}: {exc}") from exc


def cmd_estimate(args, run):
    path = _load(args)
    raw = fourier_coeffs(path)
    raw.to_csv(run.path("coeffs_raw.csv"))
    report = {"grid": path.grid.to_dict()}
    coeffs = raw
    if args.d:
        consts = h2_constants(args.d, path.grid.n, _noise(run.cfg), None)
        coeffs = shrink(raw, consts)
        coeffs.to_csv(run.path("coeffs_shrunk.csv"))
        report.update(constants=consts.to_dict(), degenerate=coeffs.degenerate,
                      over_shrunk=coeffs.over_shrunk)
    if path.grid.p > math.sqrt(path.grid.n):
        report["sigma_hat"] = proxy_variance(path)
    ReconstructedSignal(coeffs).to_csv(run.path("reconstruction.csv"))
    run.json("estimate.json", report)


def cmd_select(args, run):
    path = _load(args)
    grid = path.grid
    raw = fourier_coeffs(path)
    sigma = args.sigma if args.sigma is not None else proxy_variance(path)
    model = _noise(run.cfg)
    family = build_family(grid.n, grid.p, model.bounds.varsigma_star,
                          run.cfg.get("mode", "simulation"))
    res = select(raw, family, sigma, args.rho if args.rho is not None else run.cfg.get("rho"),
                 model.bounds, shrink=not args.no_shrink)
    res.to_json(run.path("selection.json"))
    res.to_csv(run.path("selection_members.csv"), family)
    ReconstructedSignal(res.coeffs_star, res.gamma_star.gamma).to_csv(
        run.path("reconstruction.csv"))
    family.to_csv(run.path("family.csv"))


def cmd_improve(args, run):
    cfg = run.cfg
    out = improvement_experiment(
        signal_name=_pick(args.signal, cfg, "signal", "s1"), n=_pick(args.n, cfg, "n", 100),
        p=_pick(args.p, cfg, "p"), d=_pick(args.d, cfg, "d", 70),
        noise=cfg.get("noise"), replications=_pick(args.replications, cfg, "replications", 1000),
        seed=cfg.get("seed", 20240601), workers=cfg.get("workers", 1))
    run.json("improve.json", out)
    print(f"delta_hat={out['delta_hat']:.6g} se={out['stderr']:.3g} bound={out['bound']:.6g} "
          f"p={out['p']}")


def cmd_table(args, run, mode):
    cfg = _experiment_config(run.cfg)
    report = table_experiment(cfg, mode)
    report.to_csv(run.path(f"{mode}.csv"))
    report.to_json(run.path(f"{mode}.json"))
    for signal_name in cfg.signals:
        for n in cfg.ns:
            write_figure_csv(run.path(f"figure_{signal_name}_n{n}.csv"),
                             figure_data(cfg, signal_name, n))
    for s in report.summaries:
        print(f"{s['signal']} n={s['n']}: R_shrunk={s['risk_shrunk']:.5g} "
              f"R_raw={s['risk_raw']:.5g} ratio={s['ratio']:.4f}")


def cmd_oracle(args, run):
    cfg = _experiment_config(run.cfg)
    n = _pick(args.n, run.cfg, "n", 500)
    out = oracle_check(cfg, _pick(args.signal, run.cfg, "signal", "s1"), n, args.max_members)
    run.json("oracle_check.json", out)
    print(f"R(S*)={out['risk_selected']:.5g} bound="
          f"{out['constant'] * out['min_member_risk'] + out['slack']:.5g} holds={out['holds']}")
    if not out["holds"]:
        raise AssertionFailure("oracle inequality check failed")


def verify_report(d_max=200, mc_paths=20000, seed=0):
    """Analytic checks: Dirichlet bound, Gram bounds, covariance identity vs MC."""
    checks = {}
    excess = [dirichlet_excess(d) for d in range(1, d_max + 1)]
    checks["dirichlet"] = {"max_excess": max(excess), "argmax_d": int(np.argmax(excess)) + 1,
                           "pass": max(excess) <= 5.0}
    gram = {}
    for d in (58, 100, 150):
        grid = make_grid(2, 2 * d + 1)
        tr, lam, rest = gram_bounds(gram_gaussian(d, grid, -1.0))
        gram[str(d)] = {"trace": tr, "lambda_max": lam, "trace_minus_lambda": rest,
                        "pass": tr > d / 2 and lam <= 3.0 and rest >= (d - 6) / 2}
    checks["gram"] = {"cases": gram, "pass": all(v["pass"] for v in gram.values())}
    grid = make_grid(1, 5)
    ones = np.ones(grid.N)
    val = eps_check(ones, grid, -1.0, 1.0)
    checks["eps_identity"] = {"value": val, "closed_form": -(1 - math.exp(-2)) / 2,
                              "pass": abs(val + (1 - math.exp(-2)) / 2) < 1e-10}
    grid = make_grid(2, 21)
    pairs = [(1, 1), (2, 2), (2, 3), (4, 7)]
    mc = {}
    ok = True
    for a in (0.0, -1.0):
        model = NoiseModel(a=a)
        F = psi_matrix(7, grid)
        T = tau_matrix(F, grid, a) * model.sigma_q
        dxi = simulate_noise_batch(model, grid, mc_paths, derive_seed(seed, 0, f"verify{a}"))
        I = dxi @ F
        for i, j in pairs:
            prod = I[:, i - 1] * I[:, j - 1]
            est, se = prod.mean(), prod.std(ddof=1) / math.sqrt(mc_paths)
            passed = abs(est - T[i - 1, j - 1]) <= 4 * se
            ok &= passed
            mc[f"a={a} ({i},{j})"] = {"analytic": T[i - 1, j - 1], "mc": est, "se": se,
                                      "pass": bool(passed)}
    checks["covariance_mc"] = {"cases": mc, "pass": bool(ok)}
    checks["constants"] = {"a_check": a_check(1.0), "d0": d_zero(1.0),
                           "pass": d_zero(1.0) == 58}
    checks["pass"] = all(c["pass"] for c in checks.values())
    return checks


def cmd_verify(args, run):
    rep = verify_report(args.d_max, args.mc_paths, run.cfg.get("seed", 0))
    run.json("verify.json", rep)
    for k, v in rep.items():
        if k != "pass":
            print(f"{k}: {'PASS' if v['pass'] else 'FAIL'}")
    if not rep["pass"]:
        raise AssertionFailure("analytic verification failed")


def cmd_audit(args, run):
    cfg = _experiment_config(run.cfg)
    rep = condition_audit(cfg)
    b = cfg.noise_model().bounds
    consistent = math.isclose(rep["kappa_star"], 2 * b.varsigma_star) and all(
        r["c_star_n"] >= 0 and r["nu"] >= r["unique_members"] for r in rep["per_n"])
    rep["consistent"] = consistent
    run.json("audit.json", rep)
    for r in rep["per_n"]:
        print(f"n={r['n']} p={r['p']} nu={r['nu']} nu*={r['nu_star']:.3f} "
              f"c*_n={r['c_star_n']:.3g} condition_D={r['condition_D']}")
    if not consistent:
        raise AssertionFailure("audit consistency check failed")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    if not argv or argv[0] not in COMMANDS:
        if argv and argv[0] in ("-h", "--help"):
            parser.print_help()
            return EXIT_OK
        parser.print_usage(sys.stderr)
        print(f"semishrink: unknown or missing subcommand; choose from {', '.join(COMMANDS)}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
        run = _Run(args.command, _resolve(args))
        handler = {"simulate": cmd_simulate, "estimate": cmd_estimate, "select": cmd_select,
                   "improve": cmd_improve, "oracle-check": cmd_oracle, "verify": cmd_verify,
                   "audit": cmd_audit}.get(args.command)
        try:
            if handler is None:
                cmd_table(args, run, args.command)
            else:
                handler(args, run)
        finally:
            run.manifest()
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"semishrink: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AssertionFailure as exc:
        print(f"semishrink: assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
