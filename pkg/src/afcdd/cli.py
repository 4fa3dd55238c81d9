"""Command-line entry point.

Exit status: 0 success, 1 unexpected error, 2 configuration (schema) error,
3 operating constraint failed under ``--strict``, 4 a fit did not converge
or could not be run. Errors are written to stderr as one JSON object with a
``category`` field.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy
import sklearn
import yaml

from . import __version__
from .afc import check_constraints, compute_splittings
from .config import ConfigError, RunConfig, SCENARIOS, parse_config
from .curves import DecayCurve
from .fitting import (FitError, FitModel, fit_decay, fit_ou_global, fit_power_law)
from .scenarios import reproduce
from .sequences import build_sequence, free_evolution
from .spinsim import THREADS_ENV, simulate, simulate_decay_fixed_n, simulate_decay_fixed_tau

__all__ = ["main", "run", "RunError"]

EXIT_OK, EXIT_CRASH, EXIT_SCHEMA, EXIT_CONSTRAINT, EXIT_FIT = 0, 1, 2, 3, 4


class RunError(Exception):
    def __init__(self, category: str, message: str, exit_code: int):
        super().__init__(message)
        self.category = category
        self.exit_code = exit_code


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _versions():
    return {"afcdd": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "scikit-learn": sklearn.__version__}


def _constraints(cfg: RunConfig):
    split = compute_splittings(cfg.physics.field.to_field())
    return split, check_constraints(split, cfg.physics.envelope.to_envelope())


def _load_curves(paths, base: Path):
    curves = []
    for p in paths:
        path = Path(p)
        if not path.is_absolute():
            path = base / path
        try:
            curves.append(DecayCurve.from_csv(path))
        except (OSError, ValueError) as exc:
            raise RunError("input", f"cannot read curve {path}: {exc}", EXIT_SCHEMA) from None
    return curves


def _run_fit(cfg: RunConfig, out: Path, base: Path):
    model = FitModel.parse(cfg.fit.model)
    curves = _load_curves(cfg.fit.inputs, base)
    fits = {}
    if model is FitModel.OU_GLOBAL:
        fits["ou_global"] = fit_ou_global(curves)
    elif model is FitModel.POWER_LAW:
        triples = []
        for p, c in zip(cfg.fit.inputs, curves):
            if "n" not in c.meta:
                raise FitError(f"{p} carries no meta 'n' for a power-law fit")
            f = fit_decay(c, FitModel.STRETCHED)
            fits[Path(p).stem] = f
            triples.append((int(c.meta["n"]), f.params["t2"], f.param_errors["t2"]))
        fits["power_law"] = fit_power_law(triples)
    else:
        for p, c in zip(cfg.fit.inputs, curves):
            fits[Path(p).stem] = fit_decay(c, model)
    (out / "fits.json").write_text(
        json.dumps(_jsonable({k: f.to_dict() for k, f in fits.items()}), indent=2,
                   sort_keys=True) + "\n")
    return {"fits": {k: f.to_dict() for k, f in fits.items()}}, [out / "fits.json"], \
        all(f.converged for f in fits.values())


def run(cfg: RunConfig, *, strict: bool = False, threads: int | None = None,
        base_dir: Path | None = None, log=None):
    """Execute ``cfg``; returns ``(summary_dict, exit_code)``.

    Output files go to ``cfg.io.out_dir``; the summary is also written there
    as ``summary.json``.
    """
    start = time.perf_counter()
    log = sys.stderr if log is None else log
    out = Path(cfg.io.out_dir)
    base = Path.cwd() if base_dir is None else base_dir
    split, report = _constraints(cfg)
    for check in report.checks:
        if not check.passed:
            print(json.dumps({"warning": "constraint", "name": check.name, "lhs": check.lhs,
                              "rhs": check.rhs}), file=log)
    if strict and not report.all_passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise RunError("constraint", f"operating constraints failed: {', '.join(failed)}",
                       EXIT_CONSTRAINT)
    out.mkdir(parents=True, exist_ok=True)
    results = {"constraints": report.to_dict(),
               "splittings_hz": {"delta": split.delta, "delta_e": split.delta_e}}
    files = []
    converged = True
    ph = cfg.physics
    sc = cfg.scenario
    if sc == "simulate":
        s = cfg.sequence
        seq = (build_sequence(cfg.kind, s.n_s, cfg.tau_s, cfg.epsilon) if s.n_s > 0
               else free_evolution(cfg.tau_s, cfg.kind))
        r = simulate(seq, cfg.ou, cfg.ensemble_config(), threads)
        se = max(r.std_err, 1.0 / r.n_traj) if math.isfinite(r.std_err) else 1.0 / r.n_traj
        curve = DecayCurve(np.array([seq.t_spin]), np.array([r.eta_spin]), np.array([se]),
                           {"kind": cfg.kind.value, "n": seq.n, "tau_s": cfg.tau_s})
        files.append(out / "simulate.csv")
        curve.to_csv(files[-1])
        results["simulation"] = {"eta_spin": r.eta_spin, "std_err": r.std_err,
                                 "t_spin_s": seq.t_spin, "n": seq.n, "n_traj": r.n_traj}
    elif sc == "sweep-fixed-n":
        curve = simulate_decay_fixed_n(cfg.kind, cfg.sequence.n, cfg.tau_grid_s, cfg.ou,
                                       cfg.ensemble_config(), cfg.epsilon, threads)
        files.append(out / f"sweep_fixed_n{cfg.sequence.n}.csv")
        curve.to_csv(files[-1])
        results["curve"] = {"points": len(curve), "meta": curve.meta}
    elif sc == "sweep-fixed-tau":
        curve = simulate_decay_fixed_tau(cfg.kind, cfg.tau_s, cfg.sequence.n_grid, cfg.ou,
                                         cfg.ensemble_config(), cfg.epsilon, threads)
        files.append(out / "sweep_fixed_tau.csv")
        curve.to_csv(files[-1])
        results["curve"] = {"points": len(curve), "meta": curve.meta}
    elif sc == "fit":
        res, fit_files, converged = _run_fit(cfg, out, base)
        results.update(res)
        files.extend(fit_files)
    elif sc == "reproduce":
        bundle = reproduce(cfg.reproduce.name, cfg.ou, cfg.ensemble_config(), cfg.epsilon,
                           (ph.eta_afc, ph.eta_ctrl), threads)
        files.extend(bundle.write(out))
        fits = bundle.fits_json()
        (out / f"{bundle.name}_fits.json").write_text(
            json.dumps(_jsonable(fits), indent=2, sort_keys=True) + "\n")
        files.append(out / f"{bundle.name}_fits.json")
        results["fits"] = fits
        converged = bundle.all_converged
    # check-config needs nothing beyond the constraint report

    summary = {"config": cfg.to_dict(), "results": results,
               "outputs": [str(p) for p in files], "versions": _versions(),
               "wall_time_s": time.perf_counter() - start, "seed": cfg.ensemble.seed,
               "all_constraints_passed": report.all_passed, "fits_converged": converged}
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2,
                                                 sort_keys=True) + "\n")
    return summary, EXIT_OK if converged else EXIT_FIT


def _build_parser():
    parser = argparse.ArgumentParser(prog="afcdd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"afcdd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--n-traj", type=int, dest="n_traj")
        p.add_argument("--strict", action="store_true",
                       help="fail when an operating constraint is violated")
        p.add_argument("--out-dir", type=Path, dest="out_dir")
        p.add_argument("--threads", type=int,
                       help=f"worker threads (default: ${THREADS_ENV} or 1)")
        if name == "reproduce":
            p.add_argument("name", nargs="?", help="fig4, fig5, fig6a, fig6b or appendixA3")
    return parser


def _config_from_args(args) -> tuple[RunConfig, Path]:
    data = {}
    base = Path.cwd()
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        base = args.config.resolve().parent
    declared = data.get("scenario")
    if declared is not None and declared != args.command:
        raise ConfigError(f"config declares scenario {declared!r} but {args.command!r} was run")
    data = dict(data, scenario=args.command)
    if args.command == "reproduce" and args.name:
        data["reproduce"] = dict(data.get("reproduce") or {}, name=args.name)
    if args.seed is not None or args.n_traj is not None:
        ens = dict(data.get("ensemble") or {})
        if args.seed is not None:
            ens["seed"] = args.seed
        if args.n_traj is not None:
            ens["n_traj"] = args.n_traj
        data["ensemble"] = ens
    if args.out_dir is not None:
        data["io"] = dict(data.get("io") or {}, out_dir=str(args.out_dir))
    return parse_config(data), base


def _fail(category, message, code):
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg, base = _config_from_args(args)
        summary, code = run(cfg, strict=args.strict, threads=args.threads, base_dir=base)
    except ConfigError as exc:
        return _fail("schema", str(exc), EXIT_SCHEMA)
    except RunError as exc:
        return _fail(exc.category, str(exc), exc.exit_code)
    except FitError as exc:
        return _fail("fit", str(exc), EXIT_FIT)
    except Exception as exc:  # noqa: BLE001 - report any crash machine-readably
        return _fail("internal", f"{type(exc).__name__}: {exc}", EXIT_CRASH)
    if code == EXIT_FIT:
        print(json.dumps({"error": "fit_nonconvergence",
                          "message": "one or more fits did not converge; see summary.json"}),
              file=sys.stderr)
    print(Path(cfg.io.out_dir) / "summary.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
