"""Command-line interface.

Settings resolve as defaults < ``--config`` JSON file < explicit flags. Every
command writes a ``manifest.json`` next to its outputs; ``decdens replay
MANIFEST --out DIR`` reruns it and reproduces the outputs byte for byte.

Exit codes: 2 usage error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .base_measures import QuadratureError
from .core import BaseMeasureSpec, DataError, EvalGrid, read_data
from .estimators import estimate_all_zero
from .harness import (
    ReplicateError,
    StudyConfig,
    column_csv,
    fmt,
    run_comparison,
    run_data_analysis,
    run_marginal_zero_study,
    run_rate_study,
    summary_csv,
)
from .sampler import SamplerConfig

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


SAMPLER_DEFAULTS = {
    "base": "A", "alpha": 1.0, "iters": 50000, "burn": 25000, "thin": 1, "seed": 0, "mh_step": 0.5,
    "target_accept": 0.3, "abar": 1.0, "tau": 0.5, "lam": 2.0, "beta": 1.0,
}
COMMAND_DEFAULTS = {
    "fit": {"level": 0.95, "grid_points": 200, "grid_max": None, "cutoff": None},
    "zero": {"no_bayes": False, "alpha0": None, "penalty": None, "iters": 30000, "burn": 15000},
    "compare": {"dist": "exp", "n": "50,200", "reps": 50, "estimators": "P,S,A,H", "iters": 5000,
                "burn": 2500, "threads": 1, "master_seed": 20240101, "alpha0": None},
    "rate": {"dist": "exp", "n": "250,500,1000,2000,4000", "reps": 20, "bases": "A,B", "iters": 2500,
             "burn": 1250, "warmup": 20000, "target_accept": 0.2, "threads": 1, "master_seed": 20240101},
    "marginal-zero": {"dist": "exp", "n": "50,500", "iters": 50000, "burn": 25000, "master_seed": 20240101},
}
FULL_SCALE = {
    "compare": {"n": "50,200,10000", "reps": 50, "iters": 30000, "burn": 15000},
    "rate": {"n": "1000,2000,5000,10000,15000,20000", "reps": 100, "iters": 2500, "burn": 1250,
             "warmup": 20000},
    "marginal-zero": {"n": "50,500,5000", "iters": 50000, "burn": 25000},
}


def _sampler_flags(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    g = p.add_argument_group("sampler")
    g.add_argument("--base", choices=list("ABCD"), default=S, help="base measure variant")
    g.add_argument("--alpha", type=float, default=S, help="DP concentration")
    g.add_argument("--iters", type=int, default=S, help="Gibbs sweeps")
    g.add_argument("--burn", type=int, default=S, help="burn-in sweeps")
    g.add_argument("--thin", type=int, default=S)
    g.add_argument("--seed", type=int, default=S)
    g.add_argument("--mh-step", type=float, default=S, help="initial random-walk scale (A/B)")
    g.add_argument("--target-accept", type=float, default=S)
    g.add_argument("--abar", type=float, default=S, help="Pareto shape (C/D)")
    g.add_argument("--tau", type=float, default=S, help="Pareto threshold (C)")
    g.add_argument("--lam", type=float, default=S, help="Gamma shape of tau (D)")
    g.add_argument("--beta", type=float, default=S, help="Gamma rate of tau (D)")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON file of settings (flags override it)")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="decdens", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"decdens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="posterior mean and credible bands for f and H0")
    fit.add_argument("data")
    _common(fit)
    _sampler_flags(fit)
    fit.add_argument("--level", type=float, default=S)
    fit.add_argument("--grid-points", type=int, default=S)
    fit.add_argument("--grid-max", type=float, default=S)
    fit.add_argument("--cutoff", type=float, default=S, help="drop observations above this value")

    zero = sub.add_parser("zero", help="estimators of f(0)")
    zero.add_argument("data")
    _common(zero)
    _sampler_flags(zero)
    zero.add_argument("--no-bayes", action="store_true", default=S)
    zero.add_argument("--alpha0", type=float, default=S, help="pilot penalty")
    zero.add_argument("--penalty", type=float, default=S, help="force the penalty instead of the data-driven rule")

    study = sub.add_parser("study", help="simulation studies")
    study.add_argument("kind", choices=["compare", "rate", "marginal-zero"])
    _common(study)
    _sampler_flags(study)
    study.add_argument("--dist", default=S, help="exp | half-normal | file:PATH")
    study.add_argument("--n", default=S, help="comma-separated sample sizes")
    study.add_argument("--reps", type=int, default=S)
    study.add_argument("--estimators", default=S, help="subset of P,S,A,H,B")
    study.add_argument("--bases", default=S, help="base variants for the rate study")
    study.add_argument("--warmup", type=int, default=S, help="warm-up sweeps per n (rate study)")
    study.add_argument("--threads", type=int, default=S, help="worker processes (0 = all cores)")
    study.add_argument("--master-seed", type=int, default=S)
    study.add_argument("--alpha0", type=float, default=S)
    study.add_argument("--full-scale", action="store_true", default=False)

    replay = sub.add_parser("replay", help="rerun a command from its manifest")
    replay.add_argument("manifest")
    replay.add_argument("--out", required=True)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional config file and explicit flags."""
    key = args.kind if args.command == "study" else args.command
    settings = dict(SAMPLER_DEFAULTS)
    settings.update(COMMAND_DEFAULTS[key])
    if args.command == "study" and args.full_scale:
        settings.update(FULL_SCALE[key])
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot load config {args.config}: {exc}") from None
        unknown = set(cfg) - set(settings)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        settings.update(cfg)
    skip = {"command", "kind", "out", "config", "data", "full_scale", "manifest"}
    settings.update({k: v for k, v in vars(args).items() if k not in skip})
    return settings


def _ints(s) -> tuple:
    if isinstance(s, (list, tuple)):
        return tuple(int(v) for v in s)
    try:
        return tuple(int(v) for v in str(s).split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {s!r}") from None


def sampler_config(s: dict) -> SamplerConfig:
    base = BaseMeasureSpec(s["base"], alpha_bar=s["abar"], tau=s["tau"], lam=s["lam"], beta=s["beta"])
    return SamplerConfig(alpha=s["alpha"], base=base, iterations=s["iters"], burn_in=s["burn"], seed=s["seed"],
                         mh_step=s["mh_step"], thin=s["thin"], target_accept=s["target_accept"])


def _run_fit(data_path, s):
    grid = None if s["grid_max"] is None else EvalGrid.linspace(s["grid_max"], s["grid_points"])
    summary, chain, data = run_data_analysis(data_path, sampler_config(s), cutoff=s["cutoff"], grid=grid,
                                             level=s["level"], grid_points=s["grid_points"])
    k = chain.n_clusters
    info = {
        "n": data.n,
        "draws": len(chain),
        "acceptance_rate": chain.acceptance_rate,
        "final_mh_step": chain.mh_step,
        "clusters": {"mean": float(k.mean()), "min": int(k.min()), "max": int(k.max()),
                     "median": float(np.median(k))},
    }
    if chain.taus is not None:
        info["tau_mean"] = float(chain.taus.mean())
    files = {"f_summary.csv": summary_csv(summary, "f"), "H0_summary.csv": summary_csv(summary, "H0")}
    return files, info


def _run_zero(data_path, s):
    data = read_data(data_path)
    bayes = None if s["no_bayes"] else sampler_config(s)
    est = estimate_all_zero(data, bayes, alpha0=s["alpha0"], penalty=s["penalty"])
    rows = ["estimator,value"] + [f"{k},{fmt(v)}" for k, v in est.as_dict().items()]
    tuning = {k: (None if v is None or (isinstance(v, float) and np.isnan(v)) else v) for k, v in est.tuning.items()}
    files = {"zero_estimates.csv": "\n".join(rows) + "\n",
             "tuning.json": json.dumps(tuning, indent=2, sort_keys=True) + "\n"}
    table = "\n".join(f"  f^{k:<2} {v:.6f}" for k, v in est.as_dict().items())
    table += "\n" + "\n".join(f"  {k:<16} {'nan' if v is None else f'{v:.6g}'}" for k, v in tuning.items())
    return files, {"n": data.n}, table


def _study_config(s, kind) -> StudyConfig:
    sc = sampler_config(s)
    return StudyConfig(distribution=s["dist"], sample_sizes=_ints(s["n"]), replicates=s.get("reps", 1),
                       estimators=tuple(str(s.get("estimators", "B")).replace(" ", "").split(",")),
                       sampler=sc, master_seed=s["master_seed"], warmup_iterations=s.get("warmup", 20000),
                       alpha0=s.get("alpha0"))


def _run_study(kind, s):
    cfg = _study_config(s, kind)
    if kind == "compare":
        table = run_comparison(cfg, threads=s["threads"])
        return {"comparison.csv": table.to_csv(), "comparison.txt": table.to_text()}, {}, table.to_text()
    if kind == "rate":
        bases = tuple(b.strip().upper() for b in str(s["bases"]).split(",") if b.strip())
        if not bases or set(bases) - set("AB"):
            raise UsageError("--bases must be a subset of A,B")
        res = run_rate_study(cfg, bases, threads=s["threads"])
        text = res.to_csv() + res.slopes_json()
        return {"rate.csv": res.to_csv(), "slopes.json": res.slopes_json()}, {}, text
    res = run_marginal_zero_study(cfg)
    files = {"marginal_zero.csv": res.summary_csv()}
    for n, v in res.draws.items():
        files[f"zero_draws_n{n}.csv"] = column_csv(v, "f0")
    return files, {}, res.summary_csv()


def write_outputs(out: Path, files: dict, manifest: dict) -> None:
    """Write every file via temp-and-rename, manifest last with output hashes."""
    out.mkdir(parents=True, exist_ok=True)
    hashes = {}
    for name, text in sorted(files.items()):
        data = text.encode("utf-8")
        hashes[name] = hashlib.sha256(data).hexdigest()
        tmp = out / f".{name}.tmp"
        tmp.write_bytes(data)
        os.replace(tmp, out / name)
    manifest = dict(manifest, outputs=hashes)
    tmp = out / ".manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, out / "manifest.json")


def execute(command: str, kind, data_path, settings: dict, out: Path) -> str:
    if command == "fit":
        files, info = _run_fit(data_path, settings)
        text = ""
    elif command == "zero":
        files, info, text = _run_zero(data_path, settings)
    else:
        files, info, text = _run_study(kind, settings)
    manifest = {"tool": "decdens", "version": __version__, "command": command, "kind": kind,
                "data": data_path, "settings": settings, "run": info}
    write_outputs(out, files, manifest)
    return text


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            try:
                m = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
                command, kind, data_path, settings = m["command"], m["kind"], m["data"], m["settings"]
            except (OSError, json.JSONDecodeError, KeyError) as exc:
                raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from None
        else:
            command = args.command
            kind = getattr(args, "kind", None)
            data_path = getattr(args, "data", None)
            if data_path is not None:
                data_path = os.path.abspath(data_path)
            settings = resolve(args)
        text = execute(command, kind, data_path, settings, Path(args.out))
    except (UsageError, ValueError, TypeError) as exc:
        if isinstance(exc, DataError):
            print(f"decdens: data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"decdens: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ArithmeticError, ReplicateError, RuntimeError, FloatingPointError) as exc:
        cause = exc.__cause__
        if isinstance(cause, DataError):
            print(f"decdens: data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"decdens: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if text:
        print(text, end="" if text.endswith("\n") else "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
