"""Bias/variance/MSE tables of the estimators of f(0).

Exponential data with the frequentist estimators, and half-normal data with
the posterior median added. Defaults are desk-scale; pass --reps/--iters to
scale up.

    python3 scripts/reproduce_tables.py --out results/tables
"""
import argparse
from pathlib import Path

from decdens.core import BaseMeasureSpec
from decdens.harness import StudyConfig, run_comparison
from decdens.sampler import SamplerConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/tables")
    p.add_argument("--n", default="50,200")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--master-seed", type=int, default=20240101)
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ns = tuple(int(v) for v in args.n.split(","))
    sampler = SamplerConfig(base=BaseMeasureSpec("A"), iterations=args.iters, burn_in=args.iters // 2)

    runs = {
        "exponential": ("P", "S", "A", "H"),
        "half_normal": ("P", "S", "A", "H", "B"),
    }
    for dist, estimators in runs.items():
        cfg = StudyConfig(distribution=dist, sample_sizes=ns, replicates=args.reps, estimators=estimators,
                          sampler=sampler, master_seed=args.master_seed)
        table = run_comparison(cfg, threads=args.threads)
        (out / f"{dist}.csv").write_text(table.to_csv())
        print(f"== {dist} ({args.reps} replicates)")
        print(table.to_text())


if __name__ == "__main__":
    main()
