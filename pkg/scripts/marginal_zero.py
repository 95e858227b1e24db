"""Posterior draws of f(0) for exponential samples of several sizes.

Writes one column of draws per n for external density plots.

    python3 scripts/marginal_zero.py --n 50,500,5000
"""
import argparse
from pathlib import Path

from decdens.harness import StudyConfig, column_csv, run_marginal_zero_study
from decdens.sampler import SamplerConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/marginal_zero")
    p.add_argument("--n", default="50,500")
    p.add_argument("--iters", type=int, default=50000)
    p.add_argument("--master-seed", type=int, default=20240101)
    args = p.parse_args()

    cfg = StudyConfig(sample_sizes=tuple(int(v) for v in args.n.split(",")),
                      sampler=SamplerConfig(iterations=args.iters, burn_in=args.iters // 2),
                      master_seed=args.master_seed)
    res = run_marginal_zero_study(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(res.summary_csv())
    for n, draws in res.draws.items():
        (out / f"draws_n{n}.csv").write_text(column_csv(draws, "f0"))
    print(res.summary_csv())


if __name__ == "__main__":
    main()
