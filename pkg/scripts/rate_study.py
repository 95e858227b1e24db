"""RMSE of the posterior median at zero against n, for base measures A and B.

    python3 scripts/rate_study.py --out results/rate
    python3 scripts/rate_study.py --n 1000,2000,5000,10000,15000,20000 --reps 100   # long
"""
import argparse
from pathlib import Path

from decdens.harness import StudyConfig, run_rate_study
from decdens.sampler import SamplerConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/rate")
    p.add_argument("--n", default="250,500,1000,2000,4000")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--iters", type=int, default=2500)
    p.add_argument("--warmup", type=int, default=20000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--master-seed", type=int, default=20240101)
    args = p.parse_args()

    cfg = StudyConfig(sample_sizes=tuple(int(v) for v in args.n.split(",")), replicates=args.reps,
                      sampler=SamplerConfig(iterations=args.iters, burn_in=args.iters // 2, target_accept=0.2),
                      warmup_iterations=args.warmup, master_seed=args.master_seed)
    res = run_rate_study(cfg, ("A", "B"), threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rate.csv").write_text(res.to_csv())
    (out / "slopes.json").write_text(res.slopes_json())
    print(res.to_csv())
    print(res.slopes_json())


if __name__ == "__main__":
    main()
