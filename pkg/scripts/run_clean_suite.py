"""Run every CMR and FMR on the synthetic data for several seeds and print a verdict table."""

import argparse
import time

from metamorph.config import load_config
from metamorph.correlation_mrs import run_correlation_suite
from metamorph.forecaster_mrs import run_forecaster_suite
from metamorph.series import default_split, synth_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/quick.yaml")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()
    base = load_config(args.config)
    n_fail = 0
    for seed in args.seeds:
        cfg = base.with_seed(seed)
        t0 = time.perf_counter()
        verdicts = run_correlation_suite(synth_table(cfg.data.table_rows, seed), seed=seed)
        train_s, val_s = default_split(seed, cfg.data.n_train, cfg.data.n_val)
        verdicts += run_forecaster_suite(train_s, val_s, cfg.suite()).verdicts
        print(f"seed {seed} ({time.perf_counter() - t0:.0f}s)")
        for v in verdicts:
            print(f"  {v.mr_id:7s} {v.status:4s}  {v.details}")
        n_fail += sum(v.failed for v in verdicts)
    print(f"{n_fail} failing verdict(s)")
    raise SystemExit(1 if n_fail else 0)


if __name__ == "__main__":
    main()
