"""Inject each catalogued fault in turn and write the kill matrix as CSV and JSON."""

import argparse
import pathlib

from metamorph.config import load_config
from metamorph.kill_matrix import run_kill_matrix


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/quick.yaml")
    ap.add_argument("--out", default="results")
    ap.add_argument("--faults", nargs="*", help="subset of fault ids (all when omitted)")
    ap.add_argument("--skip-gate", action="store_true")
    args = ap.parse_args()
    cfg = load_config(args.config)
    km = run_kill_matrix(args.faults or None, cfg.matrix, gate=not args.skip_gate,
                         progress=lambda f, k: print(f"{f:34s} {', '.join(k) or '-'}", flush=True))
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "kill_matrix.csv").write_text(km.to_csv())
    (out / "kill_matrix.json").write_text(km.to_json() + "\n")
    print(f"kill rate {km.kill_rate:.1%}; survivors: {[f for f in km.fault_ids if not km.killed(f)]}")
    print(f"missed expectations: {km.missed_expectations() or 'none'}; dead MRs: {km.dead_mrs() or 'none'}")


if __name__ == "__main__":
    main()
