"""Run a pipeline config and print test MAPE per model and scenario, best first.

    python scripts/compare_models.py configs/acceptance.yaml
    python scripts/compare_models.py configs/full_matrix.yaml --out out/full_matrix
"""

from __future__ import annotations

import argparse
import time

from dayahead import pipeline
from dayahead.config import load_config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("config")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--seed", type=int)
    args = parser.parse_args(argv)

    cfg = load_config(args.config).with_overrides(args.seed, args.out)
    t0 = time.perf_counter()
    report = pipeline.run(cfg)
    elapsed = time.perf_counter() - t0

    print(f"{'scenario':<20}{'model':<8}{'MAPE %':>9}{'MAE':>9}{'R2':>8}")
    gbt_best = []
    for sid, entry in report["scenarios"].items():
        for name in entry["ranking"].get("mape") or entry["metrics"]:
            m = entry["metrics"][name]
            r2 = "n/a" if m["r2"] is None else f"{m['r2']:.3f}"
            print(f"{sid:<20}{name:<8}{m['mape']:>9.2f}{m['mae']:>9.4f}{r2:>8}")
        ranking = entry["ranking"].get("mape")
        gbt_best.append(bool(ranking) and ranking[0] == "gbt")
    for sid, err in report["errors"].items():
        print(f"FAILED {sid} at {err['step']}: {err['message']}")
    print(f"\nboosted trees lowest MAPE in {sum(gbt_best)}/{len(gbt_best)} scenarios; {elapsed:.0f}s")
    return 1 if report["errors"] else 0


if __name__ == "__main__":
    raise SystemExit(main())
