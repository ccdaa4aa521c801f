"""Precision and recall of the z-score outlier flags against the injection log.

Lower --sigma or --z to see where natural peaks start to be flagged alongside
the injected spikes.

    python scripts/outlier_recovery.py --seeds 10 --sigma 8
"""

from __future__ import annotations

import argparse
from datetime import date

import numpy as np

from dayahead import synth
from dayahead.preprocess import OutlierPolicy, detect_outliers
from dayahead.timeseries import resample_to_hourly


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--sigma", type=float, default=8.0, help="spike size in series standard deviations")
    parser.add_argument("--z", type=float, default=3.0, help="detection threshold")
    args = parser.parse_args(argv)

    profiles = {"calm": synth.calm_profile(), "maritime": synth.MARITIME, "tropical": synth.TROPICAL}
    inj = synth.Injection(n_spikes=8, spike_sigma=args.sigma, n_short_gaps=6, n_long_gaps=2)
    print(f"{'profile':<10}{'precision':>10}{'recall':>8}{'extra flags':>12}")
    for name, profile in profiles.items():
        tp = fp = fn = 0
        for seed in range(args.seeds):
            recs, log = synth.generate(profile, date(2024, 1, 1), date(2024, 4, 30),
                                       resolution="30min", seed=seed, injection=inj)
            flags = detect_outliers(resample_to_hourly(recs), OutlierPolicy(z_threshold=args.z))
            truth = log.outlier_mask()
            tp += int(np.sum(flags & truth))
            fp += int(np.sum(flags & ~truth))
            fn += int(np.sum(~flags & truth))
        precision = tp / (tp + fp) if tp + fp else float("nan")
        print(f"{name:<10}{precision:>10.3f}{tp / (tp + fn):>8.3f}{fp:>12d}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
