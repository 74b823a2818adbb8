#!/usr/bin/env python3
"""Semi-singular search driver for N >= 4.

Draws positive near-equilibrium data with negative energy, classifies every
orbit, and exits 2 if any semi-singular candidate shows up (it never should
for N >= 4).
"""

import argparse
import sys

from fowlerlab import IntegratorSettings, make_params, semi_singular_search
from fowlerlab.serialize import dumps, experiment_report_to_dict


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=5)
    ap.add_argument("--mu1", type=float, default=1.0)
    ap.add_argument("--mu2", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--t-end", type=float, default=15.0,
                    help="half-width of the integration window")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    params = make_params(args.N, args.mu1, args.mu2, args.beta)
    settings = IntegratorSettings(t_span=(-args.t_end, args.t_end))
    report = semi_singular_search(params, n_runs=args.runs, settings=settings,
                                  seed=args.seed)
    print(f"N={args.N}: {report.counts}")
    print(f"lower-bound statistic: {report.summary['lower_bound_stat']}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dumps(experiment_report_to_dict(report)))
        print(f"wrote {args.out}")
    if report.failures:
        print(f"FOUND {len(report.failures)} semi-singular candidate(s)", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
