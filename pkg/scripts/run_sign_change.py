#!/usr/bin/env python3
"""Sign-change experiment driver.

Samples initial data on the positive-energy side and on the zero-energy
surface (nonzero determinant), integrates the signed system in both time
directions, and requires a sign change in every run.  Exits 2 when any run
reaches the horizon without one.
"""

import argparse
import sys
from dataclasses import dataclass

from fowlerlab import SamplerSpec, make_params, sign_change_experiment
from fowlerlab.serialize import dumps, experiment_report_to_dict


@dataclass(frozen=True)
class RunSpec:
    N: int = 3
    mu1: float = 1.0
    mu2: float = 1.0
    beta: float = 1.0
    runs: int = 100
    seed: int = 0
    horizon: float = 50.0


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--mu1", type=float, default=1.0)
    ap.add_argument("--mu2", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--horizon", type=float, default=50.0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    spec = RunSpec(args.N, args.mu1, args.mu2, args.beta, args.runs, args.seed, args.horizon)

    params = make_params(spec.N, spec.mu1, spec.mu2, spec.beta)
    failures = 0
    for projection in ("psi_positive", "psi_zero"):
        report = sign_change_experiment(
            params,
            SamplerSpec(kind="uniform_box", projection=projection),
            n_runs=spec.runs,
            seed=spec.seed,
            horizon=spec.horizon,
        )
        failures += len(report.failures)
        print(f"{projection}: {report.counts} detection_rate="
              f"{report.summary['detection_rate']}")
        if args.out:
            path = f"{args.out}.{projection}.json"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(dumps(experiment_report_to_dict(report)))
            print(f"wrote {path}")
    return 2 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
