#!/usr/bin/env python3
"""Closed-form audit: integrate the bubble and cylinder orbits, print the
energy drift, invariant monitors, decay fits, and verdicts.

A quick end-to-end health check of the whole pipeline on orbits whose exact
form is known.
"""

import argparse

from fowlerlab import (
    IntegratorSettings,
    bubble_fowler,
    classify,
    cylinder_state,
    decay_rate,
    integrate,
    make_params,
    monitor,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--mu1", type=float, default=1.0)
    ap.add_argument("--mu2", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--t-end", type=float, default=20.0)
    args = ap.parse_args()

    params = make_params(args.N, args.mu1, args.mu2, args.beta)
    settings = IntegratorSettings(t_span=(-args.t_end, args.t_end))

    for name, state in (
        ("bubble", bubble_fowler(params, 1.0, 0.0)),
        ("cylinder", cylinder_state(params)[0]),
    ):
        traj = integrate(params, state, settings)
        report = monitor(params, traj)
        verdict = classify(params, traj, report)
        print(f"{name}: verdict={verdict.verdict} K={verdict.K_value:.3e} "
              f"drift={traj.drift:.3e} certified={traj.certified}")
        print(f"  monitors: f>0 {report.f_positive} lam {report.lambda_bound} "
              f"grad {report.gradient_bound} pohozaev={report.pohozaev_match:.3e}")
        if name == "bubble":
            rates = [decay_rate(traj, c, e) for c in (1, 2) for e in ("+", "-")]
            print(f"  decay rates: {['%.6f' % r for r in rates]} (delta={params.delta})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
