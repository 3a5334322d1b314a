#!/usr/bin/env python3
"""Exploratory audit: is the mwm state below the baseline state, slot by slot?

Runs the two policies on coupled sample paths at desk scale and reports the
fraction of slots where the mwm queue vector sits below the baseline vector
in the balancing partial order. The fraction is expected to be high but is
measured, not asserted.
"""

import argparse

from mwmlab.harness import SimConfig, format_audit_report, per_slot_preceq_audit
from mwmlab.queueing import SystemParams


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--baseline", default="fixed_order")
    parser.add_argument("--replications", type=int, default=100)
    args = parser.parse_args()

    config = SimConfig(
        params=SystemParams(n_queues=2, n_servers=1, connect_prob=0.5, arrival_prob=0.2),
        horizon=50,
        replications=args.replications,
        seed=42,
        policies=("mwm", args.baseline) if args.baseline != "mwm" else ("mwm",),
    )
    report = per_slot_preceq_audit(config, args.baseline)
    print(format_audit_report(report))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
