"""Freeze the Monte Carlo thresholds used by the acceptance suite.

Runs the slow-win and trimmed-defeat experiments on a pilot seed that the
acceptance run does not use, then writes tests/data/pilot_thresholds.json.
A threshold is the pilot estimate moved 3 binomial standard errors toward
the permissive side, at the acceptance sample size.

    python3 scripts/pilot_thresholds.py [--seed 1001]
"""
import argparse
import json
import math
import time
from pathlib import Path

from intmart import strategies as S
from intmart.bernoulli import McConfig, mc_defeat, mc_slow_win

OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "pilot_thresholds.json"


def se(p, n):
    return math.sqrt(p * (1 - p) / n)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1001)
    args = ap.parse_args()

    t0 = time.perf_counter()
    slow = mc_slow_win(McConfig(samples=2000, horizon=10**5, seed=args.seed)).rows[-1]
    p = slow.frac_above_power
    above = min(1.0, p + 3 * se(p, 2000))

    defeat = {}
    for name, strat in (("interval_doubling", S.interval_doubling(1)), ("copy_previous", S.copy_previous(5))):
        rep = mc_defeat(S.trim_to_sqrt(strat, 100), McConfig(samples=500, horizon=10**5, seed=args.seed, n0=100))
        q = rep.converged_fraction
        defeat[name] = {"pilot": q, "threshold": max(0.0, q - 3 * se(q, 500)), "active_steps": rep.active_steps}

    data = {
        "pilot_seed": args.seed,
        "rule": "pilot estimate -/+ 3 binomial standard errors at the acceptance sample size",
        "slow_win_above_sqrt": {"n": slow.n, "pilot": p, "threshold": above, "target": 0.05},
        "defeat_bounded_fraction": defeat,
        "pilot_seconds": round(time.perf_counter() - t0, 1),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=2) + "\n")
    print(json.dumps(data, indent=2))


if __name__ == "__main__":
    main()
