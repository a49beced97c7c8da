"""Benchmark the compiled round kernel against the pure-Python fallback.

Runs the same seeded random-rollout audit through both backends and
reports rounds/second plus the speedup.  Usage:

    python3 benchmarks/bench_rollouts.py [--rounds N]
"""

import argparse
import importlib
import time


def run(backend_env: str, hand: int, digits: int, players: int,
        rounds: int, seed: int):
    import os

    os.environ.pop("LIARSPOKER_PURE", None)
    if backend_env:
        os.environ["LIARSPOKER_PURE"] = "1"
    import liarspoker._fast as fast

    importlib.reload(fast)
    t0 = time.perf_counter()
    result = fast.audit_rollouts(hand, digits, players, rounds, seed)
    dt = time.perf_counter() - t0
    return fast.BACKEND, result, dt


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rounds", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    configs = [(3, 3, 2), (3, 3, 3), (5, 5, 2), (8, 10, 4)]
    for h, d, l in configs:
        rows = []
        for pure in (False, True):
            backend, result, dt = run(pure, h, d, l, args.rounds, args.seed)
            assert result["violations"] == 0, result
            rows.append((backend, result, dt))
        (b0, r0, t0), (b1, r1, t1) = rows
        assert r0["moves"] == r1["moves"], "backends disagree"
        print(
            f"{h}x{d} {l}-player: {b0} {args.rounds / t0:,.0f} rounds/s, "
            f"{b1} {args.rounds / t1:,.0f} rounds/s, "
            f"speedup x{t1 / t0:.1f}"
        )


if __name__ == "__main__":
    main()
