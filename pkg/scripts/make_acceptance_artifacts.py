"""Build the cached training-run artifacts consumed by the acceptance gate.

Expects a finished training run directory with ckpt_10000.bin and a final
checkpoint; writes criterion10.json next to the checkpoints.  Takes about
half an hour on one core (two 40k-step DQN exploiter runs dominate).

Usage: python scripts/make_acceptance_artifacts.py [run_dir] [final_step]
"""

import json
import sys
import time

import numpy as np

from liarspoker.agents import PolicyAgent
from liarspoker.bestresponse import BRConfig, exact_best_response, train_dqn_br
from liarspoker.engine import GameConfig
from liarspoker.evaluation import MatchSpec, run_match
from liarspoker.neural import load_checkpoint

CFG = GameConfig(3, 3, 2)


def main() -> None:
    run_dir = sys.argv[1] if len(sys.argv) > 1 else "runs/acceptance_3x3_2p_v2"
    final_step = int(sys.argv[2]) if len(sys.argv) > 2 else 120_000
    final_tag = f"ckpt_{final_step}"
    mid = f"{run_dir}/ckpt_10000.bin"
    final = f"{run_dir}/{final_tag}.bin"

    out = {
        "run_dir": run_dir,
        "game": CFG.label(),
        "train_steps": final_step,
        "final_tag": final_tag,
    }
    t0 = time.time()

    for key, opponent, seed in (("vs_random", "random", 101),
                                ("vs_baseline", "baseline", 202)):
        spec = MatchSpec(CFG, agents=(f"policy:{final}", opponent),
                         hands=10_000, seed=seed)
        rep = run_match(spec).agents[0]
        out[key] = {
            "hands": 10_000,
            "win_rate": rep.win_rate,
            "equity_per_100": rep.equity_per_100,
            "stderr_per_100": rep.stderr_per_100,
        }
        print(key, out[key], f"{time.time() - t0:.0f}s", flush=True)

    out["exact_br"] = {}
    for tag, path in (("ckpt_10000", mid), (final_tag, final)):
        agent = PolicyAgent(load_checkpoint(path, expect_config=CFG), filtered=True)
        vals = [exact_best_response(agent, CFG, responder=s) for s in (0, 1)]
        out["exact_br"][tag] = {
            "per_seat": vals,
            "rotation_avg": float(np.mean(vals)),
        }
        print("exact_br", tag, out["exact_br"][tag], f"{time.time() - t0:.0f}s",
              flush=True)

    out["dqn"] = {}
    for tag, path in (("ckpt_10000", mid), (final_tag, final)):
        br = BRConfig(checkpoint=path, steps=40_000, eval_every=2_000,
                      eval_rounds=500, rolling_window=10, seed=11)
        series = train_dqn_br(br, config=CFG)
        out["dqn"][tag] = {
            "config": {
                "steps": br.steps,
                "eval_every": br.eval_every,
                "eval_rounds": br.eval_rounds,
                "rolling_window": br.rolling_window,
            },
            "entries": series.entries,
            "rolling_mean": series.rolling_mean,
        }
        print("dqn", tag, series.rolling_mean, f"{time.time() - t0:.0f}s", flush=True)

    out["elapsed_s"] = time.time() - t0
    with open(f"{run_dir}/criterion10.json", "w") as fh:
        json.dump(out, fh, indent=2)
    print("wrote", f"{run_dir}/criterion10.json", flush=True)


if __name__ == "__main__":
    main()
