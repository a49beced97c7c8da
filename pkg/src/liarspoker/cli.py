"""Command-line interface.

Subcommands: enumerate (state-space table), probe (bid probabilities),
train (self-play), best-response (DQN exploiter), eval (matches), play
(interactive terminal table), serve (HTTP play service).
"""

from __future__ import annotations

import argparse
import sys

from .engine import GameConfig


def _parse_config(text: str) -> GameConfig:
    """Accepts HxDxL, e.g. 3x3x2."""
    try:
        h, d, l = (int(p) for p in text.lower().split("x"))
        return GameConfig(h, d, l)
    except Exception as exc:
        raise argparse.ArgumentTypeError(
            f"config must look like 3x3x2 (hand x digits x players): {exc}"
        )


def _add_config(p, default="3x3x2"):
    p.add_argument("--config", type=_parse_config, default=_parse_config(default),
                   help="game as HANDxDIGITSxPLAYERS (default %(default)s)")


def cmd_enumerate(args) -> int:
    from . import combinatorics as comb

    if args.all:
        configs = [
            GameConfig(h, d, l)
            for h, d in ((3, 3), (5, 5), (8, 10))
            for l in range(2, 6)
        ]
    else:
        configs = [args.config]
    rows = comb.state_space_report(configs)
    print(comb.format_report(rows, fmt=args.format))
    return 0


def cmd_probe(args) -> int:
    from .combinatorics import p_bid_holds_exact
    from .engine import Bid

    cfg = args.config
    print(f"{cfg.label()}: P(bid holds | own count y), exact")
    header = "q\\y " + " ".join(f"{y:>8}" for y in range(cfg.hand_length + 1))
    print(header)
    for q in range(1, cfg.max_quantity + 1):
        cells = []
        for y in range(cfg.hand_length + 1):
            p = p_bid_holds_exact(cfg, Bid(q, 1), y)
            cells.append(f"{float(p):>8.4f}")
        print(f"{q:<4}" + " ".join(cells))
    return 0


def cmd_train(args) -> int:
    from . import trainer

    tc = trainer.TrainerConfig(
        game=args.config,
        hidden=tuple(args.hidden),
        total_steps=args.steps,
        trajectories_per_step=args.trajectories,
        cutoff=args.cutoff,
        eta=args.eta,
        refresh_interval=args.refresh_interval,
        learning_rate=args.lr,
        learning_rate_floor=args.lr_floor,
        reward_scale=args.reward_scale,
        entropy_coefficient=args.entropy,
        checkpoint_interval=args.checkpoint_interval,
        seed=args.seed,
    )

    def progress(step, metrics, unterminated):
        if (step + 1) % args.log_every == 0:
            print(
                f"step {step + 1}/{args.steps} loss {metrics['loss']:.4f} "
                f"unterminated {unterminated:.2%}",
                flush=True,
            )

    result = trainer.train(tc, args.out, progress=progress)
    print(f"wrote {len(result.checkpoints)} checkpoints and "
          f"{result.metrics_path}")
    return 0


def cmd_best_response(args) -> int:
    from . import bestresponse as br

    bc = br.BRConfig(
        checkpoint=args.checkpoint,
        position=args.position,
        steps=args.steps,
        eval_every=args.eval_every,
        eval_rounds=args.eval_rounds,
        seed=args.seed,
    )
    series = br.train_dqn_br(bc)
    lines = ["step\tscore"]
    for step, score in series.entries:
        lines.append(f"{step}\t{score:.6f}")
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    print(f"rolling mean (last {series.rolling_window}): "
          f"{series.rolling_mean:.4f}")
    return 0


def cmd_eval(args) -> int:
    from . import evaluation as ev

    spec = ev.MatchSpec(
        config=args.config,
        agents=tuple(args.agents),
        hands=args.hands,
        rotate=not args.no_rotate,
        opener_rule=args.opener_rule,
        seed=args.seed,
        history_path=args.history,
    )
    report = ev.run_match(spec)
    print(ev.format_report(report, fmt=args.report))
    if args.breakdown:
        print("\nhand-category breakdown (agent, category, hands, win rate)")
        for name, cat, hands, rate in ev.breakdown_by_hand(report):
            print(f"  {name:<24}{cat:>3}{hands:>8}{rate:>8.3f}")
    return 0


def cmd_play(args) -> int:
    from .service import SessionManager

    manager = SessionManager()
    session_id = manager.create_session(
        args.config, list(args.seats), opener_rule=args.opener_rule,
        seed=args.seed,
    )
    human_seats = [i for i, s in enumerate(args.seats) if s == "human"]
    if not human_seats:
        print("no human seats; nothing to play interactively", file=sys.stderr)
        return 2
    seat = human_seats[0]
    shown = 0
    print(f"session {session_id}; you are seat {seat}")
    while True:
        view = manager.get_view(session_id, seat)
        for event in manager.events_since(session_id, shown):
            shown = event["seq"]
            kind, payload = event["kind"], event["payload"]
            if kind == "action":
                act = payload["action"]
                desc = ("challenge" if act["type"] == "challenge"
                        else f"bid {act['q']} of {act['r']}")
                print(f"  seat {payload['seat']}: {desc}")
            elif kind == "resolution":
                print(f"  showdown: hands {payload['hands']} totals "
                      f"{payload['totals']} payouts {payload['payouts']}")
            elif kind == "round_start":
                print(f"-- round {payload['round']} "
                      f"(opener seat {payload['opener']}) --")
        if not view["your_turn"]:
            continue
        print(f"your hand: {view['hand']}  ledger: {view['ledger']}")
        sb = view["standing_bid"]
        if sb:
            print(f"standing bid: {sb['q']} of {sb['r']} by seat {sb['bidder']}"
                  + (" (rebid)" if sb["is_rebid"] else ""))
        raw = input('move ("q r" to bid, "c" to challenge, "quit"): ').strip()
        if raw.lower() in ("quit", "exit"):
            return 0
        if raw.lower() in ("c", "challenge"):
            action = {"type": "challenge"}
        else:
            try:
                q, r = (int(p) for p in raw.split())
                action = {"type": "bid", "q": q, "r": r}
            except ValueError:
                print("could not parse that; try again")
                continue
        try:
            manager.submit_action(session_id, seat, action)
        except Exception as exc:
            print(f"rejected: {exc}")


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port,
                log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liarspoker")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="state-space table (counts, lengths)")
    _add_config(p)
    p.add_argument("--all", action="store_true", help="the standard config grid")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(fn=cmd_enumerate)

    p = sub.add_parser("probe", help="exact bid-holds probability table")
    _add_config(p)
    p.set_defaults(fn=cmd_probe)

    p = sub.add_parser("train", help="self-play training run")
    _add_config(p)
    p.add_argument("--out", required=True, help="checkpoint/metrics directory")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--hidden", type=int, nargs="+", default=[256, 256])
    p.add_argument("--trajectories", type=int, default=128)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--eta", type=float, default=0.2)
    p.add_argument("--refresh-interval", type=int, default=1000)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--lr-floor", type=float, default=2e-4)
    p.add_argument("--reward-scale", type=float, default=1.0)
    p.add_argument("--entropy", type=float, default=0.0)
    p.add_argument("--checkpoint-interval", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", type=int, default=100)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("best-response", help="train a DQN exploiter")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--position", type=int, default=0)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--eval-every", type=int, default=5_000)
    p.add_argument("--eval-rounds", type=int, default=1_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the score series as TSV")
    p.set_defaults(fn=cmd_best_response)

    p = sub.add_parser("eval", help="agent-vs-agent match")
    _add_config(p)
    p.add_argument("--agents", nargs="+", required=True,
                   help='descriptors: random baseline policy:PATH llm:NAME')
    p.add_argument("--hands", type=int, default=1000)
    p.add_argument("--no-rotate", action="store_true")
    p.add_argument("--opener-rule", choices=("rotate", "final_bidder"),
                   default="rotate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history", help="hand-history output path")
    p.add_argument("--report", choices=("text", "csv"), default="text")
    p.add_argument("--breakdown", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("play", help="interactive terminal table")
    _add_config(p)
    p.add_argument("--seats", nargs="+", required=True,
                   help='one descriptor per seat; include "human"')
    p.add_argument("--opener-rule", choices=("rotate", "final_bidder"),
                   default="rotate")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_play)

    p = sub.add_parser("serve", help="run the HTTP play service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
