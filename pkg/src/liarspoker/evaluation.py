"""Match harness and reporting.

Plays agent-vs-agent matches with optional seat rotation and produces the
reporting quantities used throughout: win rate, equity scaled per 100
hands with its standard error, win-type attribution (final bid held vs
successful challenge), win rate by hand category, and rebid usage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .agents import Agent, Observation, make_agent
from .engine import (
    GameConfig,
    HandHistoryWriter,
    Phase,
    apply_action,
    new_round,
    resolve_count,
)


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class MatchSpec:
    config: GameConfig
    agents: tuple          # descriptors (str) or Agent instances, one per seat
    hands: int = 1000
    rotate: bool = True
    opener_rule: str = "rotate"      # "rotate" | "final_bidder"
    seed: int = 0
    history_path: str | None = None

    def __post_init__(self):
        if self.hands < 1:
            raise EvaluationError("hands must be >= 1")
        if len(self.agents) != self.config.num_players:
            raise EvaluationError("need exactly one agent per seat")
        if self.opener_rule not in ("rotate", "final_bidder"):
            raise EvaluationError(f"unknown opener rule {self.opener_rule!r}")


@dataclass
class AgentReport:
    name: str
    hands: int = 0
    hands_won: int = 0
    total_equity: int = 0
    payouts: list = field(default_factory=list)
    wins_by_bid: int = 0
    wins_by_challenge: int = 0
    hands_by_category: dict = field(default_factory=dict)
    wins_by_category: dict = field(default_factory=dict)
    rebid_hands: int = 0

    @property
    def win_rate(self) -> float:
        return self.hands_won / self.hands

    @property
    def equity_per_100(self) -> float:
        return 100.0 * self.total_equity / self.hands

    @property
    def stderr_per_100(self) -> float:
        if self.hands < 2:
            return float("nan")
        mean = self.total_equity / self.hands
        var = sum((p - mean) ** 2 for p in self.payouts) / (self.hands - 1)
        return 100.0 * math.sqrt(var) / math.sqrt(self.hands)

    @property
    def win_by_bid_share(self) -> float:
        wins = self.hands_won
        return self.wins_by_bid / wins if wins else float("nan")

    @property
    def win_by_challenge_share(self) -> float:
        wins = self.hands_won
        return self.wins_by_challenge / wins if wins else float("nan")

    @property
    def rebid_rate(self) -> float:
        return self.rebid_hands / self.hands

    def win_rate_by_category(self) -> dict[int, float]:
        return {
            cat: self.wins_by_category.get(cat, 0) / n
            for cat, n in sorted(self.hands_by_category.items())
        }


@dataclass
class MatchReport:
    spec: MatchSpec
    agents: list[AgentReport]
    history_path: str | None
    aborted_at: int | None = None     # hand index if the match aborted early

    @property
    def hands_played(self) -> int:
        return self.agents[0].hands


def _resolve_agents(spec: MatchSpec) -> list[Agent]:
    out = []
    for a in spec.agents:
        out.append(make_agent(a, spec.config) if isinstance(a, str) else a)
    return out


def run_match(spec: MatchSpec) -> MatchReport:
    """Play the match and accumulate the report.

    With rotation on, agent a occupies seat (a + hand) mod L so every agent
    sees every seat equally often.  A gateway outage from an LLM seat aborts
    the match and returns the partial report with aborted_at set.
    """
    from .llm_gateway import GatewayError

    agents = _resolve_agents(spec)
    cfg = spec.config
    L = cfg.num_players
    reports = [AgentReport(name=getattr(a, "describe", lambda: "agent")())
               for a in agents]
    writer = HandHistoryWriter(spec.history_path) if spec.history_path else None
    aborted_at = None
    opener = 0
    try:
        for hand in range(spec.hands):
            rot = hand % L if spec.rotate else 0
            seat_of = [(a + rot) % L for a in range(len(agents))]
            agent_of = [0] * L
            for a, s in enumerate(seat_of):
                agent_of[s] = a
            if spec.opener_rule == "rotate":
                # seat labels only matter through the opener, so rotating
                # agents across seats with a fixed opening seat already
                # hands the opening duty to each agent in turn; without
                # rotation the opening seat itself must cycle
                opener = 0 if spec.rotate else hand % L
            state = new_round(cfg, seed=spec.seed * 1_000_003 + hand, opener=opener)
            rebid_by = [False] * len(agents)
            move = 0
            try:
                for a, agent in enumerate(agents):
                    agent.on_round_start(Observation.from_state(state, seat_of[a]))
                while state.phase is not Phase.RESOLVED:
                    seat = state.to_act
                    agent = agents[agent_of[seat]]
                    obs = Observation.from_state(state, seat)
                    out = agent.act(obs, seed=spec.seed * 9_176 + hand * 499 + move)
                    if state.phase is Phase.BIDDER_DECISION and out.action < cfg.num_bids:
                        rebid_by[agent_of[seat]] = True
                    state = apply_action(state, out.action)
                    move += 1
            except GatewayError:
                aborted_at = hand
                break
            result, payouts = resolve_count(state)
            try:
                for agent in agents:
                    agent.on_round_end(result, payouts)
            except GatewayError:
                aborted_at = hand
            if spec.opener_rule == "final_bidder":
                opener = result.final_bidder
            if writer:
                writer.append(state)
            for seat in range(L):
                a = agent_of[seat]
                rep = reports[a]
                pay = payouts[seat]
                rep.hands += 1
                rep.total_equity += pay
                rep.payouts.append(pay)
                cat = max(state.hands[seat].counts)
                rep.hands_by_category[cat] = rep.hands_by_category.get(cat, 0) + 1
                if rebid_by[a]:
                    rep.rebid_hands += 1
                if pay > 0:
                    rep.hands_won += 1
                    rep.wins_by_category[cat] = rep.wins_by_category.get(cat, 0) + 1
                    if seat == result.final_bidder and result.bid_holds:
                        rep.wins_by_bid += 1
                    else:
                        rep.wins_by_challenge += 1
            if aborted_at is not None:
                break
    finally:
        if writer:
            writer.close()
    return MatchReport(spec, reports, spec.history_path, aborted_at)


def breakdown_by_hand(report: MatchReport) -> list[tuple[str, int, int, float]]:
    """Rows of (agent, hand category, hands, win rate)."""
    rows = []
    for rep in report.agents:
        for cat, rate in rep.win_rate_by_category().items():
            rows.append((rep.name, cat, rep.hands_by_category[cat], rate))
    return rows


def format_report(report: MatchReport, fmt: str = "text") -> str:
    lines = []
    if fmt == "csv":
        lines.append("agent,hands,win_rate,equity_per_100,stderr_per_100,"
                     "win_by_bid,win_by_challenge,rebid_rate")
        for r in report.agents:
            lines.append(
                f"{r.name},{r.hands},{r.win_rate:.4f},{r.equity_per_100:.3f},"
                f"{r.stderr_per_100:.3f},{r.win_by_bid_share:.4f},"
                f"{r.win_by_challenge_share:.4f},{r.rebid_rate:.4f}"
            )
        return "\n".join(lines)
    lines.append(f"{'agent':<24}{'hands':>8}{'win%':>8}{'eq/100':>10}"
                 f"{'se/100':>8}{'bid-win':>9}{'chl-win':>9}{'rebid%':>8}")
    for r in report.agents:
        lines.append(
            f"{r.name:<24}{r.hands:>8}{100*r.win_rate:>8.1f}"
            f"{r.equity_per_100:>10.2f}{r.stderr_per_100:>8.2f}"
            f"{100*r.win_by_bid_share:>9.1f}{100*r.win_by_challenge_share:>9.1f}"
            f"{100*r.rebid_rate:>8.1f}"
        )
    if report.aborted_at is not None:
        lines.append(f"match aborted at hand {report.aborted_at} (gateway outage)")
    return "\n".join(lines)
