"""Rules-exact Liar's Poker round engine.

A round of (H digits per hand, D ranks, L players) Liar's Poker is a pure
state machine: deal, mandatory opening bid, clockwise raise/challenge turns,
the challenged bidder's count-or-rebid decision, and a zero-sum payout once
the final bid is counted.  States are immutable; ``apply_action`` returns a
new state, so values can be shared freely across threads.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Sequence


class EngineError(Exception):
    """Raised on contract violations: bad hands, illegal actions, wrong phase."""


@dataclass(frozen=True)
class GameConfig:
    """The (H, D, L) triple defining a Liar's Poker variant."""

    hand_length: int
    digit_cardinality: int
    num_players: int

    def __post_init__(self) -> None:
        if self.hand_length < 1:
            raise EngineError(f"hand_length must be >= 1, got {self.hand_length}")
        if self.digit_cardinality < 1:
            raise EngineError(f"digit_cardinality must be >= 1, got {self.digit_cardinality}")
        if self.num_players < 2:
            raise EngineError(f"num_players must be >= 2, got {self.num_players}")

    @property
    def max_quantity(self) -> int:
        return self.hand_length * self.num_players

    @property
    def num_bids(self) -> int:
        return self.max_quantity * self.digit_cardinality

    @property
    def num_actions(self) -> int:
        """All bids plus the challenge slot."""
        return self.num_bids + 1

    @property
    def challenge_action(self) -> int:
        """Action id for challenge (doubles as "count" in BidderDecision)."""
        return self.num_bids

    def label(self) -> str:
        return f"{self.hand_length}x{self.digit_cardinality} {self.num_players}-player"


@dataclass(frozen=True)
class Hand:
    """A private hand in count form: counts[r-1] = copies of rank r."""

    counts: tuple[int, ...]

    @staticmethod
    def from_digits(digits: Sequence[int], config: GameConfig) -> "Hand":
        counts = [0] * config.digit_cardinality
        for d in digits:
            if not 1 <= d <= config.digit_cardinality:
                raise EngineError(f"digit {d} outside 1..{config.digit_cardinality}")
            counts[d - 1] += 1
        return Hand(tuple(counts))

    def validate(self, config: GameConfig) -> None:
        if len(self.counts) != config.digit_cardinality:
            raise EngineError(
                f"hand has {len(self.counts)} rank slots, config needs {config.digit_cardinality}"
            )
        if any(c < 0 for c in self.counts):
            raise EngineError(f"negative rank count in {self.counts}")
        if sum(self.counts) != config.hand_length:
            raise EngineError(
                f"hand counts sum to {sum(self.counts)}, config needs {config.hand_length}"
            )

    def digits(self) -> tuple[int, ...]:
        """Hand as a sorted digit tuple (canonical order)."""
        out: list[int] = []
        for rank, c in enumerate(self.counts, start=1):
            out.extend([rank] * c)
        return tuple(out)


@dataclass(frozen=True, order=True)
class Bid:
    """An ordered claim: rank `rank` appears at least `quantity` times overall.

    The dataclass ordering (quantity first, then rank) coincides with bid
    strength, as does the dense index.
    """

    quantity: int
    rank: int

    def index(self, config: GameConfig) -> int:
        return index_of_bid(config, self)

    def __str__(self) -> str:
        return f"({self.quantity},{self.rank})"


def bid_of_index(config: GameConfig, index: int) -> Bid:
    """Inverse of ``index_of_bid``; index 0 is the weakest bid (1, 1)."""
    if not 0 <= index < config.num_bids:
        raise EngineError(f"bid index {index} outside [0, {config.num_bids})")
    q, r = divmod(index, config.digit_cardinality)
    return Bid(quantity=q + 1, rank=r + 1)


def index_of_bid(config: GameConfig, bid: Bid) -> int:
    if not 1 <= bid.quantity <= config.max_quantity:
        raise EngineError(f"bid quantity {bid.quantity} outside [1, {config.max_quantity}]")
    if not 1 <= bid.rank <= config.digit_cardinality:
        raise EngineError(f"bid rank {bid.rank} outside [1, {config.digit_cardinality}]")
    return (bid.quantity - 1) * config.digit_cardinality + (bid.rank - 1)


class Phase(Enum):
    BIDDING = "bidding"
    BIDDER_DECISION = "bidder_decision"
    RESOLVED = "resolved"


@dataclass(frozen=True)
class StandingBid:
    index: int
    bidder: int
    is_rebid: bool


@dataclass(frozen=True)
class CountResult:
    """Outcome of the showdown count."""

    totals: tuple[int, ...]
    final_bid: Bid
    final_bidder: int
    bid_holds: bool

    @property
    def winner_side(self) -> str:
        return "bidder" if self.bid_holds else "challengers"


@dataclass(frozen=True)
class RoundState:
    config: GameConfig
    hands: tuple[Hand, ...]
    opener: int
    standing_bid: Optional[StandingBid]
    consecutive_challenges: int
    to_act: int
    history: tuple[tuple[int, int], ...]  # (player, action id)
    phase: Phase
    count_result: Optional[CountResult] = None
    payouts: Optional[tuple[int, ...]] = None

    def hand_of(self, player: int) -> Hand:
        return self.hands[player]

    def round_length(self) -> int:
        """Number of moves, excluding an explicit count decision.

        This is the length metric used by the state-space analysis: a count
        chosen in BidderDecision is recorded in history but not counted.
        """
        n = len(self.history)
        if n and self.history[-1] == (self._final_bidder(), self.config.challenge_action):
            # Last entry is the bidder's explicit count (never a challenge,
            # since unanimously challenged rebids resolve without one).
            if self.phase is Phase.RESOLVED and self.count_result is not None:
                prev_challenges = sum(
                    1 for _, a in self.history if a == self.config.challenge_action
                )
                # Explicit count only happens out of BidderDecision, i.e. the
                # standing bid was not a rebid and all L-1 opponents challenged.
                if not self.standing_bid.is_rebid and prev_challenges >= self.config.num_players:
                    return n - 1
        return n

    def _final_bidder(self) -> int:
        return self.standing_bid.bidder if self.standing_bid else -1


def deal_hands(config: GameConfig, seed: int) -> tuple[Hand, ...]:
    """Deal L hands of H digits, each digit i.i.d. uniform on 1..D."""
    rng = random.Random(seed)
    hands = []
    for _ in range(config.num_players):
        digits = [rng.randint(1, config.digit_cardinality) for _ in range(config.hand_length)]
        hands.append(Hand.from_digits(digits, config))
    return tuple(hands)


def new_round(
    config: GameConfig,
    hands: Optional[Sequence[Hand | Sequence[int]]] = None,
    seed: Optional[int] = None,
    opener: int = 0,
) -> RoundState:
    """Start a round from explicit hands or a reproducible seed."""
    if not 0 <= opener < config.num_players:
        raise EngineError(f"opener {opener} outside [0, {config.num_players})")
    if hands is None:
        if seed is None:
            raise EngineError("either hands or seed must be provided")
        dealt = deal_hands(config, seed)
    else:
        if len(hands) != config.num_players:
            raise EngineError(f"need {config.num_players} hands, got {len(hands)}")
        dealt = tuple(h if isinstance(h, Hand) else Hand(tuple(h)) for h in hands)
        for h in dealt:
            h.validate(config)
    return RoundState(
        config=config,
        hands=dealt,
        opener=opener,
        standing_bid=None,
        consecutive_challenges=0,
        to_act=opener,
        history=(),
        phase=Phase.BIDDING,
    )


def legal_actions(state: RoundState) -> list[int]:
    """Legal action ids at the current decision point, ascending.

    Opening: every bid, no challenge.  Bidding over bid i: every bid with a
    higher index, plus challenge.  BidderDecision: challenge (= count) plus
    every higher bid (the rebids).
    """
    if state.phase is Phase.RESOLVED:
        raise EngineError("no legal actions in a resolved round")
    cfg = state.config
    sb = state.standing_bid
    if sb is None:
        return list(range(cfg.num_bids))
    raises = list(range(sb.index + 1, cfg.num_bids))
    return raises + [cfg.challenge_action]


def _resolve(state: RoundState) -> RoundState:
    """Count the final bid and settle payouts."""
    cfg = state.config
    sb = state.standing_bid
    assert sb is not None
    totals = tuple(
        sum(h.counts[r] for h in state.hands) for r in range(cfg.digit_cardinality)
    )
    final_bid = bid_of_index(cfg, sb.index)
    holds = totals[final_bid.rank - 1] >= final_bid.quantity
    unit = 1 if holds else -1
    payouts = tuple(
        unit * (cfg.num_players - 1) if p == sb.bidder else -unit
        for p in range(cfg.num_players)
    )
    result = CountResult(
        totals=totals, final_bid=final_bid, final_bidder=sb.bidder, bid_holds=holds
    )
    return replace(state, phase=Phase.RESOLVED, count_result=result, payouts=payouts)


def apply_action(state: RoundState, action: int) -> RoundState:
    if state.phase is Phase.RESOLVED:
        raise EngineError("round already resolved")
    cfg = state.config
    if action not in legal_actions(state):
        raise EngineError(f"illegal action {action} (legal: {legal_actions(state)})")
    actor = state.to_act
    history = state.history + ((actor, action),)

    if action == cfg.challenge_action:
        if state.phase is Phase.BIDDER_DECISION:
            # Bidder chooses to count.
            return _resolve(replace(state, history=history))
        challenges = state.consecutive_challenges + 1
        nxt = replace(
            state,
            consecutive_challenges=challenges,
            to_act=(actor + 1) % cfg.num_players,
            history=history,
        )
        if challenges == cfg.num_players - 1:
            if state.standing_bid.is_rebid:
                # A unanimously challenged rebid is forced to a count.
                return _resolve(nxt)
            return replace(nxt, phase=Phase.BIDDER_DECISION, to_act=state.standing_bid.bidder)
        return nxt

    # A bid (opening bid, raise, or rebid out of BidderDecision).
    is_rebid = state.phase is Phase.BIDDER_DECISION
    sb = StandingBid(index=action, bidder=actor, is_rebid=is_rebid)
    nxt = replace(
        state,
        standing_bid=sb,
        consecutive_challenges=0,
        to_act=(actor + 1) % cfg.num_players,
        history=history,
        phase=Phase.BIDDING,
    )
    if action == cfg.num_bids - 1:
        # The maximal bid cannot be raised; challenges are forced, so the
        # round resolves immediately by count.
        return _resolve(nxt)
    return nxt


def resolve_count(state: RoundState) -> tuple[CountResult, tuple[int, ...]]:
    """The count result and payouts of a resolved round."""
    if state.phase is not Phase.RESOLVED:
        raise EngineError("round not resolved yet")
    assert state.count_result is not None and state.payouts is not None
    return state.count_result, state.payouts


def action_name(config: GameConfig, action: int) -> str:
    if action == config.challenge_action:
        return "challenge"
    return f"bid{bid_of_index(config, action)}"


# --- hand-history records -------------------------------------------------

def history_record(state: RoundState, timestamp: Optional[float] = None) -> str:
    """One structured-text line describing a resolved round."""
    if state.phase is not Phase.RESOLVED:
        raise EngineError("hand-history records require a resolved round")
    cfg = state.config
    result, payouts = resolve_count(state)
    record = {
        "ts": timestamp if timestamp is not None else time.time(),
        "config": {
            "hand_length": cfg.hand_length,
            "digit_cardinality": cfg.digit_cardinality,
            "num_players": cfg.num_players,
        },
        "opener": state.opener,
        "hands": [list(h.counts) for h in state.hands],
        "actions": [
            {"player": p, "action": action_name(cfg, a)} for p, a in state.history
        ],
        "totals": list(result.totals),
        "final_bid": [result.final_bid.quantity, result.final_bid.rank],
        "final_bidder": result.final_bidder,
        "bid_holds": result.bid_holds,
        "payouts": list(payouts),
    }
    return json.dumps(record, separators=(",", ":"))


class HandHistoryWriter:
    """Append-only hand-history file, one JSON line per resolved round."""

    def __init__(self, path: str):
        self.path = path
        self._fh = open(path, "a", encoding="utf-8")

    def append(self, state: RoundState) -> None:
        self._fh.write(history_record(state) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "HandHistoryWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def playout(
    state: RoundState, actions: Iterable[int]
) -> RoundState:
    """Apply a sequence of actions; convenience for tests and replays."""
    for a in actions:
        state = apply_action(state, a)
    return state
