"""Exact combinatorics of Liar's Poker: bid probabilities and state space.

Bid-sequence counts and maximal round lengths are computed with a memoized
dynamic program over the round's public phase variables.  The subtree below
any point of a round depends only on (standing bid index, rebid flag,
consecutive challenges, phase): turn order is deterministic, so player
identity never affects the count.  All counting is exact big-integer
arithmetic (counts reach 10^217 for the full 8x10 4-player game).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .engine import (
    Bid,
    GameConfig,
    Hand,
    Phase,
    apply_action,
    legal_actions,
    new_round,
)


# --- bid probabilities ------------------------------------------------------

@lru_cache(maxsize=None)
def _binomial_tail(n: int, d: int, k: int) -> Fraction:
    """P(Binomial(n, 1/d) >= k), exact."""
    if k <= 0:
        return Fraction(1)
    if k > n:
        return Fraction(0)
    total = Fraction(0)
    for j in range(k, n + 1):
        total += Fraction(math.comb(n, j) * (d - 1) ** (n - j), d**n)
    return total


def p_bid_holds_exact(config: GameConfig, bid: Bid, own_count: int) -> Fraction:
    """Exact probability that `bid` holds given `own_count` copies in hand.

    The unseen digits are the other (L-1) hands: Binomial((L-1)*H, 1/D)
    copies of the bid rank, of which at least quantity - own_count are
    needed.
    """
    if not 0 <= own_count <= config.hand_length:
        raise ValueError(f"own_count {own_count} outside [0, {config.hand_length}]")
    n = (config.num_players - 1) * config.hand_length
    return _binomial_tail(n, config.digit_cardinality, bid.quantity - own_count)


def p_bid_holds(config: GameConfig, bid: Bid, own_count: int) -> float:
    return float(p_bid_holds_exact(config, bid, own_count))


def probability_table(config: GameConfig) -> list[list[float]]:
    """Cumulative conditional probabilities: rows y = 0..H, columns q = 1..H*L."""
    return [
        [p_bid_holds(config, Bid(q, 1), y) for q in range(1, config.max_quantity + 1)]
        for y in range(config.hand_length + 1)
    ]


# --- hand counting ----------------------------------------------------------

def canonical_hand_count(config: GameConfig) -> tuple[int, int]:
    """(per-player, joint) counts of canonical hands (multisets of ranks)."""
    per_player = math.comb(config.hand_length + config.digit_cardinality - 1, config.hand_length)
    return per_player, per_player**config.num_players


def hand_category(hand: Hand) -> int:
    """Copies of the modal rank: 1 = all distinct, 2 = pair, 3 = trips, ..."""
    return max(hand.counts)


def enumerate_canonical_hands(config: GameConfig) -> list[Hand]:
    """All canonical hands, lexicographic in count vectors."""
    hands: list[Hand] = []

    def rec(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            hands.append(Hand(tuple(prefix + [remaining])))
            return
        for c in range(remaining + 1):
            rec(prefix + [c], remaining - c, slots - 1)

    rec([], config.hand_length, config.digit_cardinality)
    return hands


def hand_probability(config: GameConfig, hand: Hand) -> Fraction:
    """Multinomial probability of dealing a given canonical hand."""
    h, d = config.hand_length, config.digit_cardinality
    ways = math.factorial(h)
    for c in hand.counts:
        ways //= math.factorial(c)
    return Fraction(ways, d**h)


# --- bid-sequence DP --------------------------------------------------------

@lru_cache(maxsize=None)
def _count_sequences_dp(config: GameConfig) -> int:
    """Number of distinct terminal action sequences of one round.

    A sequence element is any chosen action: bid, challenge, or the bidder's
    explicit count decision.  Counts forced by a challenged rebid or by the
    maximal bid are not elements.  The DP key is (standing bid index, rebid
    flag, consecutive challenges, phase); the recurrence is evaluated
    bottom-up from the maximal bid, carrying suffix sums over all stronger
    bids, with exact big-integer arithmetic.
    """
    n = config.num_bids
    need = config.num_players - 1  # challenges required for unanimity

    # Suffix sums over raises to any j > i.  A raise to the maximal bid is
    # terminal by itself, which seeds both sums at j = n-1.
    sum_fresh = 1  # into bidding(j, is_rebid=False, c=0)
    sum_rebid = 1  # into bidding(j, is_rebid=True,  c=0)

    for i in range(n - 2, -1, -1):
        # BidderDecision at bid i: explicit count, or rebid to some j > i.
        dec_count = 1 + sum_rebid
        for is_rebid in (False, True):
            # Challenge branch at unanimity: a challenged rebid forces the
            # count (not an element); otherwise the bidder decides.
            ch_count = 1 if is_rebid else dec_count
            for _c in range(need):
                w = sum_fresh + ch_count
                ch_count = w  # one more pre-unanimity challenge
            if is_rebid:
                sum_rebid += w
            else:
                fresh_i = w
        sum_fresh += fresh_i

    # Root: the opener chooses any bid (sums now cover all j > -1).
    return sum_fresh


@lru_cache(maxsize=None)
def _max_length_dp(config: GameConfig) -> int:
    """Longest round under the reported-length convention.

    The state-space table measures the longest possible round with two
    conventions on top of raw sequence length: a raise only extends the
    longest line when made over a bid with no pending challenge (challenge
    runs, once begun, are counted through to unanimity), and the forced
    challenge chain that ends a rebid counts as the single decisive
    challenge.  Explicit count decisions count as one element; forced counts
    count as zero.  This reproduces the closed form (num_bids/2)*(L+1) for
    even num_bids and ((num_bids-1)/2)*(L+1)+1 for odd.
    """
    n = config.num_bids
    need = config.num_players - 1

    # Aggregates over raises to any j > i; maximal raise is terminal.
    max_fresh = 1  # 1 + F(j): continuation after fresh bid j
    max_rebid = 1  # 1 + R(j): continuation after rebid j

    for i in range(n - 2, -1, -1):
        dec = max(1, max_rebid)  # count now, or rebid
        f_i = max(max_fresh, need + dec)  # raise, or challenge to unanimity
        r_i = max(max_fresh, 1)  # raise, or the decisive challenge
        max_fresh = max(max_fresh, 1 + f_i)
        max_rebid = max(max_rebid, 1 + r_i)

    return max_fresh


def count_bid_sequences(config: GameConfig) -> int:
    return _count_sequences_dp(config)


def max_round_length(config: GameConfig) -> int:
    return _max_length_dp(config)


def _dfs_root(config: GameConfig):
    # Hands do not affect legality, so any fixed deal works.
    hands = [_uniformish_hand(config) for _ in range(config.num_players)]
    return new_round(config, hands=hands, opener=0)


def count_sequences_dfs(config: GameConfig) -> int:
    """Brute-force oracle for ``count_bid_sequences`` through the engine.

    History holds every chosen element (incl. explicit counts), matching the
    DP's sequence convention.  Only feasible for tiny configs.
    """
    root = _dfs_root(config)
    count = 0

    def rec(state) -> None:
        nonlocal count
        if state.phase is Phase.RESOLVED:
            count += 1
            return
        for a in legal_actions(state):
            rec(apply_action(state, a))

    rec(root)
    return count


def max_length_dfs(config: GameConfig) -> int:
    """Brute-force oracle for ``max_round_length`` through the engine.

    Enumerates engine playouts restricted to the reported-length convention
    (see ``_max_length_dp``): raises only over unchallenged bids, and a
    rebid's forced challenge chain traversed as one decisive element.
    """
    root = _dfs_root(config)
    challenge = config.challenge_action
    need = config.num_players - 1
    longest = 0

    def rec(state, measured: int) -> None:
        nonlocal longest
        if state.phase is Phase.RESOLVED:
            longest = max(longest, measured)
            return
        for a in legal_actions(state):
            if a == challenge:
                if state.phase is Phase.BIDDING and state.standing_bid.is_rebid:
                    # Decisive challenge: the rest of the chain is forced.
                    s = state
                    for _ in range(need - state.consecutive_challenges):
                        s = apply_action(s, challenge)
                    rec(s, measured + 1)
                else:
                    rec(apply_action(state, a), measured + 1)
            elif (
                state.standing_bid is None
                or state.consecutive_challenges == 0
                or state.phase is Phase.BIDDER_DECISION
            ):
                rec(apply_action(state, a), measured + 1)

    rec(root, 0)
    return longest


def _uniformish_hand(config: GameConfig) -> Hand:
    counts = [0] * config.digit_cardinality
    for i in range(config.hand_length):
        counts[i % config.digit_cardinality] += 1
    return Hand(tuple(counts))


# --- state-space report -----------------------------------------------------

@dataclass(frozen=True)
class StateSpaceRow:
    config: GameConfig
    canonical_hands_per_player: int
    canonical_hands_joint: int
    bid_sequences: int
    max_round_length: int
    state_space_exponent: int  # round(log10(joint hands x sequences))


def log10_floor(n: int) -> int:
    if n <= 0:
        raise ValueError("log10 of non-positive value")
    return len(str(n)) - 1


def log10_round(n: int) -> int:
    s = str(n)
    lead = float(s[:15]) / 10 ** min(len(s), 15)  # mantissa in [0.1, 1)
    return round(len(s) + math.log10(lead))


def state_space_row(config: GameConfig) -> StateSpaceRow:
    per_player, joint = canonical_hand_count(config)
    sequences = _count_sequences_dp(config)
    longest = _max_length_dp(config)
    return StateSpaceRow(
        config=config,
        canonical_hands_per_player=per_player,
        canonical_hands_joint=joint,
        bid_sequences=sequences,
        max_round_length=longest,
        state_space_exponent=log10_round(joint * sequences),
    )


def state_space_report(configs: Iterable[GameConfig]) -> list[StateSpaceRow]:
    return [state_space_row(c) for c in configs]


def format_report(rows: Sequence[StateSpaceRow], fmt: str = "table") -> str:
    header = [
        "game",
        "canonical_hands",
        "bid_sequences",
        "max_round_length",
        "state_space",
    ]
    body = [
        [
            r.config.label(),
            f"10^{log10_round(r.canonical_hands_joint)}",
            f"10^{log10_round(r.bid_sequences)}",
            str(r.max_round_length),
            f"10^{r.state_space_exponent}",
        ]
        for r in rows
    ]
    if fmt == "csv":
        return "\n".join(",".join(row) for row in [header] + body)
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = []
    for row in [header] + body:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines)
