"""Pure-Python round-stepping kernel (fallback for the compiled core).

Semantics mirror ``liarspoker.engine`` exactly (property-tested against it);
this twin trades the engine's immutable, history-carrying states for a
mutable struct that the hot loops (self-play collection, rollout audits,
best-response search) can step in place.  The compiled Cython twin in
``_core.pyx`` implements the same API and must stay behaviorally identical.
"""

from __future__ import annotations

BACKEND = "pure"

PHASE_BIDDING = 0
PHASE_DECISION = 1
PHASE_RESOLVED = 2

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One step of the splitmix64 generator: (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class FastRound:
    """Mutable Liar's Poker round; fields are plain ints for cheap access.

    hands is a flat list of L*D rank counts; ``standing`` is the standing
    bid index or -1; ``bid_holds``/``payout_unit`` are valid once resolved.
    """

    __slots__ = (
        "H", "D", "L", "num_bids", "challenge",
        "hands", "opener", "phase", "standing", "bidder", "is_rebid",
        "cc", "to_act", "moves", "bid_holds", "rebid_used",
    )

    def __init__(self, hand_length: int, digit_cardinality: int, num_players: int):
        self.H = hand_length
        self.D = digit_cardinality
        self.L = num_players
        self.num_bids = hand_length * num_players * digit_cardinality
        self.challenge = self.num_bids
        self.hands = [0] * (num_players * digit_cardinality)
        self.opener = 0
        self.reset(0)

    def reset(self, opener: int) -> None:
        """Clear bidding state; hands are left untouched."""
        self.opener = opener
        self.phase = PHASE_BIDDING
        self.standing = -1
        self.bidder = -1
        self.is_rebid = False
        self.cc = 0
        self.to_act = opener
        self.moves = 0
        self.bid_holds = False
        self.rebid_used = 0  # bitmask over players

    def deal(self, seed: int, opener: int = 0) -> None:
        """Deal uniform hands via splitmix64 and reset to `opener`."""
        hands = self.hands
        for i in range(len(hands)):
            hands[i] = 0
        state = seed & _MASK64
        for p in range(self.L):
            base = p * self.D
            for _ in range(self.H):
                state, z = splitmix64(state)
                hands[base + z % self.D] += 1
        self.reset(opener)

    def set_hands(self, counts) -> None:
        """counts: flat iterable of L*D rank counts."""
        counts = list(counts)
        if len(counts) != self.L * self.D:
            raise ValueError("flat hand counts must have L*D entries")
        self.hands = counts

    # --- legality ---------------------------------------------------------

    def min_bid(self) -> int:
        return self.standing + 1

    def challenge_legal(self) -> bool:
        return self.standing >= 0

    def num_legal(self) -> int:
        n = self.num_bids - self.standing - 1
        if self.standing >= 0:
            n += 1
        return n

    def legal_actions(self) -> list[int]:
        acts = list(range(self.standing + 1, self.num_bids))
        if self.standing >= 0:
            acts.append(self.challenge)
        return acts

    def fill_legal_mask(self, mask) -> None:
        """Set mask[a] = 1 for legal a, 0 otherwise (len num_bids + 1)."""
        for a in range(self.num_bids + 1):
            mask[a] = 0
        for a in range(self.standing + 1, self.num_bids):
            mask[a] = 1
        if self.standing >= 0:
            mask[self.challenge] = 1

    # --- stepping ---------------------------------------------------------

    def apply(self, action: int) -> None:
        if self.phase == PHASE_RESOLVED:
            raise ValueError("round already resolved")
        if action == self.challenge:
            if self.standing < 0:
                raise ValueError("no standing bid to challenge")
            if self.phase == PHASE_DECISION:
                self.moves += 1
                self._resolve()
                return
            self.moves += 1
            self.cc += 1
            self.to_act = (self.to_act + 1) % self.L
            if self.cc == self.L - 1:
                if self.is_rebid:
                    self._resolve()
                else:
                    self.phase = PHASE_DECISION
                    self.to_act = self.bidder
            return
        if not self.standing < action < self.num_bids:
            if action >= self.num_bids or action < 0:
                raise ValueError(f"action {action} out of range")
            raise ValueError(f"bid {action} does not beat standing {self.standing}")
        rebid = self.phase == PHASE_DECISION
        if rebid:
            self.rebid_used |= 1 << self.to_act
        self.moves += 1
        self.standing = action
        self.bidder = self.to_act
        self.is_rebid = rebid
        self.cc = 0
        self.phase = PHASE_BIDDING
        self.to_act = (self.to_act + 1) % self.L
        if action == self.num_bids - 1:
            self._resolve()

    def _resolve(self) -> None:
        q, r = divmod(self.standing, self.D)
        q += 1
        total = 0
        for p in range(self.L):
            total += self.hands[p * self.D + r]
        self.bid_holds = total >= q
        self.phase = PHASE_RESOLVED

    # --- outcome ----------------------------------------------------------

    def rank_total(self, rank: int) -> int:
        """Global count of `rank` (1-based) across all hands."""
        return sum(self.hands[p * self.D + rank - 1] for p in range(self.L))

    def payout(self, player: int) -> int:
        if self.phase != PHASE_RESOLVED:
            raise ValueError("round not resolved")
        unit = 1 if self.bid_holds else -1
        return unit * (self.L - 1) if player == self.bidder else -unit

    def payouts(self) -> list[int]:
        return [self.payout(p) for p in range(self.L)]


def audit_rollouts(
    hand_length: int,
    digit_cardinality: int,
    num_players: int,
    n_rounds: int,
    seed: int,
) -> dict:
    """Play n uniformly random rounds, checking engine invariants on the fly.

    Checks per round: payouts sum to zero with |payout| = 1 except the final
    bidder's L-1; standing-bid indices strictly increase; at most L-1
    challenges between consecutive bids; every applied action is legal.
    Returns counts of rounds, moves, and violations (0 everywhere on a
    correct engine), plus the max observed round length.
    """
    game = FastRound(hand_length, digit_cardinality, num_players)
    L = num_players
    num_bids = game.num_bids
    rng = (seed ^ 0xD1B54A32D192ED03) & _MASK64
    violations = 0
    total_moves = 0
    max_moves = 0
    total_payout_abs = 0
    for rnd in range(n_rounds):
        game.deal(seed + rnd, opener=rnd % L)
        last_bid = -1
        challenges_since_bid = 0
        while game.phase != PHASE_RESOLVED:
            lo = game.min_bid()
            n_raises = num_bids - lo
            n_legal = n_raises + (1 if game.challenge_legal() else 0)
            if n_legal <= 0:
                violations += 1
                break
            rng, z = splitmix64(rng)
            pick = z % n_legal
            action = lo + pick if pick < n_raises else game.challenge
            if action == game.challenge:
                if game.phase != PHASE_DECISION:
                    challenges_since_bid += 1
                    if challenges_since_bid > L - 1:
                        violations += 1
            else:
                if action <= last_bid:
                    violations += 1
                last_bid = action
                challenges_since_bid = 0
            game.apply(action)
        total_moves += game.moves
        if game.moves > max_moves:
            max_moves = game.moves
        pay = game.payouts()
        if sum(pay) != 0:
            violations += 1
        for p in range(L):
            expect = L - 1 if p == game.bidder else 1
            if abs(pay[p]) != expect:
                violations += 1
        total_payout_abs += abs(pay[game.bidder])
    return {
        "backend": BACKEND,
        "rounds": n_rounds,
        "moves": total_moves,
        "max_round_moves": max_moves,
        "violations": violations,
    }
