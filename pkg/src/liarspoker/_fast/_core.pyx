# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled round-stepping kernel.

Behaviorally identical to ``liarspoker._fast.pure``; see that module for the
semantics.  Any change here must be mirrored there and re-verified by the
backend equivalence tests.
"""

from libc.stdlib cimport malloc, free

BACKEND = "compiled"

PHASE_BIDDING = 0
PHASE_DECISION = 1
PHASE_RESOLVED = 2

cdef unsigned long long _splitmix64(unsigned long long *state) nogil:
    cdef unsigned long long z
    state[0] += <unsigned long long>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
    return z ^ (z >> 31)


def splitmix64(state):
    """One step of the splitmix64 generator: (new_state, output)."""
    cdef unsigned long long s = <unsigned long long>(state & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long out = _splitmix64(&s)
    return s, out


cdef class FastRound:
    """Mutable Liar's Poker round; see the pure twin for field semantics."""

    cdef public int H, D, L, num_bids, challenge
    cdef public int opener, phase, standing, bidder, cc, to_act, moves
    cdef public int rebid_used
    cdef public bint is_rebid, bid_holds
    cdef int *_hands

    def __cinit__(self, int hand_length, int digit_cardinality, int num_players):
        self.H = hand_length
        self.D = digit_cardinality
        self.L = num_players
        self.num_bids = hand_length * num_players * digit_cardinality
        self.challenge = self.num_bids
        self._hands = <int *>malloc(num_players * digit_cardinality * sizeof(int))
        if self._hands == NULL:
            raise MemoryError()
        cdef int i
        for i in range(num_players * digit_cardinality):
            self._hands[i] = 0
        self.opener = 0
        self.reset(0)

    def __dealloc__(self):
        if self._hands != NULL:
            free(self._hands)

    @property
    def hands(self):
        return [self._hands[i] for i in range(self.L * self.D)]

    cpdef void reset(self, int opener):
        self.opener = opener
        self.phase = PHASE_BIDDING
        self.standing = -1
        self.bidder = -1
        self.is_rebid = False
        self.cc = 0
        self.to_act = opener
        self.moves = 0
        self.bid_holds = False
        self.rebid_used = 0

    cpdef void deal(self, object seed, int opener=0):
        cdef unsigned long long state = <unsigned long long>(seed & 0xFFFFFFFFFFFFFFFF)
        cdef int i, p
        for i in range(self.L * self.D):
            self._hands[i] = 0
        for p in range(self.L):
            for i in range(self.H):
                self._hands[p * self.D + <int>(_splitmix64(&state) % <unsigned long long>self.D)] += 1
        self.reset(opener)

    def set_hands(self, counts):
        counts = list(counts)
        if len(counts) != self.L * self.D:
            raise ValueError("flat hand counts must have L*D entries")
        cdef int i
        for i in range(self.L * self.D):
            self._hands[i] = counts[i]

    # --- legality ---------------------------------------------------------

    cpdef int min_bid(self):
        return self.standing + 1

    cpdef bint challenge_legal(self):
        return self.standing >= 0

    cpdef int num_legal(self):
        cdef int n = self.num_bids - self.standing - 1
        if self.standing >= 0:
            n += 1
        return n

    def legal_actions(self):
        acts = list(range(self.standing + 1, self.num_bids))
        if self.standing >= 0:
            acts.append(self.challenge)
        return acts

    def fill_legal_mask(self, mask):
        cdef int a
        for a in range(self.num_bids + 1):
            mask[a] = 0
        for a in range(self.standing + 1, self.num_bids):
            mask[a] = 1
        if self.standing >= 0:
            mask[self.challenge] = 1

    # --- stepping ---------------------------------------------------------

    cpdef void apply(self, int action) except *:
        cdef bint rebid
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
        if action >= self.num_bids or action < 0:
            raise ValueError(f"action {action} out of range")
        if action <= self.standing:
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

    cdef void _resolve(self):
        cdef int q = self.standing // self.D + 1
        cdef int r = self.standing % self.D
        cdef int total = 0
        cdef int p
        for p in range(self.L):
            total += self._hands[p * self.D + r]
        self.bid_holds = total >= q
        self.phase = PHASE_RESOLVED

    # --- outcome ----------------------------------------------------------

    def rank_total(self, int rank):
        cdef int total = 0
        cdef int p
        for p in range(self.L):
            total += self._hands[p * self.D + rank - 1]
        return total

    cpdef int payout(self, int player) except? -9999:
        if self.phase != PHASE_RESOLVED:
            raise ValueError("round not resolved")
        cdef int unit = 1 if self.bid_holds else -1
        return unit * (self.L - 1) if player == self.bidder else -unit

    def payouts(self):
        return [self.payout(p) for p in range(self.L)]


def audit_rollouts(int hand_length, int digit_cardinality, int num_players,
                   int n_rounds, object seed):
    """Compiled twin of ``pure.audit_rollouts``; same RNG, same checks."""
    cdef FastRound game = FastRound(hand_length, digit_cardinality, num_players)
    cdef int L = num_players
    cdef int num_bids = game.num_bids
    cdef unsigned long long base_seed = <unsigned long long>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long rng = base_seed ^ <unsigned long long>0xD1B54A32D192ED03
    cdef long long violations = 0
    cdef long long total_moves = 0
    cdef int max_moves = 0
    cdef int rnd, lo, n_raises, n_legal, action, pick, p, expect, pay, total_pay
    cdef int last_bid, challenges_since_bid
    for rnd in range(n_rounds):
        game.deal(<object>((base_seed + <unsigned long long>rnd) & 0xFFFFFFFFFFFFFFFF),
                  opener=rnd % L)
        last_bid = -1
        challenges_since_bid = 0
        while game.phase != PHASE_RESOLVED:
            lo = game.standing + 1
            n_raises = num_bids - lo
            n_legal = n_raises + (1 if game.standing >= 0 else 0)
            if n_legal <= 0:
                violations += 1
                break
            pick = <int>(_splitmix64(&rng) % <unsigned long long>n_legal)
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
        total_pay = 0
        for p in range(L):
            pay = game.payout(p)
            total_pay += pay
            expect = L - 1 if p == game.bidder else 1
            if pay != expect and pay != -expect:
                violations += 1
        if total_pay != 0:
            violations += 1
    return {
        "backend": BACKEND,
        "rounds": n_rounds,
        "moves": total_moves,
        "max_round_moves": max_moves,
        "violations": violations,
    }
