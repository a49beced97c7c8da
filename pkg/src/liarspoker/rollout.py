"""Batched round runner with incrementally maintained feature vectors.

Self-play collection and best-response training both step many rounds in
lockstep and need the network encoding of each information state at every
decision point.  Rebuilding the encoding from the history each move is
quadratic in round length, so this runner updates the public feature block
in place as actions are applied and assembles per-actor rows on demand.
Row layout matches ``neural.encode_observation`` in canonical-counts mode.
"""

from __future__ import annotations

import numpy as np

from ._fast import FastRound
from .engine import GameConfig, Hand, Phase, StandingBid

_PHASES = {0: Phase.BIDDING, 1: Phase.BIDDER_DECISION, 2: Phase.RESOLVED}


class LockstepGames:
    """n concurrent rounds of one game config, feature-tracked."""

    def __init__(self, config: GameConfig, n: int):
        self.config = config
        self.n = n
        D, L, nb = config.digit_cardinality, config.num_players, config.num_bids
        self.num_actions = config.num_actions
        self.rounds = [FastRound(config.hand_length, D, L) for _ in range(n)]
        self.hand_blocks = np.zeros((n, L, D), dtype=np.float64)
        self.pos_eye = np.eye(L, dtype=np.float64)
        self.pub = np.zeros((n, 2 * L * nb + 2), dtype=np.float64)
        self._ch_off = L * nb
        self._rebid_off = 2 * L * nb
        self.histories: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        self.input_size = D + L + 2 * L * nb + 2

    def deal(self, i: int, seed: int, opener: int) -> None:
        g = self.rounds[i]
        g.deal(seed, opener)
        flat = g.hands
        D = self.config.digit_cardinality
        for p in range(self.config.num_players):
            self.hand_blocks[i, p] = flat[p * D : (p + 1) * D]
        self.pub[i] = 0.0
        self.histories[i].clear()

    def set_hands(self, i: int, counts, opener: int) -> None:
        g = self.rounds[i]
        g.set_hands(counts)
        g.reset(opener)
        flat = g.hands
        D = self.config.digit_cardinality
        for p in range(self.config.num_players):
            self.hand_blocks[i, p] = flat[p * D : (p + 1) * D]
        self.pub[i] = 0.0
        self.histories[i].clear()

    # --- features -----------------------------------------------------

    def feature_rows(self, indices, players=None) -> np.ndarray:
        """Feature matrix for the given games, from the given players'
        points of view (default: each game's player to act)."""
        if players is None:
            players = [self.rounds[i].to_act for i in indices]
        return np.concatenate(
            [
                self.hand_blocks[indices, players],
                self.pos_eye[players],
                self.pub[indices],
            ],
            axis=1,
        )

    def legal_masks(self, indices) -> np.ndarray:
        nb = self.config.num_bids
        masks = np.zeros((len(indices), self.num_actions), dtype=bool)
        for row, i in enumerate(indices):
            g = self.rounds[i]
            masks[row, g.standing + 1 : nb] = True
            if g.standing >= 0:
                masks[row, nb] = True
        return masks

    # --- stepping -------------------------------------------------------

    def apply(self, i: int, action: int) -> None:
        g = self.rounds[i]
        nb = self.config.num_bids
        actor = g.to_act
        decision = g.phase == 1
        standing_before = g.standing
        g.apply(action)
        self.histories[i].append((actor, action))
        if action == nb:
            self.pub[i, self._ch_off + actor * nb + standing_before] = 1.0
        else:
            self.pub[i, actor * nb + action] = 1.0
            self.pub[i, self._rebid_off] = 1.0 if decision else 0.0

    # --- generic-agent bridge --------------------------------------------

    def observation(self, i: int, player: int | None = None):
        """Immutable Observation for agents that work from domain objects."""
        from .agents import Observation

        g = self.rounds[i]
        player = g.to_act if player is None else player
        D = self.config.digit_cardinality
        flat = g.hands
        standing = None
        if g.standing >= 0:
            standing = StandingBid(g.standing, g.bidder, bool(g.is_rebid))
        return Observation(
            config=self.config,
            hand=Hand(tuple(flat[player * D : (player + 1) * D])),
            position=player,
            standing_bid=standing,
            consecutive_challenges=g.cc,
            phase=_PHASES[g.phase],
            history=tuple(self.histories[i]),
        )
