"""Agent interface and the built-in players.

Three agents ship with the package: a uniform-random player, a greedy
expected-value baseline, and a policy-network player that applies the
play-time action filter (3% probability floor, then snapping to a 1/32
grid) before sampling.  All agents are immutable after construction and
take their randomness from a per-call seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import neural
from .combinatorics import p_bid_holds_exact
from .engine import GameConfig, Hand, Phase, RoundState, StandingBid, bid_of_index

PROBABILITY_FLOOR = 0.03
GRID_STEPS = 32


class AgentError(ValueError):
    """Bad descriptor or an observation the agent cannot act on."""


@dataclass(frozen=True)
class Observation:
    """One player's view of a round: own hand plus public state only."""

    config: GameConfig
    hand: Hand
    position: int
    standing_bid: StandingBid | None
    consecutive_challenges: int
    phase: Phase
    history: tuple[tuple[int, int], ...]

    @classmethod
    def from_state(cls, state: RoundState, player: int) -> "Observation":
        return cls(
            config=state.config,
            hand=state.hands[player],
            position=player,
            standing_bid=state.standing_bid,
            consecutive_challenges=state.consecutive_challenges,
            phase=state.phase,
            history=state.history,
        )

    def legal_actions(self) -> tuple[int, ...]:
        nb = self.config.num_bids
        floor = -1 if self.standing_bid is None else self.standing_bid.index
        acts = list(range(floor + 1, nb))
        if self.standing_bid is not None:
            acts.append(self.config.challenge_action)
        return tuple(acts)


@dataclass(frozen=True)
class AgentPolicyOutput:
    """Distribution over the full action space plus the sampled choice."""

    probabilities: tuple[float, ...]
    action: int
    note: str = ""


def _output(config: GameConfig, probs_by_action: dict[int, float], action: int,
            note: str = "") -> AgentPolicyOutput:
    dense = [0.0] * config.num_actions
    for a, p in probs_by_action.items():
        dense[a] = p
    return AgentPolicyOutput(tuple(dense), action, note)


class Agent:
    """Base interface: act(observation, seed) -> AgentPolicyOutput."""

    name = "agent"

    def act(self, observation: Observation, seed: int) -> AgentPolicyOutput:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name

    def on_round_start(self, observation: Observation) -> None:
        """Called by match/session hosts when a new round is dealt."""

    def on_round_end(self, result, payouts) -> None:
        """Called by match/session hosts when a round resolves."""


class RandomAgent(Agent):
    """Uniform over the legal actions."""

    name = "random"

    def act(self, observation: Observation, seed: int) -> AgentPolicyOutput:
        legal = observation.legal_actions()
        if not legal:
            raise AgentError("no legal action")
        p = 1.0 / len(legal)
        action = legal[random.Random(seed).randrange(len(legal))]
        return _output(observation.config, {a: p for a in legal}, action)


def _move_ev(config: GameConfig, hand: Hand, action: int,
             standing: StandingBid | None, phase: Phase) -> Fraction:
    """Myopic expected value of a move, as if it were counted immediately."""
    side = config.num_players - 1
    if action == config.challenge_action:
        assert standing is not None
        bid = bid_of_index(config, standing.index)
        p = p_bid_holds_exact(config, bid, hand.counts[bid.rank - 1])
        if phase is Phase.BIDDER_DECISION:
            return side * (2 * p - 1)
        return 1 - 2 * p
    bid = bid_of_index(config, action)
    p = p_bid_holds_exact(config, bid, hand.counts[bid.rank - 1])
    return side * (2 * p - 1)


class BaselineAgent(Agent):
    """Greedy one-step expected value, exact binomial probabilities.

    Deterministic: ties go to the lowest bid index, with the challenge (or
    the count, at a bidder decision) ranked below every raise.
    """

    name = "baseline"

    def act(self, observation: Observation, seed: int = 0) -> AgentPolicyOutput:
        legal = observation.legal_actions()
        if not legal:
            raise AgentError("no legal action")
        cfg = observation.config
        best = None
        best_key = None
        for action in legal:
            ev = _move_ev(cfg, observation.hand, action, observation.standing_bid,
                          observation.phase)
            # tie-break order: higher EV first, then challenge last, then
            # lowest bid index
            key = (-ev, 1 if action == cfg.challenge_action else 0, action)
            if best_key is None or key < best_key:
                best, best_key = action, key
        return _output(cfg, {best: 1.0}, best, note="greedy-ev")


def filter_probabilities(probs: np.ndarray) -> np.ndarray:
    """Play-time filter: drop entries below 3%, renormalize, snap to 1/32.

    Snapping uses largest-remainder apportionment over 32 units so the
    result sums to exactly 1 and the transform is idempotent.
    """
    p = np.asarray(probs, dtype=np.float64).copy()
    p[p < PROBABILITY_FLOOR] = 0.0
    total = p.sum()
    if total <= 0.0:
        raise AgentError("no probability mass above the floor")
    p /= total
    scaled = p * GRID_STEPS
    units = np.floor(scaled).astype(int)
    remainder = GRID_STEPS - int(units.sum())
    if remainder:
        frac = scaled - units
        for idx in np.argsort(-frac, kind="stable")[:remainder]:
            units[idx] += 1
    out = units / GRID_STEPS
    # the floor can re-trip on a 1/32 crumb assigned by remainders; one
    # more pass settles it (1/32 > 3% so a second pass is always stable)
    if np.any((out > 0) & (out < PROBABILITY_FLOOR)):
        return filter_probabilities(out)
    return out


class PolicyAgent(Agent):
    """Samples from the network's masked softmax, filtered at play time."""

    name = "policy"

    def __init__(self, network: neural.PolicyNetwork, filtered: bool = True,
                 label: str = ""):
        self.network = network
        self.filtered = filtered
        self.label = label or self.name

    def describe(self) -> str:
        return self.label

    def distribution(self, observation: Observation) -> tuple[np.ndarray, tuple[int, ...]]:
        """Full-action-space distribution after masking (and filtering)."""
        if observation.config != self.network.config:
            raise AgentError(
                f"network is for {self.network.config.label()}, "
                f"observation is {observation.config.label()}"
            )
        legal = observation.legal_actions()
        features = neural.encode_observation(observation, self.network.spec)
        logits, _ = self.network.forward(features)
        mask = np.zeros(observation.config.num_actions, dtype=bool)
        mask[list(legal)] = True
        probs = neural.masked_softmax(logits, mask)
        if self.filtered:
            try:
                probs = filter_probabilities(probs)
            except AgentError:
                fallback = np.zeros_like(probs)
                fallback[max(legal, key=lambda a: logits[a])] = 1.0
                probs = fallback
        return probs, legal

    def act(self, observation: Observation, seed: int) -> AgentPolicyOutput:
        probs, legal = self.distribution(observation)
        rng = np.random.default_rng(seed)
        action = int(rng.choice(len(probs), p=probs / probs.sum()))
        note = "filtered" if self.filtered else "raw"
        return AgentPolicyOutput(tuple(probs.tolist()), action, note)


def make_agent(descriptor: str, config: GameConfig, **kwargs) -> Agent:
    """Build an agent from a descriptor string.

    Supported: "random", "baseline", "policy:<checkpoint-path>",
    "llm:<profile-name>".  "human" is handled by the callers that own an
    input channel and is rejected here.
    """
    if descriptor == "random":
        return RandomAgent()
    if descriptor == "baseline":
        return BaselineAgent()
    if descriptor.startswith("policy:"):
        path = descriptor.split(":", 1)[1]
        if not path:
            raise AgentError("policy descriptor needs a checkpoint path")
        network = neural.load_checkpoint(path, expect_config=config)
        return PolicyAgent(network, label=descriptor, **kwargs)
    if descriptor.startswith("llm:"):
        from . import llm_gateway

        profile = descriptor.split(":", 1)[1]
        if not profile:
            raise AgentError("llm descriptor needs a profile name")
        return llm_gateway.LLMAgent(llm_gateway.LLMProfile.named(profile), config)
    if descriptor == "human":
        raise AgentError("human seats are driven by a play channel, not make_agent")
    raise AgentError(f"unknown agent descriptor {descriptor!r}")
