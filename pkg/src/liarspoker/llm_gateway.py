"""Chat-completion adapter that seats a language model as a player.

The gateway sends a structured rules prompt, per-round hand and state
messages, and enforces a strict reply grammar (``BID <q> <r>`` or
``CHALLENGE``).  Replies that do not parse or are illegal trigger a
corrective re-prompt up to a retry budget, after which the seat falls back
to challenging if legal, else the lowest legal bid, and the incident is
recorded.  Context is reset (rules re-sent) every 100 rounds.

The API key is read from an environment variable at request time and is
never stored on the profile, logged, or written to any history file.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

from .agents import Agent, AgentPolicyOutput, Observation
from .engine import Bid, CountResult, GameConfig, bid_of_index, index_of_bid

BATCH_ROUNDS = 100
_REPLY_RE = re.compile(r"^\s*(?:BID\s+(\d+)\s+(\d+)|(CHALLENGE))\s*$", re.IGNORECASE)


class GatewayError(RuntimeError):
    """Transport failure that exhausted its retries."""


@dataclass(frozen=True)
class LLMProfile:
    """Connection settings for one model endpoint.

    api_key_env names the environment variable holding the key; the key
    itself is never a field here and never appears in logs.
    """

    name: str
    endpoint: str
    model: str
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 90.0
    max_retries: int = 3
    temperature: float = 1.0

    @classmethod
    def named(cls, name: str) -> "LLMProfile":
        """Look up a registered profile, else build one from environment
        variables LIARSPOKER_LLM_<NAME>_{ENDPOINT,MODEL,KEY_ENV,...}."""
        if name in _PROFILES:
            return _PROFILES[name]
        prefix = f"LIARSPOKER_LLM_{name.upper().replace('-', '_')}_"
        endpoint = os.environ.get(prefix + "ENDPOINT")
        model = os.environ.get(prefix + "MODEL")
        if not endpoint or not model:
            raise GatewayError(
                f"unknown LLM profile {name!r}: register it or set "
                f"{prefix}ENDPOINT and {prefix}MODEL"
            )
        return cls(
            name=name,
            endpoint=endpoint,
            model=model,
            api_key_env=os.environ.get(prefix + "KEY_ENV", "OPENAI_API_KEY"),
            timeout=float(os.environ.get(prefix + "TIMEOUT", "90")),
            temperature=float(os.environ.get(prefix + "TEMPERATURE", "1.0")),
        )


_PROFILES: dict[str, LLMProfile] = {}


def register_profile(profile: LLMProfile) -> None:
    _PROFILES[profile.name] = profile


class HttpTransport:
    """POSTs the messages to a chat-completions endpoint.

    One retry on transport failure; timeouts honor the profile setting.
    """

    def __call__(self, profile: LLMProfile, messages: list[dict]) -> str:
        import httpx

        key = os.environ.get(profile.api_key_env, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        body = {
            "model": profile.model,
            "messages": messages,
            "temperature": profile.temperature,
        }
        last_error = None
        for _ in range(2):
            try:
                resp = httpx.post(
                    profile.endpoint, json=body, headers=headers,
                    timeout=profile.timeout,
                )
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # timeout, connect, HTTP status, schema
                last_error = exc
        raise GatewayError(f"transport failed after retries: {last_error}")


class ScriptedTransport:
    """Deterministic transport for tests: replies from a list or callable."""

    def __init__(self, script):
        if callable(script):
            self._fn = script
        else:
            replies = iter(script)
            self._fn = lambda messages: next(replies)

    def __call__(self, profile: LLMProfile, messages: list[dict]) -> str:
        reply = self._fn(messages)
        if isinstance(reply, Exception):
            raise reply
        return reply


def build_rules_prompt(config: GameConfig) -> str:
    """Structured rules text specialized to the game parameters.

    Enables the rebid right and no other extensions, and states the reply
    grammar exactly once.
    """
    H, D, L = config.hand_length, config.digit_cardinality, config.num_players
    return f"""<rules>
<title>Liar's Poker ({config.label()})</title>
<setup>
<p>There are {L} players. Each player is dealt a hidden hand of {H} digits.
Each digit is drawn uniformly from 1..{D}. You see only your own hand.</p>
</setup>
<bidding>
<p>A bid "q of r" claims that rank r (1..{D}) appears at least q times in
total across all {L} hands combined. The opener makes any bid. Each later
bid must be strictly higher: higher quantity, or the same quantity with a
higher rank. The maximum quantity is {H * L}.</p>
<p>Instead of bidding, a player may challenge the standing bid. A round
ends in a count when every other player ({L - 1} in total) has challenged
the standing bid consecutively, or immediately when the maximal bid
({H * L} of {D}) is made.</p>
</bidding>
<rebid>
<p>When a bid is challenged by all opponents, the bidder may either accept
the count or rebid: replace the bid with any strictly higher bid. Only one
rebid is allowed per standing bid: a rebid that is itself challenged by
all opponents goes straight to the count. No other rule extensions are in
play.</p>
</rebid>
<count>
<p>At the count all hands are revealed and the bid rank is tallied. If the
claimed quantity is present, the final bidder wins {L - 1} unit(s) and
every other player loses 1. Otherwise the final bidder loses {L - 1}
unit(s) and every other player wins 1.</p>
</count>
<response-grammar>
<p>When asked to move, reply with exactly one line and nothing else:
either "BID q r" (for example "BID 4 2") or "CHALLENGE".</p>
</response-grammar>
</rules>"""


@dataclass
class LLMSession:
    """Rolling chat context for one seat across rounds."""

    profile: LLMProfile
    config: GameConfig
    transport: object = field(default_factory=HttpTransport)
    messages: list = field(default_factory=list)
    rounds_in_batch: int = 0
    rounds_played: int = 0
    incidents: list = field(default_factory=list)

    def __post_init__(self):
        self._reset_context()

    def _reset_context(self) -> None:
        self.messages = [
            {"role": "system", "content": build_rules_prompt(self.config)}
        ]
        self.rounds_in_batch = 0

    def begin_round(self, observation: Observation) -> None:
        if self.rounds_in_batch >= BATCH_ROUNDS:
            self._reset_context()
        self.rounds_in_batch += 1
        self.rounds_played += 1
        digits = " ".join(str(d) for d in observation.hand.digits())
        self._say(
            f"Round {self.rounds_played}. You are player {observation.position}. "
            f"Your hand: {digits}."
        )

    def _say(self, content: str) -> None:
        self.messages.append({"role": "user", "content": content})

    def _ask(self) -> str:
        reply = self.transport(self.profile, self.messages)
        self.messages.append({"role": "assistant", "content": reply})
        return reply

    def _log_incident(self, reply: str, note: str) -> None:
        self.incidents.append(
            f"round {self.rounds_played}: {note}: {reply[:80]!r}"
        )


def _parse_reply(config: GameConfig, reply: str) -> int | None:
    """Action id for a grammatical reply, else None (legality not checked)."""
    m = _REPLY_RE.match(reply or "")
    if not m:
        return None
    if m.group(3):
        return config.challenge_action
    q, r = int(m.group(1)), int(m.group(2))
    if not (1 <= q <= config.max_quantity and 1 <= r <= config.digit_cardinality):
        return None
    return index_of_bid(config, Bid(q, r))


def _state_message(observation: Observation) -> str:
    cfg = observation.config
    sb = observation.standing_bid
    if sb is None:
        situation = "No standing bid; you open."
    else:
        bid = bid_of_index(cfg, sb.index)
        tag = " (a rebid)" if sb.is_rebid else ""
        situation = (
            f"Standing bid: {bid.quantity} of {bid.rank}{tag}, "
            f"made by player {sb.bidder}."
        )
        if observation.phase.name == "BIDDER_DECISION":
            situation += (
                " All opponents challenged your bid: reply CHALLENGE to "
                "accept the count, or BID q r to rebid higher."
            )
    return situation + ' Your move: "BID q r" or "CHALLENGE".'


def llm_next_move(session: LLMSession, observation: Observation) -> int:
    """One legal action for the LLM seat, whatever the model replies.

    Grammar or legality failures re-prompt with a reminder up to
    max_retries; the final fallback challenges if legal, else plays the
    lowest legal bid.
    """
    legal = observation.legal_actions()
    cfg = observation.config
    session._say(_state_message(observation))
    attempts = session.profile.max_retries + 1
    transport_failures = 0
    for attempt in range(attempts):
        try:
            reply = session._ask()
        except GatewayError as exc:
            transport_failures += 1
            session._log_incident(str(exc), "transport failure")
            if transport_failures >= attempts:
                raise  # outage: every attempt failed to reach the endpoint
            continue
        action = _parse_reply(cfg, reply)
        if action is not None and action in legal:
            return action
        note = "unparseable reply" if action is None else "illegal move"
        session._log_incident(reply, note)
        if attempt < attempts - 1:
            session._say(
                "That move is not allowed. Reply with exactly one line: "
                '"BID q r" with a bid strictly higher than the standing bid, '
                'or "CHALLENGE".'
            )
    fallback = (
        cfg.challenge_action if cfg.challenge_action in legal else min(legal)
    )
    session._log_incident("", "retries exhausted; fallback played")
    return fallback


def announce_result(
    session: LLMSession, result: CountResult, payouts: tuple[int, ...]
) -> None:
    """Append the end-of-round announcement to the context."""
    cfg = session.config
    bid = result.final_bid
    totals = ", ".join(
        f"rank {r + 1}: {n}" for r, n in enumerate(result.totals)
    )
    outcome = "the bid held" if result.bid_holds else "the challenge succeeded"
    winners = [str(p) for p, pay in enumerate(payouts) if pay > 0]
    session._say(
        f"Round over. Final bid {bid.quantity} of {bid.rank} by player "
        f"{result.final_bidder}; counts: {totals}; {outcome}. "
        f"Winner(s): player {', '.join(winners)}. "
        f"Payouts: {list(payouts)}."
    )


class LLMAgent(Agent):
    """Agent adapter around an LLMSession.

    Hosts (the match harness and the play service) drive round boundaries
    through on_round_start/on_round_end.
    """

    name = "llm"

    def __init__(self, profile: LLMProfile, config: GameConfig, transport=None):
        kwargs = {"transport": transport} if transport is not None else {}
        self.session = LLMSession(profile=profile, config=config, **kwargs)
        self.label = f"llm:{profile.name}"

    def describe(self) -> str:
        return self.label

    def on_round_start(self, observation: Observation) -> None:
        self.session.begin_round(observation)

    def on_round_end(self, result, payouts) -> None:
        announce_result(self.session, result, tuple(payouts))

    def act(self, observation: Observation, seed: int = 0) -> AgentPolicyOutput:
        action = llm_next_move(self.session, observation)
        probs = [0.0] * observation.config.num_actions
        probs[action] = 1.0
        return AgentPolicyOutput(tuple(probs), action, note="llm")
