"""Live play sessions: lifecycle, redacted views, eventing, HTTP API.

A session seats any mix of humans, built-in agents, and LLM seats.  Agent
seats act automatically whenever it is their turn; human seats submit
actions through the API.  Every state change appends an event with a
gapless per-session sequence number; views are redacted so a seat never
sees another seat's hand before the showdown.  Sessions live in memory;
resolved rounds are appended to an optional hand-history file.

With no human seat at the table, auto-advance pauses after each showdown
and resumes on the next action request, so an all-agent session cannot
spin unattended.
"""

from __future__ import annotations

import itertools
import json
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .agents import Agent, Observation, make_agent
from .engine import (
    Bid,
    EngineError,
    GameConfig,
    HandHistoryWriter,
    Phase,
    apply_action,
    bid_of_index,
    index_of_bid,
    new_round,
    resolve_count,
)

SCHEMA_VERSION = 1
HUMAN = "human"


class ServiceError(ValueError):
    pass


class UnknownSession(ServiceError):
    pass


class NotYourTurn(ServiceError):
    pass


class IllegalAction(ServiceError):
    def __init__(self, message: str, legal: list[dict]):
        super().__init__(message)
        self.legal = legal


def _action_to_wire(config: GameConfig, action: int) -> dict:
    if action == config.challenge_action:
        return {"type": "challenge"}
    bid = bid_of_index(config, action)
    return {"type": "bid", "q": bid.quantity, "r": bid.rank}


def _action_from_wire(config: GameConfig, payload: dict) -> int:
    kind = payload.get("type")
    if kind == "challenge":
        return config.challenge_action
    if kind == "bid":
        try:
            bid = Bid(int(payload["q"]), int(payload["r"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"malformed bid action: {exc}") from exc
        try:
            return index_of_bid(config, bid)
        except EngineError as exc:
            raise ServiceError(str(exc)) from exc
    raise ServiceError(f"unknown action type {kind!r}")


@dataclass
class Session:
    session_id: str
    config: GameConfig
    seats: tuple[str, ...]
    agents: dict[int, Agent]
    opener_rule: str
    seed: int
    state: object = None
    round_index: int = 0
    ledger: list[int] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    last_result: dict | None = None
    status: str = "live"
    lock: threading.RLock = field(default_factory=threading.RLock)
    changed: threading.Condition = None
    history: HandHistoryWriter | None = None
    _seq: itertools.count = field(default_factory=lambda: itertools.count(1))

    def __post_init__(self):
        self.changed = threading.Condition(self.lock)

    @property
    def has_human(self) -> bool:
        return HUMAN in self.seats

    def emit(self, kind: str, payload: dict) -> None:
        self.events.append({"seq": next(self._seq), "kind": kind, "payload": payload})
        self.changed.notify_all()


class SessionManager:
    """Owns all sessions; every public method is safe to call concurrently."""

    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    # --- lifecycle ------------------------------------------------------

    def create_session(
        self,
        config: GameConfig,
        seats: list[str],
        opener_rule: str = "rotate",
        seed: int = 0,
        history_path: str | None = None,
        agent_overrides: dict[int, Agent] | None = None,
    ) -> str:
        if len(seats) != config.num_players:
            raise ServiceError(
                f"need {config.num_players} seats, got {len(seats)}"
            )
        if opener_rule not in ("rotate", "final_bidder"):
            raise ServiceError(f"unknown opener rule {opener_rule!r}")
        agents: dict[int, Agent] = {}
        for i, desc in enumerate(seats):
            if desc == HUMAN:
                continue
            if agent_overrides and i in agent_overrides:
                agents[i] = agent_overrides[i]
            else:
                try:
                    agents[i] = make_agent(desc, config)
                except Exception as exc:
                    raise ServiceError(f"seat {i}: {exc}") from exc
        session = Session(
            session_id=uuid.uuid4().hex[:12],
            config=config,
            seats=tuple(seats),
            agents=agents,
            opener_rule=opener_rule,
            seed=seed,
            ledger=[0] * config.num_players,
            history=HandHistoryWriter(history_path) if history_path else None,
        )
        with self._lock:
            self._sessions[session.session_id] = session
        with session.lock:
            self._deal(session, opener=0)
            self._auto_advance(session)
        return session.session_id

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(f"no session {session_id!r}") from None

    def close(self, session_id: str) -> None:
        session = self.get(session_id)
        with session.lock:
            session.status = "closed"
            if session.history:
                session.history.close()
            session.emit("closed", {})

    # --- internals (session lock held) -----------------------------------

    def _deal(self, session: Session, opener: int) -> None:
        session.round_index += 1
        session.state = new_round(
            session.config,
            seed=session.seed * 1_000_003 + session.round_index,
            opener=opener,
        )
        session.emit(
            "round_start",
            {"round": session.round_index, "opener": opener},
        )
        session.emit("turn", {"seat": session.state.to_act})
        for seat, agent in session.agents.items():
            agent.on_round_start(Observation.from_state(session.state, seat))

    def _resolve(self, session: Session) -> None:
        state = session.state
        result, payouts = resolve_count(state)
        for seat, pay in enumerate(payouts):
            session.ledger[seat] += pay
        if session.history:
            session.history.append(state)
        bid = result.final_bid
        session.last_result = {
            "round": session.round_index,
            "hands": [list(h.digits()) for h in state.hands],
            "totals": list(result.totals),
            "final_bid": {"q": bid.quantity, "r": bid.rank},
            "final_bidder": result.final_bidder,
            "bid_holds": result.bid_holds,
            "payouts": list(payouts),
            "ledger": list(session.ledger),
        }
        session.emit("resolution", dict(session.last_result))
        for agent in session.agents.values():
            agent.on_round_end(result, payouts)
        if session.opener_rule == "final_bidder":
            opener = result.final_bidder
        else:
            opener = session.round_index % session.config.num_players
        self._deal(session, opener)

    def _auto_advance(self, session: Session) -> None:
        """Let agent seats act until a human's turn (or, with no humans at
        the table, until the current round resolves)."""
        rounds_at_entry = session.round_index
        while session.status == "live":
            state = session.state
            if state.phase is Phase.RESOLVED:
                self._resolve(session)
                if not session.has_human and session.round_index > rounds_at_entry:
                    return
                continue
            seat = state.to_act
            if seat not in session.agents:
                return
            agent = session.agents[seat]
            obs = Observation.from_state(state, seat)
            out = agent.act(
                obs, seed=session.seed * 7_393 + session.round_index * 1_009 + state.round_length()
            )
            self._apply(session, seat, out.action)

    def _apply(self, session: Session, seat: int, action: int) -> None:
        session.state = apply_action(session.state, action)
        session.emit(
            "action",
            {"seat": seat, "action": _action_to_wire(session.config, action)},
        )
        if session.state.phase is not Phase.RESOLVED:
            session.emit("turn", {"seat": session.state.to_act})

    # --- public operations ------------------------------------------------

    def submit_action(self, session_id: str, seat: int, payload: dict) -> dict:
        session = self.get(session_id)
        with session.lock:
            if session.status != "live":
                raise ServiceError("session is closed")
            state = session.state
            if state.phase is Phase.RESOLVED:
                self._auto_advance(session)
                state = session.state
            if not 0 <= seat < session.config.num_players:
                raise ServiceError(f"no seat {seat}")
            legal_wire = [
                _action_to_wire(session.config, a)
                for a in Observation.from_state(state, seat).legal_actions()
            ] if state.to_act == seat else []
            if session.seats[seat] != HUMAN:
                raise NotYourTurn(f"seat {seat} is not a human seat")
            if state.to_act != seat:
                raise NotYourTurn(f"it is seat {state.to_act}'s turn")
            try:
                action = _action_from_wire(session.config, payload)
            except ServiceError as exc:
                raise IllegalAction(str(exc), legal_wire) from exc
            legal = Observation.from_state(state, seat).legal_actions()
            if action not in legal:
                raise IllegalAction(
                    f"action {payload} is not legal now", legal_wire
                )
            self._apply(session, seat, action)
            self._auto_advance(session)
            return self.get_view(session_id, seat)

    def get_view(self, session_id: str, seat: int) -> dict:
        session = self.get(session_id)
        with session.lock:
            cfg = session.config
            if not 0 <= seat < cfg.num_players:
                raise ServiceError(f"no seat {seat}")
            state = session.state
            sb = state.standing_bid
            own_turn = state.phase is not Phase.RESOLVED and state.to_act == seat
            view = {
                "schema": SCHEMA_VERSION,
                "session": session.session_id,
                "status": session.status,
                "config": {
                    "hand_length": cfg.hand_length,
                    "digit_cardinality": cfg.digit_cardinality,
                    "num_players": cfg.num_players,
                },
                "seat": seat,
                "seats": [
                    "human" if s == HUMAN else s for s in session.seats
                ],
                "round": session.round_index,
                "hand": list(state.hands[seat].digits()),
                "history": [
                    {"seat": p, "action": _action_to_wire(cfg, a)}
                    for p, a in state.history
                ],
                "standing_bid": None
                if sb is None
                else {
                    **_action_to_wire(cfg, sb.index),
                    "bidder": sb.bidder,
                    "is_rebid": sb.is_rebid,
                },
                "phase": state.phase.name.lower(),
                "to_act": state.to_act if state.phase is not Phase.RESOLVED else None,
                "your_turn": own_turn,
                "legal_actions": [
                    _action_to_wire(cfg, a)
                    for a in Observation.from_state(state, seat).legal_actions()
                ] if own_turn else [],
                "ledger": list(session.ledger),
                "last_result": session.last_result,
                "event_count": len(session.events),
            }
            return view

    def events_since(self, session_id: str, since: int = 0) -> list[dict]:
        session = self.get(session_id)
        with session.lock:
            return [e for e in session.events if e["seq"] > since]

    def wait_for_events(self, session_id: str, since: int, timeout: float = 25.0) -> list[dict]:
        session = self.get(session_id)
        with session.changed:
            fresh = [e for e in session.events if e["seq"] > since]
            if fresh:
                return fresh
            session.changed.wait(timeout)
            return [e for e in session.events if e["seq"] > since]


def create_app(manager: SessionManager | None = None):
    """FastAPI application exposing the session API."""
    manager = manager or SessionManager()
    app = FastAPI(title="liarspoker play service")
    app.state.manager = manager

    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError):
        status = 404 if isinstance(exc, UnknownSession) else 400
        body = {"error": str(exc)}
        if isinstance(exc, IllegalAction):
            body["legal_actions"] = exc.legal
        return JSONResponse(status_code=status, content=body)

    @app.post("/sessions")
    async def create_session(payload: dict):
        cfg = payload.get("config", {})
        try:
            config = GameConfig(
                int(cfg["hand_length"]),
                int(cfg["digit_cardinality"]),
                int(cfg["num_players"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"bad config: {exc}") from exc
        session_id = manager.create_session(
            config,
            list(payload.get("seats", [])),
            opener_rule=payload.get("opener_rule", "rotate"),
            seed=int(payload.get("seed", 0)),
            history_path=payload.get("history_path"),
        )
        return {"schema": SCHEMA_VERSION, "session": session_id}

    @app.get("/sessions/{session_id}/view")
    async def get_view(session_id: str, seat: int):
        return manager.get_view(session_id, seat)

    @app.post("/sessions/{session_id}/actions")
    async def submit_action(session_id: str, payload: dict):
        try:
            seat = int(payload["seat"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"bad seat: {exc}") from exc
        return manager.submit_action(session_id, seat, payload.get("action", {}))

    @app.get("/sessions/{session_id}/events")
    async def events(session_id: str, request: Request, since: int = 0):
        manager.get(session_id)  # 404 early for unknown ids
        accept = request.headers.get("accept", "")
        if "text/event-stream" not in accept:
            return {"events": manager.events_since(session_id, since)}

        def stream():
            cursor = since
            while True:
                batch = manager.wait_for_events(session_id, cursor, timeout=15.0)
                if not batch:
                    yield ": keep-alive\n\n"
                    continue
                for event in batch:
                    cursor = event["seq"]
                    yield f"id: {event['seq']}\ndata: {json.dumps(event)}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
