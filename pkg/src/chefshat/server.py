"""Live match server.

One listening port serves three things, dispatched by the first byte of each
connection: newline-delimited JSON messages (scriptable clients and tests),
WebSocket upgrades carrying the same messages one per text frame (browsers),
and plain HTTP GETs for the health endpoint plus optional static web-client
files.

Tables are actors: one asyncio task per table owns its MatchState and
processes joins, submitted actions, timer expiries, and disconnect and
reconnect notices strictly in arrival order through a single mailbox, so
table state is never touched from two contexts; turn-timer ticks enter the
same mailbox. Bot seats decide through exactly the simulator's policy
helpers, which keeps an all-bot table's event log byte-identical to
simulator.run_match with the same seed and rules.

Sessions are bearer tokens issued at Hello. A disconnected human seat keeps
its binding for a grace window (default 60 s); greeting again with the token
rebinds the seat and replays the full public history. When the window
expires the seat permanently falls back to the server's default bot, seeded
exactly as a pre-seated bot at that seat would have been.
"""

from __future__ import annotations

import asyncio
import os
import secrets
import sys
import traceback
from dataclasses import dataclass, field
from typing import Any

from .agents import AGENT_FACTORIES, AgentPolicy, build_view, make_agent, public_events
from .core_rules import (
    PASS,
    IllegalActionError,
    InvalidConfigError,
    PlayAction,
    RuleConfig,
)
from .events import canonical_json, write_jsonl
from .match_engine import (
    PHASE_EXCHANGE,
    PHASE_MAKING_PIZZAS,
    PHASE_SHIFT_ENDED,
    PHASE_SPECIAL_ACTION_WINDOW,
    ExchangePrompts,
    MatchState,
    SpecialAction,
    exchange_prompts,
    new_match,
    perform_exchange,
    resolve_special_action,
    special_action_offer,
    start_shift,
    step,
)
from .rng import derive_seed
from .simulator import (
    AGENT_SEED_OFFSET,
    checked_exchange_return,
    fallback_action,
    fallback_exchange_return,
    policy_special,
    policy_turn,
)
from .wire import (
    ACTION_ACCEPTED,
    ACTION_REJECTED,
    CREATE_TABLE,
    ERROR,
    EXCHANGE_PROMPT,
    HELLO,
    JOIN_TABLE,
    MATCH_ENDED_MSG,
    PING,
    PONG,
    PROTOCOL_VERSION,
    SEAT_ASSIGNED,
    SPECIAL_ACTION_PROMPT,
    SUBMIT_ACTION,
    TABLE_STATE,
    VIEW_UPDATE,
    YOUR_TURN,
    E_ALREADY_SEATED,
    E_BAD_ACTION,
    E_EXPECTED_HELLO,
    E_INVALID_CONFIG,
    E_MALFORMED,
    E_NOT_SEATED,
    E_NOT_YOUR_TURN,
    E_TABLE_FULL,
    E_UNKNOWN_TABLE,
    E_UNSUPPORTED_VERSION,
    OP_BINARY,
    OP_CLOSE,
    OP_PING,
    OP_TEXT,
    HttpRequest,
    WireError,
    WSParser,
    decode_message,
    encode_message,
    is_websocket_upgrade,
    parse_http_request,
    ws_close_frame,
    ws_handshake_response,
    ws_pong_frame,
    ws_text_frame,
)

MAX_HTTP_HEAD = 32 * 1024

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".map": "application/json",
    ".txt": "text/plain; charset=utf-8",
}


class Connection:
    """One client link; send() frames a message for the transport."""

    def __init__(self, writer: asyncio.StreamWriter, kind: str) -> None:
        self.writer = writer
        self.kind = kind  # "tcp" | "ws"
        self.closed = False

    def send(self, mtype: str, body: dict) -> None:
        if self.closed:
            return
        line = encode_message(mtype, body)
        try:
            if self.kind == "tcp":
                self.writer.write(line.encode("utf-8"))
            else:
                self.writer.write(ws_text_frame(line[:-1]))
        except Exception:
            self.closed = True

    def close(self) -> None:
        self.closed = True
        try:
            self.writer.close()
        except Exception:
            pass


@dataclass(slots=True)
class Session:
    token: str
    conn: Connection | None = None
    seats: dict[str, int] = field(default_factory=dict)  # table_id -> seat


@dataclass(slots=True)
class SeatSlot:
    kind: str  # "open" | "bot" | "human"
    bot_name: str | None = None
    policy: AgentPolicy | None = None
    token: str | None = None
    connected: bool = False
    grace_task: asyncio.Task | None = None


@dataclass(slots=True)
class Waiting:
    """What the table is blocked on: one human turn, one special-action
    answer, or up to two exchange returns."""

    kind: str  # "turn" | "special" | "exchange"
    seats: set[int]
    guard: int
    offer: SpecialAction | None = None
    prompts: ExchangePrompts | None = None
    returns: dict[int, tuple[int, ...]] = field(default_factory=dict)
    timer: asyncio.Task | None = None


def _parse_play_action(raw: Any):
    """Wire action dict -> engine action, or None when malformed."""
    if not isinstance(raw, dict):
        return None
    kind = raw.get("type")
    if kind == "pass":
        return PASS
    if kind != "play":
        return None
    face = raw.get("face")
    count = raw.get("count")
    uids = raw.get("uids")
    if not isinstance(face, int) or not isinstance(count, int) or not isinstance(uids, list):
        return None
    if not all(isinstance(u, int) and not isinstance(u, bool) for u in uids):
        return None
    if isinstance(face, bool) or isinstance(count, bool):
        return None
    try:
        return PlayAction(face=face, count=count, card_uids=tuple(uids))
    except Exception:
        return None


class Table:
    """One live table and its actor task."""

    def __init__(
        self,
        server: "GameServer",
        table_id: str,
        rules: RuleConfig,
        seed: int,
        turn_timer_ms: int,
        seats: list[SeatSlot],
    ) -> None:
        self.server = server
        self.id = table_id
        self.rules = rules
        self.seed = seed
        self.turn_timer_ms = turn_timer_ms
        self.seats = seats
        self.status = "lobby"
        self.state: MatchState | None = None
        self.events: list = []
        self.cursors = [0, 0, 0, 0]
        self.awaiting: Waiting | None = None
        self.guard = 0
        self.faults = 0
        self.mailbox: asyncio.Queue = asyncio.Queue()
        self.task = asyncio.create_task(self._run())

    # ------------------------------------------------------------ actor

    async def _run(self) -> None:
        while True:
            msg = await self.mailbox.get()
            if msg[0] == "stop":
                return
            try:
                self._handle(msg)
            except Exception:  # pragma: no cover - defensive: actor survives
                traceback.print_exc(file=sys.stderr)

    def _handle(self, msg: tuple) -> None:
        kind = msg[0]
        if kind == "maybe_start":
            if self.status == "lobby" and all(s.kind != "open" for s in self.seats):
                self._start_match()
        elif kind == "create_reply":
            _, conn = msg
            conn.send(TABLE_STATE, self._table_state_body())
        elif kind == "join":
            self._on_join(*msg[1:])
        elif kind == "action":
            self._on_action(*msg[1:])
        elif kind == "timeout":
            self._on_timeout(msg[1])
        elif kind == "disconnect":
            self._on_disconnect(msg[1])
        elif kind == "reconnect":
            self._on_reconnect(*msg[1:])
        elif kind == "grace_expired":
            self._on_grace_expired(*msg[1:])

    # ------------------------------------------------------- send helpers

    def _send_seat(self, seat: int, mtype: str, body: dict) -> None:
        slot = self.seats[seat]
        if slot.kind != "human" or not slot.connected or slot.token is None:
            return
        session = self.server.sessions.get(slot.token)
        if session is not None and session.conn is not None:
            session.conn.send(mtype, body)

    def _table_state_body(self) -> dict:
        seats = []
        for slot in self.seats:
            if slot.kind == "open":
                seats.append({"kind": "open"})
            elif slot.kind == "bot":
                seats.append({"kind": "bot", "name": slot.bot_name})
            else:
                seats.append({"kind": "human", "connected": slot.connected})
        return {
            "table_id": self.id,
            "status": self.status,
            "turn_timer_ms": self.turn_timer_ms,
            "rules": self.rules.to_dict(),
            "seats": seats,
        }

    def _broadcast_table_state(self) -> None:
        body = self._table_state_body()
        for seat in range(4):
            self._send_seat(seat, TABLE_STATE, body)

    def _flush_seat(self, seat: int) -> None:
        delta = public_events(self.events[self.cursors[seat] :])
        self.cursors[seat] = len(self.events)
        self._send_seat(
            seat,
            VIEW_UPDATE,
            {
                "table_id": self.id,
                "view": build_view(self.state, seat).to_dict(),
                "events": [ev.to_dict() for ev in delta],
            },
        )

    def _flush_views(self) -> None:
        for seat in range(4):
            slot = self.seats[seat]
            if slot.kind == "human" and slot.connected:
                self._flush_seat(seat)

    def _exchange_duty(self, seat: int) -> tuple[tuple[int, ...], int, tuple[int, ...]]:
        """(received, return_count, pool) for a seat owing an exchange return."""
        p = self.awaiting.prompts
        if seat == p.chef_seat:
            return p.dishwasher_gives, p.chef_returns, p.chef_hand_after
        return p.waiter_gives, p.sous_chef_returns, p.sous_chef_hand_after

    def _send_prompt(self, seat: int) -> None:
        aw = self.awaiting
        if aw.kind == "turn":
            self._send_seat(
                seat,
                YOUR_TURN,
                {"table_id": self.id, "seat": seat, "timer_ms": self.turn_timer_ms},
            )
        elif aw.kind == "special":
            self._send_seat(
                seat,
                SPECIAL_ACTION_PROMPT,
                {"table_id": self.id, "kind": aw.offer.kind, "timer_ms": self.turn_timer_ms},
            )
        else:
            received, k, pool = self._exchange_duty(seat)
            self._send_seat(
                seat,
                EXCHANGE_PROMPT,
                {
                    "table_id": self.id,
                    "received": list(received),
                    "return_count": k,
                    "pool": list(pool),
                    "timer_ms": self.turn_timer_ms,
                },
            )

    # ---------------------------------------------------------- game loop

    def _record(self, evs) -> None:
        self.events.extend(evs)

    def _start_match(self) -> None:
        self.status = "playing"
        self.state, evs = new_match(self.rules, self.seed)
        self._record(evs)
        self._advance()

    def _advance(self) -> None:
        """Run the match forward until it needs a human or ends. Mirrors the
        simulator's loop exactly so bot-only tables replay bit-for-bit."""
        while self.state.winner is None:
            phase = self.state.phase
            if phase == PHASE_SHIFT_ENDED:
                self.state, evs = start_shift(self.state)
                self._record(evs)
            elif phase == PHASE_SPECIAL_ACTION_WINDOW:
                offer = special_action_offer(self.state)
                if offer is None:
                    self.state, evs = resolve_special_action(self.state, None)
                    self._record(evs)
                    continue
                slot = self.seats[offer.declarer]
                if slot.kind == "bot":
                    accepted, f = policy_special(slot.policy, self.state, offer)
                    self.faults += f
                    self.state, evs = resolve_special_action(
                        self.state, offer if accepted else None
                    )
                    self._record(evs)
                    continue
                self._wait("special", {offer.declarer}, offer=offer)
                return
            elif phase == PHASE_EXCHANGE:
                prompts = exchange_prompts(self.state)
                duties = (
                    (prompts.chef_seat, prompts.dishwasher_gives, prompts.chef_returns,
                     prompts.chef_hand_after),
                    (prompts.sous_chef_seat, prompts.waiter_gives, prompts.sous_chef_returns,
                     prompts.sous_chef_hand_after),
                )
                returns: dict[int, tuple[int, ...]] = {}
                owing: set[int] = set()
                for seat, received, k, pool in duties:
                    slot = self.seats[seat]
                    if slot.kind == "bot":
                        ret, f = checked_exchange_return(
                            slot.policy, self.state, seat, received, k, pool
                        )
                        self.faults += f
                        returns[seat] = ret
                    else:
                        owing.add(seat)
                if not owing:
                    self.state, evs = perform_exchange(
                        self.state, returns[prompts.chef_seat], returns[prompts.sous_chef_seat]
                    )
                    self._record(evs)
                    continue
                self._wait("exchange", owing, prompts=prompts, returns=returns)
                return
            elif phase == PHASE_MAKING_PIZZAS:
                seat = self.state.to_act
                slot = self.seats[seat]
                if slot.kind == "bot":
                    self.state, evs, f = policy_turn(slot.policy, self.state, seat)
                    self.faults += f
                    self._record(evs)
                    continue
                self._wait("turn", {seat})
                return
            else:  # pragma: no cover - phases are exhaustive
                raise RuntimeError(f"unexpected phase {phase}")
        self._finish()

    def _wait(self, kind: str, seats: set[int], **extra: Any) -> None:
        self.guard += 1
        timer = None
        if self.turn_timer_ms > 0:
            timer = asyncio.create_task(self._timeout_after(self.turn_timer_ms / 1000, self.guard))
        self.awaiting = Waiting(kind=kind, seats=set(seats), guard=self.guard, timer=timer, **extra)
        self._flush_views()
        for seat in seats:
            self._send_prompt(seat)

    async def _timeout_after(self, delay: float, guard: int) -> None:
        await asyncio.sleep(delay)
        self.mailbox.put_nowait(("timeout", guard))

    def _clear_wait(self) -> None:
        if self.awaiting is not None and self.awaiting.timer is not None:
            self.awaiting.timer.cancel()
        self.awaiting = None

    def _finish(self) -> None:
        self.status = "finished"
        self._flush_views()
        body = {
            "table_id": self.id,
            "winner": self.state.winner,
            "reason": self.state.end_reason,
            "totals": list(self.state.scores),
        }
        for seat in range(4):
            self._send_seat(seat, MATCH_ENDED_MSG, body)
        if self.server.logs_dir is not None:
            path = os.path.join(self.server.logs_dir, f"table_{self.id}.jsonl")
            write_jsonl(self.events, path)
        for slot in self.seats:
            if slot.kind == "human" and slot.token is not None:
                session = self.server.sessions.get(slot.token)
                if session is not None:
                    session.seats.pop(self.id, None)

    # ------------------------------------------------------ mailbox handlers

    def _on_join(self, token: str, body: dict, conn: Connection) -> None:
        if self.status != "lobby":
            conn.send(ERROR, {"code": E_TABLE_FULL, "detail": "table is not accepting players"})
            return
        if any(s.kind == "human" and s.token == token for s in self.seats):
            conn.send(ERROR, {"code": E_ALREADY_SEATED, "detail": "one seat per table"})
            return
        want = body.get("seat")
        if want is not None:
            if not isinstance(want, int) or isinstance(want, bool) or not 0 <= want <= 3:
                conn.send(ERROR, {"code": E_BAD_ACTION, "detail": "seat must be 0..3"})
                return
            if self.seats[want].kind != "open":
                conn.send(ERROR, {"code": E_TABLE_FULL, "detail": f"seat {want} is taken"})
                return
        else:
            want = next((i for i, s in enumerate(self.seats) if s.kind == "open"), None)
            if want is None:
                conn.send(ERROR, {"code": E_TABLE_FULL, "detail": "no open seats"})
                return
        self.seats[want] = SeatSlot(kind="human", token=token, connected=True)
        session = self.server.sessions[token]
        session.seats[self.id] = want
        conn.send(SEAT_ASSIGNED, {"table_id": self.id, "seat": want})
        self._broadcast_table_state()
        if all(s.kind != "open" for s in self.seats):
            self._start_match()

    def _seat_of(self, token: str) -> int | None:
        for i, slot in enumerate(self.seats):
            if slot.kind == "human" and slot.token == token:
                return i
        return None

    def _on_action(self, token: str, body: dict, conn: Connection) -> None:
        seat = self._seat_of(token)
        if seat is None:
            conn.send(ACTION_REJECTED, {"code": E_NOT_SEATED, "detail": "not seated here"})
            return
        aw = self.awaiting
        if self.status != "playing" or aw is None or seat not in aw.seats:
            conn.send(ACTION_REJECTED, {"code": E_NOT_YOUR_TURN, "detail": "nothing is awaited"})
            return
        raw = body.get("action")
        if not isinstance(raw, dict):
            conn.send(ACTION_REJECTED, {"code": E_BAD_ACTION, "detail": "action must be an object"})
            return
        if aw.kind == "turn":
            action = _parse_play_action(raw)
            if action is None:
                conn.send(ACTION_REJECTED, {"code": E_BAD_ACTION, "detail": "not a play or pass"})
                return
            try:
                new_state, evs = step(self.state, seat, action)
            except IllegalActionError as exc:
                conn.send(
                    ACTION_REJECTED, {"code": exc.reason.name, "detail": str(exc)}
                )
                return
            conn.send(ACTION_ACCEPTED, {"table_id": self.id})
            self._clear_wait()
            self.state = new_state
            self._record(evs)
            self._advance()
        elif aw.kind == "special":
            if raw.get("type") != "declare" or not isinstance(raw.get("accept"), bool):
                conn.send(
                    ACTION_REJECTED,
                    {"code": E_BAD_ACTION, "detail": 'expected {"type":"declare","accept":bool}'},
                )
                return
            declaration = aw.offer if raw["accept"] else None
            conn.send(ACTION_ACCEPTED, {"table_id": self.id})
            self._clear_wait()
            self.state, evs = resolve_special_action(self.state, declaration)
            self._record(evs)
            self._advance()
        else:  # exchange
            if raw.get("type") != "exchange_return" or not isinstance(raw.get("uids"), list):
                conn.send(
                    ACTION_REJECTED,
                    {"code": E_BAD_ACTION, "detail": 'expected {"type":"exchange_return","uids":[...]}'},
                )
                return
            uids = raw["uids"]
            received, k, pool = self._exchange_duty(seat)
            if (
                len(uids) != k
                or len(set(uids)) != k
                or not all(isinstance(u, int) and not isinstance(u, bool) for u in uids)
                or any(u not in pool for u in uids)
            ):
                conn.send(
                    ACTION_REJECTED,
                    {"code": "CARDS_NOT_HELD", "detail": f"return exactly {k} held cards"},
                )
                return
            conn.send(ACTION_ACCEPTED, {"table_id": self.id})
            aw.returns[seat] = tuple(uids)
            aw.seats.discard(seat)
            if not aw.seats:
                prompts = aw.prompts
                returns = aw.returns
                self._clear_wait()
                self.state, evs = perform_exchange(
                    self.state, returns[prompts.chef_seat], returns[prompts.sous_chef_seat]
                )
                self._record(evs)
                self._advance()

    def _on_timeout(self, guard: int) -> None:
        aw = self.awaiting
        if aw is None or aw.guard != guard or self.status != "playing":
            return
        if aw.kind == "turn":
            seat = next(iter(aw.seats))
            legal = build_view(self.state, seat).legal
            self._clear_wait()
            self.state, evs = step(self.state, seat, fallback_action(legal), auto="timeout")
            self._record(evs)
            self._advance()
        elif aw.kind == "special":
            self._clear_wait()
            self.state, evs = resolve_special_action(self.state, None)
            self._record(evs)
            self._advance()
        else:
            prompts = aw.prompts
            returns = dict(aw.returns)
            for seat in aw.seats:
                received, k, pool = self._exchange_duty(seat)
                returns[seat] = fallback_exchange_return(pool, k)
            self._clear_wait()
            self.state, evs = perform_exchange(
                self.state, returns[prompts.chef_seat], returns[prompts.sous_chef_seat]
            )
            self._record(evs)
            self._advance()

    def _on_disconnect(self, token: str) -> None:
        seat = self._seat_of(token)
        if seat is None:
            return
        slot = self.seats[seat]
        slot.connected = False
        if self.status == "lobby":
            self.seats[seat] = SeatSlot(kind="open")
            session = self.server.sessions.get(token)
            if session is not None:
                session.seats.pop(self.id, None)
            self._broadcast_table_state()
        elif self.status == "playing":
            grace = self.server.grace_seconds
            if grace > 0:
                slot.grace_task = asyncio.create_task(self._grace_after(grace, seat, token))
            else:
                self.mailbox.put_nowait(("grace_expired", seat, token))

    async def _grace_after(self, delay: float, seat: int, token: str) -> None:
        await asyncio.sleep(delay)
        self.mailbox.put_nowait(("grace_expired", seat, token))

    def _on_reconnect(self, token: str, conn: Connection) -> None:
        seat = self._seat_of(token)
        if seat is None:
            return
        slot = self.seats[seat]
        slot.connected = True
        if slot.grace_task is not None:
            slot.grace_task.cancel()
            slot.grace_task = None
        conn.send(SEAT_ASSIGNED, {"table_id": self.id, "seat": seat})
        if self.status == "lobby":
            conn.send(TABLE_STATE, self._table_state_body())
            return
        # full public history: a reconnecting client starts from nothing
        self.cursors[seat] = 0
        self._flush_seat(seat)
        if self.status == "finished":
            self._send_seat(
                seat,
                MATCH_ENDED_MSG,
                {
                    "table_id": self.id,
                    "winner": self.state.winner,
                    "reason": self.state.end_reason,
                    "totals": list(self.state.scores),
                },
            )
        elif self.awaiting is not None and seat in self.awaiting.seats:
            self._send_prompt(seat)

    def _on_grace_expired(self, seat: int, token: str) -> None:
        slot = self.seats[seat]
        if slot.kind != "human" or slot.token != token or slot.connected:
            return
        policy = make_agent(
            self.server.bot_default, derive_seed(self.seed, AGENT_SEED_OFFSET + seat)
        )
        self.seats[seat] = SeatSlot(kind="bot", bot_name=self.server.bot_default, policy=policy)
        session = self.server.sessions.get(token)
        if session is not None:
            session.seats.pop(self.id, None)
        aw = self.awaiting
        if aw is None or seat not in aw.seats:
            return
        if aw.kind == "turn":
            self._clear_wait()
            self.state, evs, f = policy_turn(policy, self.state, seat)
            self.faults += f
            self._record(evs)
            self._advance()
        elif aw.kind == "special":
            accepted, f = policy_special(policy, self.state, aw.offer)
            self.faults += f
            offer = aw.offer
            self._clear_wait()
            self.state, evs = resolve_special_action(self.state, offer if accepted else None)
            self._record(evs)
            self._advance()
        else:
            received, k, pool = self._exchange_duty(seat)
            ret, f = checked_exchange_return(policy, self.state, seat, received, k, pool)
            self.faults += f
            aw.returns[seat] = ret
            aw.seats.discard(seat)
            if not aw.seats:
                prompts = aw.prompts
                returns = aw.returns
                self._clear_wait()
                self.state, evs = perform_exchange(
                    self.state, returns[prompts.chef_seat], returns[prompts.sous_chef_seat]
                )
                self._record(evs)
                self._advance()


class GameServer:
    """The shared listener plus the session and table registries."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        *,
        rules: RuleConfig | None = None,
        logs_dir: str | None = None,
        turn_timer: float = 0.0,
        static_dir: str | None = None,
        grace_seconds: float = 60.0,
        bot_default: str = "random",
    ) -> None:
        self.host = host
        self.port = port
        self.rules = rules if rules is not None else RuleConfig()
        self.logs_dir = logs_dir
        if logs_dir is not None:
            os.makedirs(logs_dir, exist_ok=True)
        self.default_turn_timer_ms = int(round(turn_timer * 1000))
        self.static_dir = os.path.realpath(static_dir) if static_dir else None
        self.grace_seconds = grace_seconds
        self.bot_default = bot_default
        self.sessions: dict[str, Session] = {}
        self.tables: dict[str, Table] = {}
        self._table_counter = 0
        self._server: asyncio.base_events.Server | None = None

    async def start(self) -> None:
        self._server = await asyncio.start_server(
            self._on_connection, self.host, self.port, limit=1 << 20
        )
        self.port = self._server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        for table in self.tables.values():
            table.mailbox.put_nowait(("stop",))
            if table.awaiting is not None and table.awaiting.timer is not None:
                table.awaiting.timer.cancel()
            for slot in table.seats:
                if slot.grace_task is not None:
                    slot.grace_task.cancel()
        for table in self.tables.values():
            await table.task
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    # -------------------------------------------------------- dispatching

    async def _on_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        try:
            first = await reader.read(1)
            if not first:
                return
            if first == b"{":
                await self._tcp_loop(reader, writer, first)
            else:
                await self._http_entry(reader, writer, first)
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        except Exception:  # pragma: no cover - defensive
            traceback.print_exc(file=sys.stderr)
        finally:
            try:
                writer.close()
            except Exception:
                pass

    # ----------------------------------------------------------- TCP JSONL

    async def _tcp_loop(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter, first: bytes
    ) -> None:
        conn = Connection(writer, "tcp")
        session: Session | None = None
        try:
            line = first + await reader.readline()
            while line:
                text = line.decode("utf-8", "replace").strip()
                if text:
                    session = self._dispatch(conn, session, text)
                    if conn.closed:
                        break
                    await writer.drain()
                line = await reader.readline()
        except ValueError:
            # a line beyond the stream limit: hang up on the flooder
            pass
        finally:
            self._on_conn_lost(conn, session)

    # ------------------------------------------------------------- HTTP/WS

    async def _http_entry(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter, first: bytes
    ) -> None:
        head = bytearray(first)
        while b"\r\n\r\n" not in head:
            chunk = await reader.read(4096)
            if not chunk:
                return
            head += chunk
            if len(head) > MAX_HTTP_HEAD:
                writer.write(_http_response(431, "text/plain; charset=utf-8", b"head too large"))
                return
        split = head.index(b"\r\n\r\n")
        request = parse_http_request(bytes(head[:split]))
        leftover = bytes(head[split + 4 :])
        if is_websocket_upgrade(request):
            writer.write(ws_handshake_response(request))
            await writer.drain()
            await self._ws_loop(reader, writer, leftover)
            return
        self._serve_http(request, writer)
        await writer.drain()

    async def _ws_loop(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter, leftover: bytes
    ) -> None:
        conn = Connection(writer, "ws")
        session: Session | None = None
        parser = WSParser()
        data = leftover
        try:
            while True:
                if data:
                    try:
                        messages = parser.feed(data)
                    except WireError:
                        writer.write(ws_close_frame(1002))
                        break
                    for opcode, payload in messages:
                        if opcode == OP_TEXT:
                            text = payload.decode("utf-8", "replace").strip()
                            if text:
                                session = self._dispatch(conn, session, text)
                        elif opcode == OP_PING:
                            writer.write(ws_pong_frame(payload))
                        elif opcode == OP_CLOSE:
                            writer.write(ws_close_frame())
                            return
                        elif opcode == OP_BINARY:
                            writer.write(ws_close_frame(1003))
                            return
                    if conn.closed:
                        return
                    await writer.drain()
                data = await reader.read(4096)
                if not data:
                    return
        finally:
            self._on_conn_lost(conn, session)

    def _serve_http(self, request: HttpRequest, writer: asyncio.StreamWriter) -> None:
        path = request.path.split("?", 1)[0]
        if request.method != "GET":
            writer.write(_http_response(405, "text/plain; charset=utf-8", b"GET only"))
            return
        if path == "/health":
            counts = {"lobby": 0, "playing": 0, "finished": 0}
            for table in self.tables.values():
                counts[table.status] += 1
            body = canonical_json(
                {
                    "protocol_version": PROTOCOL_VERSION,
                    "status": "ok",
                    "tables": {"total": len(self.tables), **counts},
                }
            ).encode("utf-8")
            writer.write(_http_response(200, "application/json", body))
            return
        if self.static_dir is not None:
            rel = path.lstrip("/") or "index.html"
            full = os.path.realpath(os.path.join(self.static_dir, rel))
            if full == self.static_dir or full.startswith(self.static_dir + os.sep):
                if os.path.isfile(full):
                    ext = os.path.splitext(full)[1].lower()
                    ctype = _CONTENT_TYPES.get(ext, "application/octet-stream")
                    with open(full, "rb") as fh:
                        writer.write(_http_response(200, ctype, fh.read()))
                    return
        writer.write(_http_response(404, "text/plain; charset=utf-8", b"not found"))

    # ------------------------------------------------------------ messages

    def _dispatch(self, conn: Connection, session: Session | None, text: str) -> Session | None:
        try:
            mtype, body, version = decode_message(text)
        except WireError as exc:
            conn.send(ERROR, {"code": E_MALFORMED, "detail": str(exc)})
            return session
        if session is None:
            if mtype != HELLO:
                conn.send(ERROR, {"code": E_EXPECTED_HELLO, "detail": "greet first"})
                return None
            if version != PROTOCOL_VERSION:
                conn.send(
                    ERROR,
                    {"code": E_UNSUPPORTED_VERSION, "detail": f"speak version {PROTOCOL_VERSION}"},
                )
                conn.close()
                return None
            return self._hello(conn, body)
        if mtype == HELLO:
            conn.send(HELLO, {"session": session.token, "resumed": False})
        elif mtype == PING:
            nonce = body.get("nonce")
            if not (nonce is None or isinstance(nonce, (str, int))) or isinstance(nonce, bool):
                conn.send(ERROR, {"code": E_MALFORMED, "detail": "nonce must be string or int"})
            else:
                conn.send(PONG, {"nonce": nonce})
        elif mtype == CREATE_TABLE:
            self._create_table(conn, session, body)
        elif mtype == JOIN_TABLE:
            table = self.tables.get(body.get("table_id"))
            if table is None:
                conn.send(ERROR, {"code": E_UNKNOWN_TABLE, "detail": "no such table"})
            else:
                table.mailbox.put_nowait(("join", session.token, body, conn))
        elif mtype == SUBMIT_ACTION:
            table = self.tables.get(body.get("table_id"))
            if table is None:
                conn.send(ACTION_REJECTED, {"code": E_UNKNOWN_TABLE, "detail": "no such table"})
            else:
                table.mailbox.put_nowait(("action", session.token, body, conn))
        else:
            conn.send(ERROR, {"code": E_MALFORMED, "detail": f"unexpected {mtype} from a client"})
        return session

    def _hello(self, conn: Connection, body: dict) -> Session:
        token = body.get("token")
        resumed = False
        if isinstance(token, str) and token in self.sessions:
            session = self.sessions[token]
            if session.conn is not None:
                session.conn.close()
            session.conn = conn
            resumed = True
            for table_id in list(session.seats):
                table = self.tables.get(table_id)
                if table is not None:
                    table.mailbox.put_nowait(("reconnect", session.token, conn))
        else:
            session = Session(token=secrets.token_hex(16), conn=conn)
            self.sessions[session.token] = session
        conn.send(HELLO, {"session": session.token, "resumed": resumed})
        return session

    def _create_table(self, conn: Connection, session: Session, body: dict) -> None:
        if "rules" in body and not isinstance(body["rules"], dict):
            conn.send(ERROR, {"code": E_INVALID_CONFIG, "detail": "rules must be an object"})
            return
        try:
            rules = RuleConfig.from_dict(body["rules"]) if "rules" in body else self.rules
        except InvalidConfigError as exc:
            conn.send(ERROR, {"code": E_INVALID_CONFIG, "detail": str(exc)})
            return
        timer = body.get("turn_timer_ms", self.default_turn_timer_ms)
        if not isinstance(timer, int) or isinstance(timer, bool) or timer < 0:
            conn.send(
                ERROR, {"code": E_INVALID_CONFIG, "detail": "turn_timer_ms must be an int >= 0"}
            )
            return
        seed = body.get("seed")
        if seed is None:
            seed = secrets.randbits(63)
        if not isinstance(seed, int) or isinstance(seed, bool):
            conn.send(ERROR, {"code": E_INVALID_CONFIG, "detail": "seed must be an integer"})
            return
        bots = body.get("bots", {})
        if isinstance(bots, list):
            bots = {seat: self.bot_default for seat in bots}
        if not isinstance(bots, dict):
            conn.send(ERROR, {"code": E_INVALID_CONFIG, "detail": "bots must be a map or list"})
            return
        seats: list[SeatSlot] = [SeatSlot(kind="open") for _ in range(4)]
        for key, name in bots.items():
            try:
                seat = int(key)
            except (TypeError, ValueError):
                conn.send(ERROR, {"code": E_INVALID_CONFIG, "detail": f"bad bot seat {key!r}"})
                return
            if not 0 <= seat <= 3 or name not in AGENT_FACTORIES:
                conn.send(
                    ERROR,
                    {"code": E_INVALID_CONFIG, "detail": f"bad bot {name!r} at seat {key!r}"},
                )
                return
            seats[seat] = SeatSlot(
                kind="bot",
                bot_name=name,
                policy=make_agent(name, derive_seed(seed, AGENT_SEED_OFFSET + seat)),
            )
        self._table_counter += 1
        table_id = f"t{self._table_counter}"
        table = Table(self, table_id, rules, seed, timer, seats)
        self.tables[table_id] = table
        table.mailbox.put_nowait(("maybe_start",))
        table.mailbox.put_nowait(("create_reply", conn))

    def _on_conn_lost(self, conn: Connection, session: Session | None) -> None:
        conn.closed = True
        if session is not None and session.conn is conn:
            session.conn = None
            for table_id in list(session.seats):
                table = self.tables.get(table_id)
                if table is not None:
                    table.mailbox.put_nowait(("disconnect", session.token))


def _http_response(status: int, ctype: str, body: bytes) -> bytes:
    reasons = {
        200: "OK",
        404: "Not Found",
        405: "Method Not Allowed",
        431: "Request Header Fields Too Large",
    }
    head = (
        f"HTTP/1.1 {status} {reasons.get(status, 'Error')}\r\n"
        f"Content-Type: {ctype}\r\n"
        f"Content-Length: {len(body)}\r\n"
        "Connection: close\r\n"
        "\r\n"
    )
    return head.encode("latin-1") + body


def serve_forever(
    host: str,
    port: int,
    *,
    rules: RuleConfig | None = None,
    logs_dir: str | None = None,
    turn_timer: float = 0.0,
    static_dir: str | None = None,
    grace_seconds: float = 60.0,
) -> None:
    """Blocking entry point used by the CLI; Ctrl-C stops cleanly."""

    async def _main() -> None:
        server = GameServer(
            host,
            port,
            rules=rules,
            logs_dir=logs_dir,
            turn_timer=turn_timer,
            static_dir=static_dir,
            grace_seconds=grace_seconds,
        )
        await server.start()
        print(f"listening on {server.host}:{server.port}", flush=True)
        try:
            await asyncio.Event().wait()
        finally:
            await server.stop()

    try:
        asyncio.run(_main())
    except KeyboardInterrupt:
        pass
