"""The live table server: sessions, tables, play over TCP and WebSocket."""

from __future__ import annotations

import asyncio
import json
import os
from contextlib import asynccontextmanager

import pytest

from chefshat.agents import make_agent
from chefshat.core_rules import CARDS, RuleConfig
from chefshat.events import read_jsonl, write_jsonl
from chefshat.rng import derive_seed
from chefshat.simulator import AGENT_SEED_OFFSET, run_match
from chefshat.wire import (
    OP_BINARY,
    OP_CLOSE,
    OP_PING,
    OP_PONG,
    OP_TEXT,
    mask_client_frame,
    ws_accept_key,
)

from .netutils import (
    Client,
    allowed_uids_for_seat,
    drive_to_match_end,
    observed_uids,
    run,
    scripted_action,
    start_server,
)

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


@asynccontextmanager
async def serving(**kwargs):
    server = await start_server(**kwargs)
    try:
        yield server
    finally:
        await server.stop()


async def read_until(client: Client, mtype: str) -> dict:
    """Drain frames until one of the given type arrives; returns its body."""
    while True:
        frame = await client.recv()
        if frame["type"] == mtype:
            return frame["body"]


def last_view(client: Client) -> dict:
    for frame in reversed(client.received):
        if frame["type"] == "view_update":
            return frame["body"]["view"]
    raise AssertionError("no view_update received yet")


async def http_get(port: int, path: str, method: str = "GET") -> tuple[int, bytes]:
    reader, writer = await asyncio.open_connection("127.0.0.1", port)
    writer.write(f"{method} {path} HTTP/1.1\r\nHost: test\r\n\r\n".encode())
    await writer.drain()
    raw = await asyncio.wait_for(reader.read(), 10.0)
    writer.close()
    head, _, body = raw.partition(b"\r\n\r\n")
    status = int(head.split(b" ", 2)[1])
    return status, body


class TestSessions:
    def test_hello_issues_session(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                reply = await c.hello()
                assert reply["resumed"] is False
                assert isinstance(reply["session"], str) and len(reply["session"]) == 32
                c.close()

        run(body())

    def test_anything_before_hello_refused(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.send("ping", {"nonce": 1})
                err = await c.expect("error")
                assert err["code"] == "EXPECTED_HELLO"
                c.close()

        run(body())

    def test_unsupported_version_refused_and_closed(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.send_raw('{"body":{},"protocol_version":2,"type":"hello"}')
                err = await c.expect("error")
                assert err["code"] == "UNSUPPORTED_VERSION"
                assert await c.eof()
                c.close()

        run(body())

    def test_repeat_hello_keeps_session(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                first = await c.hello()
                second = await c.hello()
                assert second["session"] == first["session"]
                assert second["resumed"] is False
                c.close()

        run(body())

    def test_token_resumes_on_new_connection(self):
        async def body():
            async with serving() as server:
                c1 = await Client.connect(server.port)
                token = (await c1.hello())["session"]
                c2 = await Client.connect(server.port)
                reply = await c2.hello(token)
                assert reply == {"session": token, "resumed": True}
                c1.close()
                c2.close()

        run(body())

    def test_unknown_token_gets_fresh_session(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                reply = await c.hello("deadbeef" * 4)
                assert reply["resumed"] is False
                assert reply["session"] != "deadbeef" * 4
                c.close()

        run(body())

    def test_ping_pong(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                for nonce in ("abc", 42, None):
                    await c.send("ping", {"nonce": nonce})
                    assert (await c.expect("pong")) == {"nonce": nonce}
                await c.send("ping", {"nonce": True})
                assert (await c.expect("error"))["code"] == "MALFORMED"
                await c.send("ping", {"nonce": [1]})
                assert (await c.expect("error"))["code"] == "MALFORMED"
                c.close()

        run(body())

    def test_malformed_line_reported(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.send_raw("{this is not json")
                assert (await c.expect("error"))["code"] == "MALFORMED"
                c.close()

        run(body())

    def test_server_only_type_from_client_refused(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("view_update", {})
                assert (await c.expect("error"))["code"] == "MALFORMED"
                c.close()

        run(body())

    def test_overlong_line_drops_connection(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                try:
                    await c.send_raw("x" * (2 << 20))
                    assert await c.eof()
                except ConnectionError:
                    pass  # the server hung up while the flood was in flight
                c.close()

        run(body())


class TestCreateTable:
    def test_all_bot_table_runs_to_completion(self, tmp_path):
        async def body():
            async with serving(logs_dir=str(tmp_path)) as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("create_table", {"seed": 5, "bots": [0, 1, 2, 3]})
                state = await c.expect("table_state")
                assert state["table_id"] == "t1"
                assert state["status"] == "finished"
                assert all(s["kind"] == "bot" for s in state["seats"])
                assert os.path.exists(tmp_path / "table_t1.jsonl")
                c.close()

        run(body())

    def test_partial_bots_wait_in_lobby(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("create_table", {"seed": 5, "bots": [1, 2, 3]})
                state = await c.expect("table_state")
                assert state["status"] == "lobby"
                kinds = [s["kind"] for s in state["seats"]]
                assert kinds == ["open", "bot", "bot", "bot"]
                c.close()

        run(body())

    def test_table_ids_are_sequential(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("create_table", {"seed": 1, "bots": [1, 2, 3]})
                first = await c.expect("table_state")
                await c.send("create_table", {"seed": 2, "bots": [1, 2, 3]})
                second = await c.expect("table_state")
                assert (first["table_id"], second["table_id"]) == ("t1", "t2")
                c.close()

        run(body())

    def test_rules_echoed_in_table_state(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send(
                    "create_table",
                    {"seed": 1, "bots": [1, 2, 3], "rules": {"max_shifts": 2}},
                )
                state = await c.expect("table_state")
                assert state["rules"]["max_shifts"] == 2
                assert state["rules"]["target_score"] == 15
                c.close()

        run(body())

    @pytest.mark.parametrize(
        "body_patch",
        [
            {"rules": "fast"},
            {"rules": {"target_score": 0}},
            {"rules": {"nonsense": 1}},
            {"turn_timer_ms": -1},
            {"turn_timer_ms": True},
            {"seed": "lucky"},
            {"seed": True},
            {"bots": "all"},
            {"bots": [9]},
            {"bots": {"0": "chessmaster"}},
            {"bots": {"x": "random"}},
        ],
    )
    def test_bad_configs_refused(self, body_patch):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("create_table", {"seed": 1, **body_patch})
                err = await c.expect("error")
                assert err["code"] == "INVALID_CONFIG"
                c.close()

        run(body())

    def test_float_timer_refused(self):
        """Floats never appear in canonical frames, so they arrive only from
        foreign encoders; the server still answers cleanly."""

        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                raw = json.dumps(
                    {
                        "body": {"seed": 1, "turn_timer_ms": 1.5},
                        "protocol_version": 1,
                        "type": "create_table",
                    }
                )
                await c.send_raw(raw)
                assert (await c.expect("error"))["code"] == "INVALID_CONFIG"
                c.close()

        run(body())


class TestJoin:
    def test_join_unknown_table(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("join_table", {"table_id": "t404"})
                assert (await c.expect("error"))["code"] == "UNKNOWN_TABLE"
                await c.send("join_table", {})
                assert (await c.expect("error"))["code"] == "UNKNOWN_TABLE"
                c.close()

        run(body())

    def test_preferred_and_auto_seats(self):
        async def body():
            async with serving() as server:
                c1 = await Client.connect(server.port)
                await c1.hello()
                await c1.send("create_table", {"seed": 1, "bots": {"3": "random"}})
                await c1.expect("table_state")
                await c1.send("join_table", {"table_id": "t1", "seat": 2})
                seat = await c1.expect("seat_assigned")
                assert seat == {"table_id": "t1", "seat": 2}

                c2 = await Client.connect(server.port)
                await c2.hello()
                await c2.send("join_table", {"table_id": "t1"})
                seat2 = await c2.expect("seat_assigned")
                assert seat2["seat"] == 0
                c1.close()
                c2.close()

        run(body())

    def test_taken_seat_refused(self):
        async def body():
            async with serving() as server:
                c1 = await Client.connect(server.port)
                await c1.hello()
                await c1.send("create_table", {"seed": 1, "bots": {"1": "random"}})
                await c1.expect("table_state")
                await c1.send("join_table", {"table_id": "t1", "seat": 1})
                assert (await c1.expect("error"))["code"] == "TABLE_FULL"
                c1.close()

        run(body())

    def test_second_seat_same_session_refused(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("create_table", {"seed": 1, "bots": {}})
                await c.expect("table_state")
                await c.send("join_table", {"table_id": "t1", "seat": 0})
                await c.expect("seat_assigned")
                await read_until(c, "table_state")
                await c.send("join_table", {"table_id": "t1", "seat": 1})
                assert (await read_until(c, "error"))["code"] == "ALREADY_SEATED"
                c.close()

        run(body())

    @pytest.mark.parametrize("seat", ["north", True, 7, -1])
    def test_bad_seat_values_refused(self, seat):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("create_table", {"seed": 1, "bots": {}})
                await c.expect("table_state")
                await c.send("join_table", {"table_id": "t1", "seat": seat})
                assert (await c.expect("error"))["code"] == "BAD_ACTION"
                c.close()

        run(body())

    def test_join_finished_table_refused(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("create_table", {"seed": 1, "bots": [0, 1, 2, 3]})
                await c.expect("table_state")
                await c.send("join_table", {"table_id": "t1"})
                assert (await c.expect("error"))["code"] == "TABLE_FULL"
                c.close()

        run(body())


class TestBotEquality:
    def test_all_bot_table_log_matches_offline_match(self, tmp_path):
        """A table of four bots produces byte-for-byte the log run_match
        writes for the same seed and lineup."""
        seed = 424242
        lineup = {"0": "random", "1": "greedy", "2": "conservative", "3": "random"}

        async def body():
            async with serving(logs_dir=str(tmp_path / "srv")) as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("create_table", {"seed": seed, "bots": lineup})
                state = await c.expect("table_state")
                assert state["status"] == "finished"
                c.close()

        run(body())

        agents = [
            make_agent(lineup[str(s)], derive_seed(seed, AGENT_SEED_OFFSET + s)) for s in range(4)
        ]
        result = run_match(RuleConfig(), agents, seed)
        offline = tmp_path / "offline.jsonl"
        write_jsonl(result.events, str(offline))
        server_log = (tmp_path / "srv" / "table_t1.jsonl").read_bytes()
        assert server_log == offline.read_bytes()


class TestHumanPlay:
    def test_human_match_completes_and_is_redacted(self, tmp_path):
        """One human plays a full match against three bots; every uid that
        reached its socket must be a card it dealt, received, or saw played."""

        async def body():
            async with serving(logs_dir=str(tmp_path)) as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send(
                    "create_table", {"seed": 31337, "bots": {"1": "random", "2": "greedy", "3": "conservative"}}
                )
                await c.expect("table_state")
                await c.send("join_table", {"table_id": "t1", "seat": 0})
                await c.expect("seat_assigned")
                ended = await drive_to_match_end(c, "t1")
                assert ended["winner"] in (0, 1, 2, 3)
                assert ended["reason"] in ("target_reached", "cutoff")
                assert len(ended["totals"]) == 4
                c.close()
                return c

        client = run(body())
        log = [json.loads(line) for line in (tmp_path / "table_t1.jsonl").read_text().splitlines()]
        allowed = allowed_uids_for_seat(log, seat=0)
        observed = observed_uids(client.received)
        assert observed <= allowed, f"leaked uids: {sorted(observed - allowed)}"

    def test_two_humans_reach_the_same_ending(self):
        async def body():
            async with serving() as server:
                c0 = await Client.connect(server.port)
                await c0.hello()
                await c0.send(
                    "create_table",
                    {"seed": 777, "bots": {"2": "random", "3": "random"}, "rules": {"max_shifts": 3}},
                )
                await c0.expect("table_state")
                await c0.send("join_table", {"table_id": "t1", "seat": 0})
                await c0.expect("seat_assigned")

                c1 = await Client.connect(server.port)
                await c1.hello()
                await c1.send("join_table", {"table_id": "t1", "seat": 1})
                await c1.expect("seat_assigned")

                endings = await asyncio.gather(
                    drive_to_match_end(c0, "t1"), drive_to_match_end(c1, "t1")
                )
                assert endings[0] == endings[1]
                c0.close()
                c1.close()

        run(body())


class TestRejections:
    def test_rejection_codes(self):
        """A four-human table driven to specific illegal submissions."""

        async def body():
            async with serving() as server:
                clients = []
                for _ in range(4):
                    c = await Client.connect(server.port)
                    await c.hello()
                    clients.append(c)
                await clients[0].send("create_table", {"seed": 99, "bots": {}})
                await clients[0].expect("table_state")
                for seat, c in enumerate(clients):
                    await c.send("join_table", {"table_id": "t1", "seat": seat})
                    body_ = await read_until(c, "seat_assigned")
                    assert body_["seat"] == seat

                view0 = (await read_until(clients[0], "view_update"))["view"]
                opener = view0["to_act"]
                actor = clients[opener]
                await read_until(actor, "your_turn")
                own = last_view(actor)["own_hand"]
                own_uids = {card["uid"] for card in own}

                # a bystander may not act
                bystander = clients[(opener + 1) % 4]
                await bystander.send(
                    "submit_action", {"table_id": "t1", "action": {"type": "pass"}}
                )
                rej = await read_until(bystander, "action_rejected")
                assert rej["code"] == "NOT_YOUR_TURN"

                # an outsider session is not seated at all
                outsider = await Client.connect(server.port)
                await outsider.hello()
                await outsider.send(
                    "submit_action", {"table_id": "t1", "action": {"type": "pass"}}
                )
                assert (await outsider.expect("action_rejected"))["code"] == "NOT_SEATED"
                await outsider.send(
                    "submit_action", {"table_id": "t9", "action": {"type": "pass"}}
                )
                assert (await outsider.expect("action_rejected"))["code"] == "UNKNOWN_TABLE"
                outsider.close()

                # malformed action objects
                await actor.send("submit_action", {"table_id": "t1", "action": 42})
                assert (await actor.expect("action_rejected"))["code"] == "BAD_ACTION"
                await actor.send("submit_action", {"table_id": "t1", "action": {"type": "play"}})
                assert (await actor.expect("action_rejected"))["code"] == "BAD_ACTION"

                # a card the actor does not hold
                foreign = next(u for u in range(68) if u not in own_uids)
                await actor.send(
                    "submit_action",
                    {
                        "table_id": "t1",
                        "action": {
                            "type": "play",
                            "face": CARDS[foreign].face,
                            "count": 1,
                            "uids": [foreign],
                        },
                    },
                )
                assert (await actor.expect("action_rejected"))["code"] == "CARDS_NOT_HELD"

                # open legally with the lowest single, then the next player
                # tries a card at least as common as the top of the pizza
                lowest = min(own, key=lambda card: (card["face"], card["uid"]))
                await actor.send(
                    "submit_action",
                    {
                        "table_id": "t1",
                        "action": {
                            "type": "play",
                            "face": lowest["face"],
                            "count": 1,
                            "uids": [lowest["uid"]],
                        },
                    },
                )
                assert (await actor.expect("action_accepted"))["table_id"] == "t1"

                follower = clients[(opener + 1) % 4]
                await read_until(follower, "your_turn")
                hand = last_view(follower)["own_hand"]
                too_common = max(hand, key=lambda card: (card["face"], card["uid"]))
                assert too_common["face"] >= lowest["face"]
                await follower.send(
                    "submit_action",
                    {
                        "table_id": "t1",
                        "action": {
                            "type": "play",
                            "face": too_common["face"],
                            "count": 1,
                            "uids": [too_common["uid"]],
                        },
                    },
                )
                assert (await follower.expect("action_rejected"))["code"] == "NOT_RARER"

                # rejection leaves the turn live: a legal pass still lands
                await follower.send(
                    "submit_action", {"table_id": "t1", "action": {"type": "pass"}}
                )
                assert (await follower.expect("action_accepted"))["table_id"] == "t1"

                for c in clients:
                    c.close()

        run(body())


class TestTimers:
    def test_silent_human_is_carried_by_timeouts(self, tmp_path):
        async def body():
            async with serving(logs_dir=str(tmp_path)) as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send(
                    "create_table",
                    {
                        "seed": 11,
                        "bots": {"1": "random", "2": "random", "3": "random"},
                        "rules": {"max_shifts": 2},
                        "turn_timer_ms": 80,
                    },
                )
                await c.expect("table_state")
                await c.send("join_table", {"table_id": "t1", "seat": 0})
                await c.expect("seat_assigned")
                ended = await read_until(c, "match_ended")
                assert ended["reason"] in ("target_reached", "cutoff")
                c.close()

        run(body())
        log_text = (tmp_path / "table_t1.jsonl").read_text()
        assert '"auto":"timeout"' in log_text


class TestGrace:
    def test_reconnect_within_grace_resumes_with_full_history(self):
        async def body():
            async with serving(grace_seconds=5.0) as server:
                c = await Client.connect(server.port)
                token = (await c.hello())["session"]
                await c.send(
                    "create_table",
                    {"seed": 21, "bots": {"1": "random", "2": "random", "3": "random"},
                     "rules": {"max_shifts": 1}},
                )
                await c.expect("table_state")
                await c.send("join_table", {"table_id": "t1", "seat": 0})
                await c.expect("seat_assigned")
                await read_until(c, "your_turn")
                c.close()
                await asyncio.sleep(0.05)

                c2 = await Client.connect(server.port)
                reply = await c2.hello(token)
                assert reply["resumed"] is True
                seat = await c2.expect("seat_assigned")
                assert seat == {"table_id": "t1", "seat": 0}
                update = await c2.expect("view_update")
                first = update["events"][0]
                assert first["kind"] == "match_started"
                assert "seed" not in first["payload"]
                # the interrupted turn is still live: answer it, then play on
                await c2.expect("your_turn")
                await c2.send(
                    "submit_action", {"table_id": "t1", "action": update["view"]["legal"][0]}
                )
                await c2.expect("action_accepted")
                ended = await drive_to_match_end(c2, "t1")
                assert ended["winner"] in (0, 1, 2, 3)
                c2.close()

        run(body())

    def test_abandoned_seat_falls_back_to_a_bot(self, tmp_path):
        async def body():
            async with serving(grace_seconds=0.2, logs_dir=str(tmp_path)) as server:
                c = await Client.connect(server.port)
                token = (await c.hello())["session"]
                await c.send(
                    "create_table",
                    {"seed": 22, "bots": {"1": "random", "2": "random", "3": "random"},
                     "rules": {"max_shifts": 1}},
                )
                await c.expect("table_state")
                await c.send("join_table", {"table_id": "t1", "seat": 0})
                await c.expect("seat_assigned")
                await read_until(c, "your_turn")
                c.close()

                deadline = asyncio.get_running_loop().time() + 10.0
                while True:
                    _, raw = await http_get(server.port, "/health")
                    health = json.loads(raw)
                    if health["tables"]["finished"] == 1:
                        break
                    assert asyncio.get_running_loop().time() < deadline, health
                    await asyncio.sleep(0.05)

                # the vanished player's session survives but owns no seat now
                c2 = await Client.connect(server.port)
                assert (await c2.hello(token))["resumed"] is True
                await c2.send("ping", {"nonce": "still-here"})
                pong = await c2.recv()
                assert pong["type"] == "pong"
                c2.close()

        run(body())
        assert (tmp_path / "table_t1.jsonl").exists()


class TestHttp:
    def test_health_counts_tables(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send("create_table", {"seed": 1, "bots": [0, 1, 2, 3]})
                await c.expect("table_state")
                await c.send("create_table", {"seed": 2, "bots": [1, 2, 3]})
                await c.expect("table_state")
                status, raw = await http_get(server.port, "/health")
                assert status == 200
                health = json.loads(raw)
                assert health["status"] == "ok"
                assert health["protocol_version"] == 1
                assert health["tables"] == {
                    "total": 2,
                    "lobby": 1,
                    "playing": 0,
                    "finished": 1,
                }
                c.close()

        run(body())

    def test_static_files(self, tmp_path):
        static = tmp_path / "www"
        (static / "sub").mkdir(parents=True)
        (static / "index.html").write_text("<h1>lobby</h1>")
        (static / "app.js").write_text("console.log('hi')")
        (static / "sub" / "notes.txt").write_text("hello")
        (tmp_path / "secret.txt").write_text("do not serve")

        async def body():
            async with serving(static_dir=str(static)) as server:
                status, raw = await http_get(server.port, "/")
                assert (status, raw) == (200, b"<h1>lobby</h1>")
                status, raw = await http_get(server.port, "/app.js")
                assert (status, raw) == (200, b"console.log('hi')")
                status, raw = await http_get(server.port, "/sub/notes.txt")
                assert (status, raw) == (200, b"hello")
                status, _ = await http_get(server.port, "/missing.html")
                assert status == 404
                status, _ = await http_get(server.port, "/../secret.txt")
                assert status == 404
                status, _ = await http_get(server.port, "/", method="POST")
                assert status == 405

        run(body())

    def test_no_static_dir_404(self):
        async def body():
            async with serving() as server:
                status, _ = await http_get(server.port, "/index.html")
                assert status == 404

        run(body())


async def read_server_frame(reader: asyncio.StreamReader) -> tuple[int, bytes]:
    """Parse one unmasked server-to-client WebSocket frame."""
    head = await asyncio.wait_for(reader.readexactly(2), 10.0)
    opcode = head[0] & 0x0F
    length = head[1] & 0x7F
    assert not head[1] & 0x80, "server frames must not be masked"
    if length == 126:
        length = int.from_bytes(await reader.readexactly(2), "big")
    elif length == 127:
        length = int.from_bytes(await reader.readexactly(8), "big")
    payload = await asyncio.wait_for(reader.readexactly(length), 10.0)
    return opcode, payload


class TestWebSocket:
    KEY = "dGhlIHNhbXBsZSBub25jZQ=="

    async def _upgrade(self, port: int) -> tuple[asyncio.StreamReader, asyncio.StreamWriter]:
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        writer.write(
            (
                "GET /ws HTTP/1.1\r\n"
                "Host: test\r\n"
                "Connection: Upgrade\r\n"
                "Upgrade: websocket\r\n"
                f"Sec-WebSocket-Key: {self.KEY}\r\n"
                "Sec-WebSocket-Version: 13\r\n"
                "\r\n"
            ).encode()
        )
        await writer.drain()
        head = await asyncio.wait_for(reader.readuntil(b"\r\n\r\n"), 10.0)
        assert b"101 Switching Protocols" in head
        assert ws_accept_key(self.KEY).encode() in head
        return reader, writer

    def test_hello_and_pong_over_websocket(self):
        async def body():
            async with serving() as server:
                reader, writer = await self._upgrade(server.port)
                hello = '{"body":{},"protocol_version":1,"type":"hello"}'
                writer.write(mask_client_frame(OP_TEXT, hello.encode()))
                await writer.drain()
                opcode, payload = await read_server_frame(reader)
                assert opcode == OP_TEXT
                frame = json.loads(payload)
                assert frame["type"] == "hello"
                assert len(frame["body"]["session"]) == 32

                writer.write(mask_client_frame(OP_PING, b"keepalive"))
                await writer.drain()
                opcode, payload = await read_server_frame(reader)
                assert (opcode, payload) == (OP_PONG, b"keepalive")

                writer.write(mask_client_frame(OP_CLOSE, (1000).to_bytes(2, "big")))
                await writer.drain()
                opcode, _ = await read_server_frame(reader)
                assert opcode == OP_CLOSE
                writer.close()

        run(body())

    def test_unmasked_client_frame_closes_1002(self):
        async def body():
            async with serving() as server:
                reader, writer = await self._upgrade(server.port)
                hello = '{"body":{},"protocol_version":1,"type":"hello"}'
                writer.write(bytes([0x80 | OP_TEXT, len(hello)]) + hello.encode())
                await writer.drain()
                opcode, payload = await read_server_frame(reader)
                assert opcode == OP_CLOSE
                assert int.from_bytes(payload[:2], "big") == 1002
                writer.close()

        run(body())

    def test_binary_frame_closes_1003(self):
        async def body():
            async with serving() as server:
                reader, writer = await self._upgrade(server.port)
                writer.write(mask_client_frame(OP_BINARY, b"\x00\x01"))
                await writer.drain()
                opcode, payload = await read_server_frame(reader)
                assert opcode == OP_CLOSE
                assert int.from_bytes(payload[:2], "big") == 1003
                writer.close()

        run(body())

    def test_full_session_over_websocket(self):
        """The same message flow as TCP, framed as WebSocket text."""

        async def body():
            async with serving() as server:
                reader, writer = await self._upgrade(server.port)

                async def send(mtype: str, wire_body: dict) -> None:
                    text = json.dumps(
                        {"body": wire_body, "protocol_version": 1, "type": mtype}
                    )
                    writer.write(mask_client_frame(OP_TEXT, text.encode()))
                    await writer.drain()

                async def recv() -> dict:
                    opcode, payload = await read_server_frame(reader)
                    assert opcode == OP_TEXT
                    return json.loads(payload)

                await send("hello", {})
                assert (await recv())["type"] == "hello"
                await send("create_table", {"seed": 3, "bots": [0, 1, 2, 3]})
                frame = await recv()
                assert frame["type"] == "table_state"
                assert frame["body"]["status"] == "finished"
                writer.close()

        run(body())


class TestGoldenTranscript:
    """A frozen end-to-end session pins protocol_version 1: if any frame
    shape, ordering, or payload drifts, this fails and the version must be
    bumped instead."""

    GOLDEN = os.path.join(GOLDEN_DIR, "session_transcript.jsonl")

    def test_scripted_session_matches_golden(self):
        async def body():
            async with serving() as server:
                c = await Client.connect(server.port)
                await c.hello()
                await c.send(
                    "create_table",
                    {
                        "seed": 2024,
                        "bots": {"1": "random", "2": "greedy", "3": "conservative"},
                        "rules": {"max_shifts": 1},
                        "turn_timer_ms": 0,
                    },
                )
                await c.expect("table_state")
                await c.send("join_table", {"table_id": "t1", "seat": 0})
                await c.expect("seat_assigned")
                await drive_to_match_end(c, "t1")
                c.close()
                return c

        client = run(body())
        token = client.received[0]["body"]["session"]
        lines = []
        for direction, frame in client.transcript:
            text = json.dumps(frame, sort_keys=True, separators=(",", ":"))
            lines.append(
                json.dumps(
                    {"dir": direction, "frame": json.loads(text.replace(token, "SESSION"))},
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
        produced = "\n".join(lines) + "\n"

        if not os.path.exists(self.GOLDEN):
            os.makedirs(GOLDEN_DIR, exist_ok=True)
            with open(self.GOLDEN, "w") as fh:
                fh.write(produced)
            pytest.fail(
                "golden transcript was missing; recorded a fresh one, "
                "inspect and commit it, then rerun"
            )
        with open(self.GOLDEN) as fh:
            expected = fh.read()
        assert produced == expected, (
            "wire transcript drifted from the committed protocol_version 1 golden"
        )
