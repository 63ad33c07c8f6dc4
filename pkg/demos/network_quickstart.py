"""Start a server in-process and talk to it over plain TCP, line by line.

Everything a client needs is newline-delimited JSON: greet, create a table
with three bots, claim the open seat, then answer prompts by picking from
the `legal` list the server sends with every view. The same dialogue works
over a WebSocket text channel on the same port. Message schemas live in
docs/protocol.md.

    python3 demos/network_quickstart.py
"""

from __future__ import annotations

import asyncio
import json

from chefshat import GameServer
from chefshat.wire import PROTOCOL_VERSION, encode_message

SEED = 4242


async def recv(reader: asyncio.StreamReader) -> tuple[str, dict]:
    frame = json.loads(await reader.readline())
    assert frame["protocol_version"] == PROTOCOL_VERSION
    return frame["type"], frame["body"]


async def play() -> None:
    server = GameServer(host="127.0.0.1", port=0, turn_timer=0.0)
    await server.start()  # port 0 binds an ephemeral port, read back from .port
    print(f"server listening on 127.0.0.1:{server.port}")

    reader, writer = await asyncio.open_connection("127.0.0.1", server.port)

    def send(mtype: str, body: dict) -> None:
        writer.write(encode_message(mtype, body).encode("utf-8"))

    send("hello", {})
    _, body = await recv(reader)
    print(f"session {body['session'][:8]}..., resumed={body['resumed']}")

    send(
        "create_table",
        {"seed": SEED, "bots": {"1": "random", "2": "greedy", "3": "conservative"}},
    )
    _, body = await recv(reader)
    table = body["table_id"]
    print(f"table {table}: {[s['kind'] for s in body['seats']]}")

    send("join_table", {"table_id": table})
    _, body = await recv(reader)
    print(f"joined seat {body['seat']}; match starts when the last seat fills")

    view: dict = {}
    plays = passes = 0
    while True:
        mtype, body = await recv(reader)
        if mtype == "view_update":
            view = body["view"]
        elif mtype == "your_turn":
            action = view["legal"][0]  # lowest play, or pass when nothing's legal
            plays += action["type"] == "play"
            passes += action["type"] == "pass"
            send("submit_action", {"table_id": table, "action": action})
        elif mtype == "special_action_prompt":
            send("submit_action", {"table_id": table, "action": {"type": "declare", "accept": False}})
        elif mtype == "exchange_prompt":
            keep = sorted(body["pool"])[: body["return_count"]]
            send("submit_action", {"table_id": table, "action": {"type": "exchange_return", "uids": keep}})
        elif mtype == "action_rejected":
            raise AssertionError(f"server rejected a move it offered: {body}")
        elif mtype == "match_ended":
            print(f"match over: seat {body['winner']} wins ({body['reason']}), totals {body['totals']}")
            break

    print(f"we made {plays} plays and {passes} passes, always the first legal option")
    writer.close()
    await writer.wait_closed()
    await server.stop()


if __name__ == "__main__":
    asyncio.run(play())
