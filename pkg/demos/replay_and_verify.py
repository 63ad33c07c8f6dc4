"""Write a match log, replay it to the identical state, then corrupt it.

The point of event sourcing here: the log is the match. Replaying the
JSONL file rebuilds the exact final state (byte-for-byte as canonical
JSON), and strict replay refuses logs that claim impossible transitions,
so a corrupted or hand-edited record cannot masquerade as a real one.

    python3 demos/replay_and_verify.py
"""

from __future__ import annotations

import os
import tempfile

from chefshat import (
    CorruptLogError,
    RuleConfig,
    derive_seed,
    make_agent,
    read_jsonl,
    replay,
    run_match,
    state_json,
    write_jsonl,
)
from chefshat.simulator import AGENT_SEED_OFFSET

SEED = 2468
LINEUP = ("greedy", "random", "random", "conservative")


def main() -> None:
    agents = [make_agent(name, derive_seed(SEED, AGENT_SEED_OFFSET + s)) for s, name in enumerate(LINEUP)]
    result = run_match(RuleConfig(), agents, SEED)
    live = state_json(result.final_state)

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "match.jsonl")
        write_jsonl(result.events, path)
        size = os.path.getsize(path)
        print(f"live match: {len(result.events)} events, log {size} bytes")

        events = read_jsonl(path)
        replayed = state_json(replay(events))
        print(f"replayed state == live state: {replayed == live}")

        # flip one digit inside a cards_played payload and replay again
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
        victim = next(i for i, ln in enumerate(lines) if '"cards_played"' in ln)
        lines[victim] = lines[victim].replace('"count":1', '"count":2', 1)
        tampered = os.path.join(tmp, "tampered.jsonl")
        with open(tampered, "w", encoding="utf-8") as fh:
            fh.writelines(lines)

        print(f"tampering with event {victim} (count 1 -> 2) ...")
        try:
            replay(read_jsonl(tampered))
        except CorruptLogError as exc:
            print(f"strict replay refused it: {exc}")
        else:
            raise AssertionError("tampered log replayed cleanly")


if __name__ == "__main__":
    main()
