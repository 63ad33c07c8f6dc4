"""Match events and their canonical serialization.

Every state transition is recorded as an Event; the reducer in match_engine
consumes the same events to evolve state, so a written log replays to the
exact live state. Canonical form: UTF-8 JSON, lexicographically sorted keys,
compact separators, integers only (floats are rejected), LF line endings,
one event per line (JSON Lines).

Event kinds and their payload schemas are documented in docs/formats.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Iterator

MATCH_STARTED = "match_started"
SHIFT_STARTED = "shift_started"
DEALT = "dealt"
SPECIAL_ACTION_DECLARED = "special_action_declared"
EXCHANGE_FORCED = "exchange_forced"
EXCHANGE_RETURNED = "exchange_returned"
PIZZA_OPENED = "pizza_opened"
CARDS_PLAYED = "cards_played"
PASSED = "passed"
PIZZA_DONE = "pizza_done"
PLAYER_FINISHED = "player_finished"
SHIFT_ENDED = "shift_ended"
ROLES_ASSIGNED = "roles_assigned"
SCORES_UPDATED = "scores_updated"
MATCH_ENDED = "match_ended"

EVENT_KINDS = frozenset(
    {
        MATCH_STARTED,
        SHIFT_STARTED,
        DEALT,
        SPECIAL_ACTION_DECLARED,
        EXCHANGE_FORCED,
        EXCHANGE_RETURNED,
        PIZZA_OPENED,
        CARDS_PLAYED,
        PASSED,
        PIZZA_DONE,
        PLAYER_FINISHED,
        SHIFT_ENDED,
        ROLES_ASSIGNED,
        SCORES_UPDATED,
        MATCH_ENDED,
    }
)

#: Kinds whose payload reveals concealed cards; carried with private_to set.
PRIVATE_KINDS = frozenset({DEALT, EXCHANGE_FORCED, EXCHANGE_RETURNED})


class CorruptLogError(Exception):
    """A log line or event sequence that cannot have come from the engine."""


class NonCanonicalValueError(ValueError):
    """A value outside the canonical-serialization domain (e.g. a float)."""


@dataclass(slots=True)
class Event:
    """One transition record. private_to is the only seat whose client may
    see the payload; None means public. Treated as immutable after creation.
    """

    seq: int
    shift: int
    kind: str
    payload: dict[str, Any]
    private_to: int | None = None

    @property
    def is_public(self) -> bool:
        return self.private_to is None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "payload": self.payload,
            "private_to": self.private_to,
            "seq": self.seq,
            "shift": self.shift,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Event":
        try:
            kind = d["kind"]
            seq = d["seq"]
            shift = d["shift"]
            payload = d["payload"]
            private_to = d["private_to"]
        except (KeyError, TypeError) as exc:
            raise CorruptLogError(f"event record missing field: {exc}") from None
        if kind not in EVENT_KINDS:
            raise CorruptLogError(f"unknown event kind {kind!r}")
        if not isinstance(seq, int) or not isinstance(shift, int) or isinstance(seq, bool):
            raise CorruptLogError("seq and shift must be integers")
        if not isinstance(payload, dict):
            raise CorruptLogError("payload must be an object")
        if private_to is not None and private_to not in (0, 1, 2, 3):
            raise CorruptLogError(f"bad private_to {private_to!r}")
        if (kind in PRIVATE_KINDS) != (private_to is not None):
            raise CorruptLogError(f"redaction class mismatch for {kind}")
        return cls(seq=seq, shift=shift, kind=kind, payload=payload, private_to=private_to)


def _check_canonical(value: Any) -> None:
    if isinstance(value, float):
        raise NonCanonicalValueError(f"float {value!r} is not canonical; integers only")
    if isinstance(value, dict):
        for k, v in value.items():
            if not isinstance(k, str):
                raise NonCanonicalValueError(f"non-string key {k!r}")
            _check_canonical(v)
    elif isinstance(value, (list, tuple)):
        for v in value:
            _check_canonical(v)
    elif value is not None and not isinstance(value, (str, int, bool)):
        raise NonCanonicalValueError(f"unserializable value {value!r}")


def canonical_json(value: Any) -> str:
    """Canonical single-line JSON: sorted keys, compact, no floats."""
    _check_canonical(value)
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def encode_event(event: Event) -> str:
    return canonical_json(event.to_dict())


def decode_event(line: str) -> Event:
    try:
        d = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptLogError(f"bad JSON line: {exc}") from None
    if not isinstance(d, dict):
        raise CorruptLogError("event line is not an object")
    return Event.from_dict(d)


def write_jsonl(events: Iterable[Event], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for ev in events:
            f.write(encode_event(ev))
            f.write("\n")


def read_jsonl(path: str) -> list[Event]:
    return list(iter_jsonl(path))


def iter_jsonl(path: str) -> Iterator[Event]:
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield decode_event(line)
