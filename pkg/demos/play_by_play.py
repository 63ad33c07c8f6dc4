"""Narrate one seeded match, decision by decision, from its event log.

The engine records every transition as an event, so a readable play-by-play
is just a rendering pass over the log. Change SEED or the lineup and rerun;
the same inputs always reproduce the same story.

    python3 demos/play_by_play.py [seed]
"""

from __future__ import annotations

import sys

from chefshat import RuleConfig, derive_seed, make_agent, run_match
from chefshat.events import (
    CARDS_PLAYED,
    DEALT,
    EXCHANGE_FORCED,
    EXCHANGE_RETURNED,
    MATCH_ENDED,
    PASSED,
    PIZZA_DONE,
    PIZZA_OPENED,
    PLAYER_FINISHED,
    ROLES_ASSIGNED,
    SCORES_UPDATED,
    SHIFT_ENDED,
    SHIFT_STARTED,
    SPECIAL_ACTION_DECLARED,
    Event,
)
from chefshat.simulator import AGENT_SEED_OFFSET

SEED = 7070
LINEUP = ("random", "greedy", "conservative", "random")

PLACES = {1: "1st", 2: "2nd", 3: "3rd", 4: "4th"}


def who(seat: int) -> str:
    return f"seat {seat} ({LINEUP[seat]})"


def narrate(event: Event) -> str | None:
    p = event.payload
    if event.kind == SHIFT_STARTED:
        return f"\n=== Shift {p['shift']} ==="
    if event.kind == DEALT:
        return f"  {who(p['seat'])} picks up 17 cards"
    if event.kind == SPECIAL_ACTION_DECLARED:
        if not p:
            return "  nobody declares a special action"
        return f"  {who(p['declarer'])} declares {p['kind'].upper()}!"
    if event.kind == EXCHANGE_FORCED:
        return f"  exchange: {len(p['uids'])} best cards move seat {p['from_seat']} -> seat {p['to_seat']}"
    if event.kind == EXCHANGE_RETURNED:
        return f"  exchange: {len(p['uids'])} cards returned seat {p['from_seat']} -> seat {p['to_seat']}"
    if event.kind == PIZZA_OPENED:
        return f"  -- new pizza, {who(p['opener'])} opens"
    if event.kind == CARDS_PLAYED:
        note = " (auto)" if "auto" in p else ""
        return f"  {who(p['seat'])} plays {p['count']} x face {p['face']}{note}"
    if event.kind == PASSED:
        note = " (auto)" if "auto" in p else ""
        return f"  {who(p['seat'])} passes{note}"
    if event.kind == PIZZA_DONE:
        return f"  -- pizza done, {who(p['leader'])} leads the next"
    if event.kind == PLAYER_FINISHED:
        return f"  * {who(p['seat'])} empties their hand in {PLACES[p['place']]} place"
    if event.kind == SHIFT_ENDED:
        order = ", ".join(who(s) for s in p["finishing_order"])
        return f"  shift {p['shift']} over; finishing order: {order}"
    if event.kind == ROLES_ASSIGNED:
        roles = ", ".join(f"seat {s}={r}" for s, r in enumerate(p["roles"]))
        return f"  roles: {roles}"
    if event.kind == SCORES_UPDATED:
        totals = ", ".join(f"seat {s}: {t}" for s, t in enumerate(p["totals"]))
        return f"  scores: {totals}"
    if event.kind == MATCH_ENDED:
        return f"\n{who(p['winner']).upper()} WINS ({p['reason']}), totals {p['totals']}"
    return None  # match_started: the header below covers it


def main() -> None:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else SEED
    agents = [make_agent(name, derive_seed(seed, AGENT_SEED_OFFSET + s)) for s, name in enumerate(LINEUP)]
    result = run_match(RuleConfig(), agents, seed)

    print(f"match seed {seed}, lineup {', '.join(LINEUP)}")
    for event in result.events:
        line = narrate(event)
        if line is not None:
            print(line)
    print(f"\n{len(result.events)} events, {result.summary.shifts} shifts, {result.summary.pizzas} pizzas")


if __name__ == "__main__":
    main()
