"""Record the view-fixture corpus for the legality-mirroring test.

Plays seeded matches, folds their event logs step by step, and snapshots
player views at decision points: the acting seat (non-empty legal list) and
a spectator seat (empty legal list). The sample is stratified so the corpus
exercises every affordance path: opener views (pass is absent), pass-only
views (no play can follow the top), constrained views (some hand stagings
are illegal), and open-board views.

Deterministic: rerunning writes byte-identical JSON.

    python3 frontend/scripts/record_fixtures.py
"""

from __future__ import annotations

import os
from typing import Any

from chefshat import RuleConfig, derive_seed, evolve, make_agent, run_match
from chefshat.agents import build_view
from chefshat.events import canonical_json
from chefshat.match_engine import PHASE_MAKING_PIZZAS
from chefshat.simulator import AGENT_SEED_OFFSET

TOTAL = 50
SPECTATORS = 12
OPENERS = 4
PASS_ONLY = 3

OUT_PATH = os.path.join(os.path.dirname(__file__), "..", "test", "fixtures", "views.json")

LINEUPS = (
    ("random", "greedy", "conservative", "random"),
    ("conservative", "random", "random", "greedy"),
    ("greedy", "conservative", "greedy", "random"),
)


def candidate_count(view: dict[str, Any]) -> int:
    """Stagings the hand UI can reach: every face group at every count, +1
    for Pass. The corpus must offer more of these than legal admits."""
    by_face: dict[int, int] = {}
    for card in view["own_hand"]:
        by_face[card["face"]] = by_face.get(card["face"], 0) + 1
    return sum(by_face.values()) + 1  # counts 1..n per face is n stagings


def classify(view: dict[str, Any]) -> str:
    legal = view["legal"]
    if not legal:
        return "spectator"
    plays = [a for a in legal if a["type"] == "play"]
    has_pass = any(a["type"] == "pass" for a in legal)
    if not has_pass:
        return "opener"
    if not plays:
        return "pass_only"
    if candidate_count(view) > len(legal):
        return "constrained"
    return "open"


def collect_views() -> list[dict[str, Any]]:
    quotas = {
        "spectator": SPECTATORS,
        "opener": OPENERS,
        "pass_only": PASS_ONLY,
        "constrained": TOTAL - SPECTATORS - OPENERS - PASS_ONLY - 8,
        "open": 8,
    }
    assert sum(quotas.values()) == TOTAL
    picked: list[dict[str, Any]] = []
    # thin the stream so fixtures spread across shifts instead of clustering
    stride = {"spectator": 37, "opener": 11, "pass_only": 1, "constrained": 29, "open": 13}
    seen = dict.fromkeys(quotas, 0)

    for match_index in range(24):
        lineup = LINEUPS[match_index % len(LINEUPS)]
        seed = derive_seed(620_620, match_index)
        agents = [
            make_agent(name, derive_seed(seed, AGENT_SEED_OFFSET + s))
            for s, name in enumerate(lineup)
        ]
        result = run_match(RuleConfig(), agents, seed)
        state = None
        for event in result.events:
            state = evolve(state, event)
            if state.phase != PHASE_MAKING_PIZZAS or state.to_act is None:
                continue
            for seat in (state.to_act, (state.to_act + 1) % 4):
                view = build_view(state, seat).to_dict()
                bucket = classify(view)
                if quotas[bucket] == 0:
                    continue
                seen[bucket] += 1
                if seen[bucket] % stride[bucket] != 1 and stride[bucket] > 1:
                    continue
                quotas[bucket] -= 1
                picked.append(view)
        if all(v == 0 for v in quotas.values()):
            break
    leftovers = {k: v for k, v in quotas.items() if v}
    assert not leftovers, f"corpus incomplete, still need {leftovers}"
    return picked


def main() -> None:
    views = collect_views()
    os.makedirs(os.path.dirname(OUT_PATH), exist_ok=True)
    with open(OUT_PATH, "w", encoding="utf-8") as fh:
        fh.write(canonical_json({"fixtures": views}))
        fh.write("\n")
    kinds = [classify(v) for v in views]
    print(f"wrote {len(views)} views to {os.path.relpath(OUT_PATH)}")
    for kind in sorted(set(kinds)):
        print(f"  {kind:<12} {kinds.count(kind)}")


if __name__ == "__main__":
    main()
