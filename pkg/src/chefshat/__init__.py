"""Deterministic rules engine, tournament simulator, and match server for
the Chef's Hat card game.

The package is layered bottom-up: core_rules (cards, legality), events
(canonical log records), match_engine (the event-sourced reducer), agents
(player views and baseline policies), simulator (matches and tournaments),
wire + server (the network protocol). Each layer imports only downward;
anything here can also be imported from its home module directly.
"""

from __future__ import annotations

from .agents import AGENT_FACTORIES, AgentPolicy, PlayerView, build_view, make_agent
from .core_rules import (
    CARDS,
    PASS,
    Card,
    Deck,
    Hand,
    InvalidConfigError,
    PassAction,
    PizzaState,
    PlayAction,
    Reason,
    RuleConfig,
    build_deck,
    deal,
    legal_actions,
    validate_play,
)
from .events import CorruptLogError, Event, canonical_json, read_jsonl, write_jsonl
from .match_engine import MatchState, evolve, replay, state_json
from .rng import SplitMix64, derive_seed
from .simulator import (
    MatchResult,
    MatchSummary,
    TournamentConfig,
    TournamentStats,
    run_match,
    run_tournament,
)
from .wire import PROTOCOL_VERSION

__version__ = "0.1.0"


def __getattr__(name: str):
    # the server pulls in asyncio; keep plain imports of the package light
    if name == "GameServer":
        from .server import GameServer

        return GameServer
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

__all__ = [
    "AGENT_FACTORIES",
    "AgentPolicy",
    "CARDS",
    "Card",
    "CorruptLogError",
    "Deck",
    "Event",
    "GameServer",
    "Hand",
    "InvalidConfigError",
    "MatchResult",
    "MatchState",
    "MatchSummary",
    "PASS",
    "PROTOCOL_VERSION",
    "PassAction",
    "PizzaState",
    "PlayAction",
    "PlayerView",
    "Reason",
    "RuleConfig",
    "SplitMix64",
    "TournamentConfig",
    "TournamentStats",
    "build_deck",
    "build_view",
    "canonical_json",
    "deal",
    "derive_seed",
    "evolve",
    "legal_actions",
    "make_agent",
    "read_jsonl",
    "replay",
    "run_match",
    "run_tournament",
    "state_json",
    "validate_play",
    "write_jsonl",
]
