"""Per-seat observations and baseline policies.

A PlayerView is the only thing an agent (or a network client) ever sees:
its own cards, public table state, and its legal actions. Views are built
here by construction — other seats' card identities are simply never copied
in — so redaction does not depend on policy code behaving well.

Three deterministic baselines ship with the engine: random (uniform over
legal actions), greedy (sheds as many cards as possible), and conservative
(sheds as few as possible, hoarding rare cards and Jokers). All are seeded
and reproducible; the policy interface is the seam where learned strategies
would plug in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from .core_rules import (
    CARDS,
    JOKER_FACE,
    Action,
    Card,
    PassAction,
    PizzaState,
    PlayAction,
    legal_actions,
)
from .events import MATCH_STARTED, Event
from .match_engine import FOOD_FIGHT, PHASE_MAKING_PIZZAS, MatchState
from .rng import SplitMix64


@dataclass(slots=True)
class PlayerView:
    """Everything one seat may observe. legal is non-empty only when it is
    this seat's turn to act."""

    seat: int
    shift_number: int
    phase: str
    own_hand: tuple[Card, ...]
    hand_sizes: tuple[int, int, int, int]
    pizza: PizzaState
    board: tuple[int, ...]
    roles: tuple[str, str, str, str] | None
    scores: tuple[int, int, int, int]
    legal: tuple[Action, ...]
    to_act: int | None
    winner: int | None
    public_history: tuple[Event, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "seat": self.seat,
            "shift_number": self.shift_number,
            "phase": self.phase,
            "own_hand": [c.to_dict() for c in self.own_hand],
            "hand_sizes": list(self.hand_sizes),
            "pizza": self.pizza.to_dict(),
            "board": list(self.board),
            "roles": list(self.roles) if self.roles is not None else None,
            "scores": list(self.scores),
            "legal": [a.to_dict() for a in self.legal],
            "to_act": self.to_act,
            "winner": self.winner,
        }


def public_form(event: Event) -> Event:
    """The shape of an event as it may appear in any seat's history: the
    match seed (which determines every hand) is stripped from match_started;
    all other public events pass through unchanged."""
    if event.kind == MATCH_STARTED and "seed" in event.payload:
        payload = {k: v for k, v in event.payload.items() if k != "seed"}
        return Event(
            seq=event.seq, shift=event.shift, kind=event.kind, payload=payload, private_to=None
        )
    return event


def public_events(events: Sequence[Event]) -> list[Event]:
    return [public_form(ev) for ev in events if ev.private_to is None]


def build_view(state: MatchState, seat: int, history: tuple[Event, ...] = ()) -> PlayerView:
    my_turn = state.phase == PHASE_MAKING_PIZZAS and state.to_act == seat
    hands = state.hands
    hand = hands[seat]
    # positional: built once per decision, the second-hottest object after events
    return PlayerView(
        seat,
        state.shift_number,
        state.phase,
        hand.cards,
        (len(hands[0].cards), len(hands[1].cards), len(hands[2].cards), len(hands[3].cards)),
        state.pizza,
        state.board,
        state.roles,
        state.scores,
        legal_actions(state.pizza, hand, seat) if my_turn else (),
        state.to_act,
        state.winner,
        history,
    )


class AgentPolicy:
    """Base policy: seeded, seat-agnostic, deterministic.

    decide_play must return a member of view.legal (the engine re-validates
    regardless). decide_exchange_return picks k uids from the union of the
    current hand and the just-received cards. decide_special_action answers
    an offered two-Joker declaration.
    """

    name = "base"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = SplitMix64(seed)

    def decide_play(self, view: PlayerView) -> Action:
        raise NotImplementedError

    def decide_exchange_return(
        self, view: PlayerView, received: tuple[int, ...], k: int
    ) -> tuple[int, ...]:
        raise NotImplementedError

    def decide_special_action(self, view: PlayerView, offered_kind: str) -> bool:
        raise NotImplementedError

    def _return_pool(self, view: PlayerView, received: tuple[int, ...]) -> list[int]:
        return sorted({c.uid for c in view.own_hand} | set(received))


class RandomAgent(AgentPolicy):
    """Uniform over view.legal; every other choice uniform too."""

    name = "random"

    def decide_play(self, view: PlayerView) -> Action:
        return view.legal[self.rng.randbelow(len(view.legal))]

    def decide_exchange_return(
        self, view: PlayerView, received: tuple[int, ...], k: int
    ) -> tuple[int, ...]:
        pool = self._return_pool(view, received)
        picks = self.rng.sample_indices(len(pool), k)
        return tuple(pool[i] for i in picks)

    def decide_special_action(self, view: PlayerView, offered_kind: str) -> bool:
        return self.rng.coin()


class GreedyAgent(AgentPolicy):
    """Sheds as many cards as possible: maximum count, ties to the highest
    face (commons first, rare cards kept). Returns its highest faces in the
    exchange; accepts FoodFight, declines DinnerIsServed."""

    name = "greedy"

    def decide_play(self, view: PlayerView) -> Action:
        plays = [a for a in view.legal if isinstance(a, PlayAction)]
        if not plays:
            return view.legal[-1]
        return max(plays, key=lambda a: (a.count, a.face))

    def decide_exchange_return(
        self, view: PlayerView, received: tuple[int, ...], k: int
    ) -> tuple[int, ...]:
        pool = self._return_pool(view, received)
        pool.sort(key=lambda u: (-CARDS[u].face, u))
        return tuple(pool[:k])

    def decide_special_action(self, view: PlayerView, offered_kind: str) -> bool:
        return offered_kind == FOOD_FIGHT


class ConservativeAgent(AgentPolicy):
    """Sheds as few cards as possible: minimum count, ties to the highest
    face; never spends a Joker while any other play exists. Returns its
    highest non-Joker faces in the exchange; declines special actions."""

    name = "conservative"

    def decide_play(self, view: PlayerView) -> Action:
        plays = [a for a in view.legal if isinstance(a, PlayAction)]
        if not plays:
            return view.legal[-1]
        keep = [a for a in plays if a.face != JOKER_FACE]
        return min(keep or plays, key=lambda a: (a.count, -a.face))

    def decide_exchange_return(
        self, view: PlayerView, received: tuple[int, ...], k: int
    ) -> tuple[int, ...]:
        pool = self._return_pool(view, received)
        pool.sort(key=lambda u: (CARDS[u].face == JOKER_FACE, -CARDS[u].face, u))
        return tuple(pool[:k])

    def decide_special_action(self, view: PlayerView, offered_kind: str) -> bool:
        return False


AGENT_FACTORIES: dict[str, type[AgentPolicy]] = {
    "random": RandomAgent,
    "greedy": GreedyAgent,
    "conservative": ConservativeAgent,
}


def make_agent(name: str, seed: int) -> AgentPolicy:
    try:
        factory = AGENT_FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown agent {name!r}; available: {', '.join(sorted(AGENT_FACTORIES))}"
        ) from None
    return factory(seed)
