"""Event-sourced match orchestration: shifts, exchanges, special actions,
pizza loop, scoring, and replay.

Every public operation returns ``(new_state, events)`` where the new state is
produced by folding the returned events through the single reducer
:func:`evolve` — the same reducer :func:`replay` uses — so a written log
reconstructs live state byte-for-byte under canonical serialization.

Shift lifecycle: ``start_shift`` (re-deal) → ``resolve_special_action`` →
``perform_exchange`` (unless suppressed) → repeated ``step`` calls until three
seats empty their hands, at which point the shift finalizes itself: the last
seat is appended to the finishing order, roles are assigned (1st Chef, 2nd
Sous-Chef, 3rd Waiter, 4th Dishwasher), per-role points are added (3/2/1/0),
and a winner is declared once a seat reaches the target score — ties broken
by the higher role held during the shift — or when the shift cutoff hits.

Shift 1 is special: no roles exist yet, so it has no special-action window
and no exchange; the Golden 11 holder opens its first pizza directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from .core_rules import (
    BOARD_SLOTS,
    CARDS,
    GOLDEN_UID,
    PASS,
    Action,
    Hand,
    IllegalActionError,
    PassAction,
    PizzaState,
    PlayAction,
    Reason,
    RuleConfig,
    RulesError,
    apply_pass,
    apply_play,
    build_deck,
    deal_with_rng,
    is_pizza_done,
    new_pizza,
    validate_play,
)
from .events import (
    CARDS_PLAYED,
    DEALT,
    EXCHANGE_FORCED,
    EXCHANGE_RETURNED,
    MATCH_ENDED,
    MATCH_STARTED,
    PASSED,
    PIZZA_DONE,
    PIZZA_OPENED,
    PLAYER_FINISHED,
    ROLES_ASSIGNED,
    SCORES_UPDATED,
    SHIFT_ENDED,
    SHIFT_STARTED,
    SPECIAL_ACTION_DECLARED,
    CorruptLogError,
    Event,
    canonical_json,
)
from .rng import SplitMix64

CHEF = "chef"
SOUS_CHEF = "sous_chef"
WAITER = "waiter"
DISHWASHER = "dishwasher"

#: Role kinds by rank: index 0 outranks index 3; also the finishing-order
#: assignment (1st place Chef .. 4th place Dishwasher).
ROLE_ORDER = (CHEF, SOUS_CHEF, WAITER, DISHWASHER)

#: Physical attribute each role wears at the table.
ROLE_ATTRIBUTES = {
    CHEF: "chef_hat",
    SOUS_CHEF: "sous_chef_hat",
    WAITER: "bow_tie",
    DISHWASHER: "cloth",
}

ROLE_RANK = {kind: i for i, kind in enumerate(ROLE_ORDER)}

FOOD_FIGHT = "food_fight"
DINNER_IS_SERVED = "dinner_is_served"

PHASE_SPECIAL_ACTION_WINDOW = "special_action_window"
PHASE_EXCHANGE = "exchange"
PHASE_MAKING_PIZZAS = "making_pizzas"
PHASE_SHIFT_ENDED = "shift_ended"

END_TARGET_REACHED = "target_reached"
END_CUTOFF = "cutoff"

JOKER_UIDS = (66, 67)


class WrongPhaseError(RulesError):
    pass


class MatchAlreadyOverError(RulesError):
    pass


class InvalidDeclarationError(RulesError):
    pass


@dataclass(frozen=True, slots=True)
class SpecialAction:
    """A two-Joker declaration: FoodFight by the Dishwasher, DinnerIsServed
    by anyone else."""

    kind: str
    declarer: int


@dataclass(frozen=True, slots=True)
class ExchangePrompts:
    """Pure preview of the forced exchange, for the returning policies.

    The forced gives are engine-computed; ``chef_hand_after`` and
    ``sous_chef_hand_after`` are the receivers' hands including the received
    cards, from which the free returns must be chosen.
    """

    chef_seat: int
    sous_chef_seat: int
    waiter_seat: int
    dishwasher_seat: int
    dishwasher_gives: tuple[int, int]
    waiter_gives: tuple[int]
    chef_hand_after: tuple[int, ...]
    sous_chef_hand_after: tuple[int, ...]
    chef_returns: int = 2
    sous_chef_returns: int = 1


@dataclass(slots=True)
class MatchState:
    """Full authoritative match snapshot. Treated as immutable: every
    transition builds a new instance via the reducer."""

    config: RuleConfig
    seed: int
    shift_number: int
    scores: tuple[int, int, int, int]
    roles: tuple[str, str, str, str] | None
    hands: tuple[Hand, Hand, Hand, Hand]
    pizza: PizzaState
    board: tuple[int, ...]
    discard: tuple[int, ...]
    finishing_order: tuple[int, ...]
    phase: str
    rng_state: int
    winner: int | None
    end_reason: str | None
    to_act: int | None
    next_seq: int

    def active_seats(self) -> set[int]:
        return {s for s in range(4) if self.hands[s].cards}

    def golden_holder(self) -> int:
        for s in range(4):
            if GOLDEN_UID in self.hands[s].uids():
                return s
        raise RulesError("no seat holds the golden card")

    def seat_of_role(self, kind: str) -> int:
        if self.roles is None:
            raise RulesError("roles not assigned yet")
        return self.roles.index(kind)

    def to_dict(self) -> dict[str, Any]:
        return {
            "board": list(self.board),
            "config": self.config.to_dict(),
            "discard": list(self.discard),
            "end_reason": self.end_reason,
            "finishing_order": list(self.finishing_order),
            "hands": [list(h.uids()) for h in self.hands],
            "next_seq": self.next_seq,
            "phase": self.phase,
            "pizza": self.pizza.to_dict(),
            "rng_state": self.rng_state,
            "roles": list(self.roles) if self.roles is not None else None,
            "scores": list(self.scores),
            "seed": self.seed,
            "shift_number": self.shift_number,
            "to_act": self.to_act,
            "winner": self.winner,
        }


def state_json(state: MatchState) -> str:
    """Canonical serialization of a state, for byte-exact comparison."""
    return canonical_json(state.to_dict())


# ----------------------------------------------------------------- reducer


def _fail(strict: bool, msg: str) -> None:
    if strict:
        raise CorruptLogError(msg)


def _replace_hand(hands: tuple[Hand, ...], seat: int, hand: Hand) -> tuple[Hand, ...]:
    return hands[:seat] + (hand,) + hands[seat + 1 :]


def _move_cards(
    hands: tuple[Hand, ...], from_seat: int, to_seat: int, uids: Iterable[int]
) -> tuple[Hand, ...]:
    uids = tuple(uids)
    giver = hands[from_seat].without_uids(uids)
    taker = hands[to_seat]
    merged = tuple(sorted(taker.cards + tuple(CARDS[u] for u in uids), key=lambda c: c.uid))
    hands = _replace_hand(hands, from_seat, giver)
    return _replace_hand(hands, to_seat, Hand(owner=to_seat, cards=merged))


def evolve(state: MatchState | None, event: Event, strict: bool = False) -> MatchState:
    """Apply one event. The only function that builds new MatchStates; both
    live operations (strict=False, preconditions guaranteed by the deciders)
    and replay (strict=True, everything checked) run through it."""
    kind = event.kind
    p = event.payload

    if state is None:
        if kind != MATCH_STARTED:
            raise CorruptLogError(f"log must open with {MATCH_STARTED}, got {kind}")
        if event.seq != 0:
            raise CorruptLogError("match_started must have seq 0")
        try:
            config = RuleConfig.from_dict(p["config"])
            seed = p["seed"]
        except (KeyError, TypeError) as exc:
            raise CorruptLogError(f"bad match_started payload: {exc}") from None
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise CorruptLogError("seed must be a non-negative integer")
        empty = tuple(Hand(owner=s, cards=()) for s in range(4))
        return MatchState(
            config=config,
            seed=seed,
            shift_number=0,
            scores=(0, 0, 0, 0),
            roles=None,
            hands=empty,  # type: ignore[arg-type]
            pizza=new_pizza(0),
            board=(),
            discard=(),
            finishing_order=(),
            phase=PHASE_SHIFT_ENDED,
            rng_state=seed,
            winner=None,
            end_reason=None,
            to_act=None,
            next_seq=1,
        )

    if kind == MATCH_STARTED:
        raise CorruptLogError("match_started appears twice")
    if strict and event.seq != state.next_seq:
        raise CorruptLogError(f"seq gap: expected {state.next_seq}, got {event.seq}")
    if strict and event.shift != state.shift_number and kind != SHIFT_STARTED:
        raise CorruptLogError(f"event shift {event.shift} does not match {state.shift_number}")
    seq = state.next_seq + 1 if not strict else event.seq + 1

    # per-turn kinds first: they are the overwhelming majority of a log
    if kind == PASSED:
        seat = p["seat"]
        if strict:
            if state.phase != PHASE_MAKING_PIZZAS:
                raise CorruptLogError("passed outside making_pizzas")
            if seat != state.to_act:
                raise CorruptLogError("passed by a seat not on turn")
            res = validate_play(state.pizza, state.hands[seat], PASS, seat)
            if not res.legal:
                raise CorruptLogError(f"illegal pass in log: {res.reason.value}")
        pizza = apply_pass(state.pizza, seat)
        return _bump(state, seq, pizza=pizza, to_act=_next_actor(pizza, state.hands, seat))

    if kind == CARDS_PLAYED:
        seat = p["seat"]
        action = PlayAction(face=p["face"], count=p["count"], card_uids=tuple(p["uids"]))
        if strict:
            if state.phase != PHASE_MAKING_PIZZAS:
                raise CorruptLogError("cards_played outside making_pizzas")
            if seat != state.to_act:
                raise CorruptLogError("cards_played by a seat not on turn")
            res = validate_play(state.pizza, state.hands[seat], action, seat)
            if not res.legal:
                raise CorruptLogError(f"illegal cards_played in log: {res.reason.value}")
            pizza, hand = apply_play(state.pizza, state.hands[seat], action, seat)
        else:
            prev = state.pizza
            pizza = PizzaState(
                opener=prev.opener,
                slots_used=prev.slots_used + action.count,
                top_face=action.face,
                top_count=action.count,
                passed=prev.passed,
                last_player_to_play=seat,
            )
            hand = state.hands[seat].without_uids(action.card_uids)
        hands = _replace_hand(state.hands, seat, hand)
        return _bump(
            state,
            seq,
            hands=hands,
            pizza=pizza,
            board=state.board + action.card_uids,
            to_act=_next_actor(pizza, hands, seat),
        )

    if kind == PIZZA_OPENED:
        opener = p.get("opener")
        if strict:
            if opener not in (0, 1, 2, 3):
                raise CorruptLogError("pizza_opened: bad opener")
            if state.phase == PHASE_SHIFT_ENDED:
                raise CorruptLogError("pizza_opened outside a shift")
            if not state.hands[opener].cards:
                raise CorruptLogError("pizza_opened: opener has no cards")
            if state.board:
                raise CorruptLogError("pizza_opened with cards still on the board")
        return _bump(
            state,
            seq,
            pizza=new_pizza(opener),
            board=(),
            to_act=opener,
            phase=PHASE_MAKING_PIZZAS,
        )

    if kind == PIZZA_DONE:
        if strict:
            if state.phase != PHASE_MAKING_PIZZAS:
                raise CorruptLogError("pizza_done outside making_pizzas")
            if not is_pizza_done(state.pizza, state.active_seats()):
                raise CorruptLogError("pizza_done while the pizza is still contested")
            if p.get("leader") != state.pizza.last_player_to_play:
                raise CorruptLogError("pizza_done leader mismatch")
        discard = tuple(sorted(state.discard + state.board))
        return _bump(state, seq, board=(), discard=discard, to_act=None)

    if kind == PLAYER_FINISHED:
        seat, place = p["seat"], p["place"]
        if strict:
            if seat in state.finishing_order:
                raise CorruptLogError("player_finished twice for one seat")
            if place != len(state.finishing_order) + 1:
                raise CorruptLogError("player_finished out of order")
            if place <= 3 and state.hands[seat].cards:
                raise CorruptLogError("player_finished for a seat still holding cards")
        return _bump(state, seq, finishing_order=state.finishing_order + (seat,))

    if kind == SHIFT_STARTED:
        if strict:
            if state.phase != PHASE_SHIFT_ENDED:
                raise CorruptLogError("shift_started outside shift boundary")
            if state.winner is not None:
                raise CorruptLogError("shift_started after match end")
            if p.get("shift") != state.shift_number + 1:
                raise CorruptLogError("non-consecutive shift number")
        rng = SplitMix64(state.rng_state)
        hands = deal_with_rng(build_deck(state.config), rng)
        return MatchState(
            config=state.config,
            seed=state.seed,
            shift_number=state.shift_number + 1,
            scores=state.scores,
            roles=state.roles,
            hands=hands,
            pizza=new_pizza(0),
            board=(),
            discard=(),
            finishing_order=(),
            phase=PHASE_SPECIAL_ACTION_WINDOW,
            rng_state=rng.state,
            winner=None,
            end_reason=None,
            to_act=None,
            next_seq=seq,
        )

    cfg = state.config

    if kind == DEALT:
        if strict:
            seat = p.get("seat")
            if seat not in (0, 1, 2, 3):
                raise CorruptLogError("dealt: bad seat")
            if state.phase != PHASE_SPECIAL_ACTION_WINDOW:
                raise CorruptLogError("dealt outside shift start")
            if list(p.get("uids", ())) != list(state.hands[seat].uids()):
                raise CorruptLogError("dealt hand does not match the seeded shuffle")
        return _bump(state, seq)

    if kind == SPECIAL_ACTION_DECLARED:
        if strict and state.phase != PHASE_SPECIAL_ACTION_WINDOW:
            raise CorruptLogError("special_action_declared outside its window")
        if not p:
            return _bump(state, seq, phase=PHASE_EXCHANGE)
        declarer, sa_kind = p.get("declarer"), p.get("kind")
        if strict:
            err = _declaration_error(state, declarer, sa_kind)
            if err:
                raise CorruptLogError(f"invalid declaration: {err}")
        if sa_kind == FOOD_FIGHT:
            roles = state.roles
            assert roles is not None
            swap = {CHEF: DISHWASHER, DISHWASHER: CHEF, SOUS_CHEF: WAITER, WAITER: SOUS_CHEF}
            new_roles = tuple(swap[r] for r in roles)
            return _bump(state, seq, roles=new_roles, phase=PHASE_EXCHANGE)
        return _bump(state, seq, phase=PHASE_MAKING_PIZZAS)

    if kind in (EXCHANGE_FORCED, EXCHANGE_RETURNED):
        if strict:
            if state.phase != PHASE_EXCHANGE:
                raise CorruptLogError(f"{kind} outside exchange phase")
            _check_exchange_event(state, kind, p)
        hands = _move_cards(state.hands, p["from_seat"], p["to_seat"], p["uids"])
        return _bump(state, seq, hands=hands)

    if kind == SHIFT_ENDED:
        if strict:
            if len(state.finishing_order) != 4:
                raise CorruptLogError("shift_ended before all seats finished")
            if list(p.get("finishing_order", ())) != list(state.finishing_order):
                raise CorruptLogError("shift_ended finishing_order mismatch")
        return _bump(state, seq, phase=PHASE_SHIFT_ENDED, to_act=None)

    if kind == ROLES_ASSIGNED:
        roles = tuple(p["roles"])
        if strict:
            if sorted(roles) != sorted(ROLE_ORDER):
                raise CorruptLogError("roles_assigned is not a role permutation")
            expected = _roles_from_finishing(state.finishing_order)
            if roles != expected:
                raise CorruptLogError("roles_assigned does not follow finishing order")
        return _bump(state, seq, roles=roles)  # type: ignore[arg-type]

    if kind == SCORES_UPDATED:
        totals = tuple(p["totals"])
        if strict:
            roles = state.roles
            if roles is None:
                raise CorruptLogError("scores_updated before roles")
            awarded = tuple(p["awarded"])
            expected = tuple(cfg.role_points[ROLE_RANK[roles[s]]] for s in range(4))
            if awarded != expected:
                raise CorruptLogError("scores_updated awarded mismatch")
            if totals != tuple(state.scores[s] + awarded[s] for s in range(4)):
                raise CorruptLogError("scores_updated totals mismatch")
        return _bump(state, seq, scores=totals)  # type: ignore[arg-type]

    if kind == MATCH_ENDED:
        winner, reason = p.get("winner"), p.get("reason")
        if strict:
            if winner not in (0, 1, 2, 3) or reason not in (END_TARGET_REACHED, END_CUTOFF):
                raise CorruptLogError("bad match_ended payload")
            if list(p.get("totals", ())) != list(state.scores):
                raise CorruptLogError("match_ended totals mismatch")
            if state.winner is not None:
                raise CorruptLogError("match_ended twice")
        return _bump(state, seq, winner=winner, end_reason=reason, to_act=None)

    raise CorruptLogError(f"unknown event kind {kind!r}")


def _bump(state: MatchState, seq: int, **changes: Any) -> MatchState:
    # hot path: one MatchState per event; copy slots directly rather than
    # routing 16 keyword arguments through the generated __init__
    new = MatchState.__new__(MatchState)
    new.config = state.config
    new.seed = state.seed
    new.shift_number = state.shift_number
    new.scores = state.scores
    new.roles = state.roles
    new.hands = state.hands
    new.pizza = state.pizza
    new.board = state.board
    new.discard = state.discard
    new.finishing_order = state.finishing_order
    new.phase = state.phase
    new.rng_state = state.rng_state
    new.winner = state.winner
    new.end_reason = state.end_reason
    new.to_act = state.to_act
    new.next_seq = seq
    for name, value in changes.items():
        setattr(new, name, value)
    return new


def _next_actor(pizza: PizzaState, hands: tuple[Hand, ...], previous: int) -> int | None:
    """next_to_act without materializing the active-seat set."""
    passed = pizza.passed
    for off in (1, 2, 3):
        s = (previous + off) & 3
        if hands[s].cards and s not in passed:
            return s
    return None


def _pizza_done(pizza: PizzaState, hands: tuple[Hand, ...]) -> bool:
    """is_pizza_done without materializing the active-seat set."""
    if pizza.slots_used >= BOARD_SLOTS:
        return True
    passed = pizza.passed
    last = pizza.last_player_to_play
    active = 0
    contested = False
    for s in (0, 1, 2, 3):
        if hands[s].cards:
            active += 1
            if s != last and s not in passed:
                contested = True
    return active <= 1 or not contested


def _roles_from_finishing(finishing: tuple[int, ...]) -> tuple[str, str, str, str]:
    roles = [""] * 4
    for place, seat in enumerate(finishing):
        roles[seat] = ROLE_ORDER[place]
    return tuple(roles)  # type: ignore[return-value]


# ---------------------------------------------------------- exchange helpers


def _forced_gives(state: MatchState) -> tuple[tuple[int, int], tuple[int]]:
    """(dishwasher's 2 cards, waiter's 1 card) by uid, per the config's
    direction; Jokers rank as face 0; face ties break to the lower uid."""
    roles = state.roles
    assert roles is not None
    dish_hand = state.hands[roles.index(DISHWASHER)]
    waiter_hand = state.hands[roles.index(WAITER)]
    if state.config.exchange_dishwasher_gives == "highest":
        dish_sorted = sorted(dish_hand.cards, key=lambda c: (-c.face, c.uid))
    else:
        dish_sorted = sorted(dish_hand.cards, key=lambda c: (c.face, c.uid))
    waiter_sorted = sorted(waiter_hand.cards, key=lambda c: (c.face, c.uid))
    return (dish_sorted[0].uid, dish_sorted[1].uid), (waiter_sorted[0].uid,)


def _check_exchange_event(state: MatchState, kind: str, p: dict) -> None:
    roles = state.roles
    if roles is None:
        raise CorruptLogError("exchange event before roles exist")
    frm, to, uids = p.get("from_seat"), p.get("to_seat"), tuple(p.get("uids", ()))
    if frm not in (0, 1, 2, 3) or to not in (0, 1, 2, 3):
        raise CorruptLogError("exchange event: bad seats")
    if not state.hands[frm].holds(uids) or len(set(uids)) != len(uids):
        raise CorruptLogError("exchange event moves cards the giver does not hold")
    dish, chef = roles.index(DISHWASHER), roles.index(CHEF)
    waiter, sous = roles.index(WAITER), roles.index(SOUS_CHEF)
    if kind == EXCHANGE_FORCED:
        if (frm, to) == (dish, chef):
            expected = _forced_gives(state)[0]
            if tuple(sorted(uids)) != tuple(sorted(expected)):
                raise CorruptLogError("forced give does not match the engine's computation")
        elif (frm, to) == (waiter, sous):
            if len(uids) != 1:
                raise CorruptLogError("waiter gives exactly one card")
            if uids != _forced_gives(state)[1]:
                raise CorruptLogError("forced give does not match the engine's computation")
        else:
            raise CorruptLogError("exchange_forced between wrong roles")
    else:
        if (frm, to) == (chef, dish):
            if len(uids) != 2:
                raise CorruptLogError("chef returns exactly two cards")
        elif (frm, to) == (sous, waiter):
            if len(uids) != 1:
                raise CorruptLogError("sous-chef returns exactly one card")
        else:
            raise CorruptLogError("exchange_returned between wrong roles")


def _declaration_error(state: MatchState, declarer: Any, kind: Any) -> str | None:
    if declarer not in (0, 1, 2, 3):
        return "bad declarer seat"
    if kind not in (FOOD_FIGHT, DINNER_IS_SERVED):
        return "unknown special action"
    hand_uids = set(state.hands[declarer].uids())
    if not all(u in hand_uids for u in JOKER_UIDS):
        return "declarer does not hold both jokers"
    roles = state.roles
    if roles is None:
        return "no roles this shift"
    is_dish = roles[declarer] == DISHWASHER
    if kind == FOOD_FIGHT and not is_dish:
        return "food_fight is the dishwasher's action"
    if kind == DINNER_IS_SERVED and is_dish:
        return "the dishwasher declares food_fight, not dinner_is_served"
    return None


# -------------------------------------------------------------- public ops


class _Emitter:
    """Builds the event list for one operation with dense seq numbers."""

    __slots__ = ("events", "seq", "shift")

    def __init__(self, state: MatchState | None):
        self.events: list[Event] = []
        self.seq = 0 if state is None else state.next_seq
        self.shift = 0 if state is None else state.shift_number

    def emit(self, kind: str, payload: dict, private_to: int | None = None) -> Event:
        ev = Event(self.seq, self.shift, kind, payload, private_to)
        self.events.append(ev)
        self.seq += 1
        return ev


def new_match(config: RuleConfig, seed: int) -> tuple[MatchState, tuple[Event, ...]]:
    """Start shift 1: deal and open the first pizza for the Golden 11 holder.

    No roles exist yet, so there is no special-action window and no exchange.
    """
    em = _Emitter(None)
    ev = em.emit(MATCH_STARTED, {"config": config.to_dict(), "seed": seed})
    state = evolve(None, ev)
    em.shift = 1
    ev = em.emit(SHIFT_STARTED, {"shift": 1})
    state = evolve(state, ev)
    for seat in range(4):
        ev = em.emit(DEALT, {"seat": seat, "uids": list(state.hands[seat].uids())}, private_to=seat)
        state = evolve(state, ev)
    ev = em.emit(PIZZA_OPENED, {"opener": state.golden_holder()})
    state = evolve(state, ev)
    return state, tuple(em.events)


def start_shift(state: MatchState) -> tuple[MatchState, tuple[Event, ...]]:
    """Re-deal for the next shift and open the special-action window."""
    if state.winner is not None:
        raise MatchAlreadyOverError("the match has a winner")
    if state.phase != PHASE_SHIFT_ENDED:
        raise WrongPhaseError(f"cannot start a shift during {state.phase}")
    em = _Emitter(state)
    em.shift = state.shift_number + 1
    ev = em.emit(SHIFT_STARTED, {"shift": em.shift})
    state = evolve(state, ev)
    for seat in range(4):
        ev = em.emit(DEALT, {"seat": seat, "uids": list(state.hands[seat].uids())}, private_to=seat)
        state = evolve(state, ev)
    return state, tuple(em.events)


def special_action_offer(state: MatchState) -> SpecialAction | None:
    """The declaration available right now: the seat holding both Jokers gets
    FoodFight if it is the Dishwasher, DinnerIsServed otherwise; None when the
    Jokers are split (or it is not the window)."""
    if state.phase != PHASE_SPECIAL_ACTION_WINDOW or state.roles is None:
        return None
    for seat in range(4):
        uids = set(state.hands[seat].uids())
        if all(u in uids for u in JOKER_UIDS):
            kind = FOOD_FIGHT if state.roles[seat] == DISHWASHER else DINNER_IS_SERVED
            return SpecialAction(kind=kind, declarer=seat)
    return None


def resolve_special_action(
    state: MatchState, declaration: SpecialAction | None
) -> tuple[MatchState, tuple[Event, ...]]:
    """Close the special-action window. A None declaration means declined or
    unavailable. FoodFight inverts the role hierarchy for this shift;
    DinnerIsServed cancels the exchange, opening the first pizza directly."""
    if state.phase != PHASE_SPECIAL_ACTION_WINDOW:
        raise WrongPhaseError(f"no special-action window during {state.phase}")
    em = _Emitter(state)
    if declaration is None:
        ev = em.emit(SPECIAL_ACTION_DECLARED, {})
        state = evolve(state, ev)
        return state, tuple(em.events)
    err = _declaration_error(state, declaration.declarer, declaration.kind)
    if err:
        raise InvalidDeclarationError(err)
    ev = em.emit(
        SPECIAL_ACTION_DECLARED, {"declarer": declaration.declarer, "kind": declaration.kind}
    )
    state = evolve(state, ev)
    if declaration.kind == DINNER_IS_SERVED:
        ev = em.emit(PIZZA_OPENED, {"opener": state.golden_holder()})
        state = evolve(state, ev)
    return state, tuple(em.events)


def exchange_prompts(state: MatchState) -> ExchangePrompts:
    """Preview the forced gives and the hands the returners will choose from.
    Pure — emits nothing and changes nothing."""
    if state.phase != PHASE_EXCHANGE:
        raise WrongPhaseError(f"no exchange during {state.phase}")
    roles = state.roles
    assert roles is not None
    chef, sous = roles.index(CHEF), roles.index(SOUS_CHEF)
    waiter, dish = roles.index(WAITER), roles.index(DISHWASHER)
    dish_gives, waiter_gives = _forced_gives(state)
    chef_after = tuple(sorted(state.hands[chef].uids() + dish_gives))
    sous_after = tuple(sorted(state.hands[sous].uids() + waiter_gives))
    return ExchangePrompts(
        chef_seat=chef,
        sous_chef_seat=sous,
        waiter_seat=waiter,
        dishwasher_seat=dish,
        dishwasher_gives=dish_gives,
        waiter_gives=waiter_gives,
        chef_hand_after=chef_after,
        sous_chef_hand_after=sous_after,
    )


def perform_exchange(
    state: MatchState,
    chef_return: tuple[int, int],
    sous_chef_return: tuple[int],
) -> tuple[MatchState, tuple[Event, ...]]:
    """Apply the whole exchange atomically: both forced gives, then both free
    returns, then open the shift's first pizza for the Golden 11 holder
    (located after all cards have moved)."""
    prompts = exchange_prompts(state)
    chef_return = tuple(chef_return)  # type: ignore[assignment]
    sous_chef_return = tuple(sous_chef_return)  # type: ignore[assignment]
    if len(set(chef_return)) != 2 or any(u not in prompts.chef_hand_after for u in chef_return):
        raise IllegalActionError(Reason.CARDS_NOT_HELD, "chef must return 2 held cards")
    if len(set(sous_chef_return)) != 1 or sous_chef_return[0] not in prompts.sous_chef_hand_after:
        raise IllegalActionError(Reason.CARDS_NOT_HELD, "sous-chef must return 1 held card")

    em = _Emitter(state)
    moves = (
        (EXCHANGE_FORCED, prompts.dishwasher_seat, prompts.chef_seat, prompts.dishwasher_gives),
        (EXCHANGE_FORCED, prompts.waiter_seat, prompts.sous_chef_seat, prompts.waiter_gives),
        (EXCHANGE_RETURNED, prompts.chef_seat, prompts.dishwasher_seat, chef_return),
        (EXCHANGE_RETURNED, prompts.sous_chef_seat, prompts.waiter_seat, sous_chef_return),
    )
    for kind, frm, to, uids in moves:
        ev = em.emit(
            kind, {"from_seat": frm, "to_seat": to, "uids": list(uids)}, private_to=to
        )
        state = evolve(state, ev)
    ev = em.emit(PIZZA_OPENED, {"opener": state.golden_holder()})
    state = evolve(state, ev)
    return state, tuple(em.events)


def step(
    state: MatchState, seat: int, action: Action, auto: str | None = None
) -> tuple[MatchState, tuple[Event, ...]]:
    """Apply one turn action. Emits the full cascade the action causes:
    the play or pass itself, any hand-emptying, pizza completion, next pizza
    opening, and — when the third seat finishes — the shift finalization
    (roles, scores, possible match end).

    auto tags forced moves ("timeout" or "fault") in the event payload.
    """
    if state.phase != PHASE_MAKING_PIZZAS:
        raise WrongPhaseError(f"no turns during {state.phase}")
    if seat != state.to_act:
        raise IllegalActionError(Reason.NOT_YOUR_TURN, f"it is seat {state.to_act}'s turn")
    res = validate_play(state.pizza, state.hands[seat], action, seat)
    if not res.legal:
        raise IllegalActionError(res.reason)

    em = _Emitter(state)
    if isinstance(action, PassAction):
        payload: dict[str, Any] = {"seat": seat}
        if auto is not None:
            payload["auto"] = auto
        ev = em.emit(PASSED, payload)
        state = evolve(state, ev)
        finished = False
    else:
        payload = {
            "seat": seat,
            "face": action.face,
            "count": action.count,
            "uids": list(action.card_uids),
        }
        if auto is not None:
            payload["auto"] = auto
        ev = em.emit(CARDS_PLAYED, payload)
        state = evolve(state, ev)
        finished = not state.hands[seat].cards

    if finished:
        ev = em.emit(PLAYER_FINISHED, {"seat": seat, "place": len(state.finishing_order) + 1})
        state = evolve(state, ev)

    shift_over = len(state.finishing_order) == 3
    if _pizza_done(state.pizza, state.hands):
        ev = em.emit(PIZZA_DONE, {"leader": state.pizza.last_player_to_play})
        state = evolve(state, ev)
        if shift_over:
            state = _finalize_shift(state, em)
        else:
            leader = state.pizza.last_player_to_play
            assert leader is not None
            active = state.active_seats()
            opener = leader if leader in active else _next_active_clockwise(leader, active)
            ev = em.emit(PIZZA_OPENED, {"opener": opener})
            state = evolve(state, ev)
    return state, tuple(em.events)


def _next_active_clockwise(from_seat: int, active: set[int]) -> int:
    for off in range(1, 4):
        s = (from_seat + off) % 4
        if s in active:
            return s
    raise RulesError("no active seat to open the next pizza")


def end_shift(state: MatchState) -> tuple[MatchState, tuple[Event, ...]]:
    """Finalize a shift whose last seat has just been determined. step() does
    this automatically as soon as the third seat finishes; exposed for
    completeness and for tests that build states by hand."""
    if state.phase != PHASE_MAKING_PIZZAS or len(state.finishing_order) != 3:
        raise WrongPhaseError("shift is not ready to finalize")
    em = _Emitter(state)
    state = _finalize_shift(state, em)
    return state, tuple(em.events)


def _finalize_shift(state: MatchState, em: _Emitter) -> MatchState:
    cfg = state.config
    active = state.active_seats()
    last_seat = active.pop() if active else [s for s in range(4) if s not in state.finishing_order][0]
    ev = em.emit(PLAYER_FINISHED, {"seat": last_seat, "place": 4})
    state = evolve(state, ev)

    finishing = state.finishing_order
    ev = em.emit(SHIFT_ENDED, {"shift": state.shift_number, "finishing_order": list(finishing)})
    during_roles = state.roles  # the roles in effect while the shift was played
    state = evolve(state, ev)

    new_roles = _roles_from_finishing(finishing)
    ev = em.emit(ROLES_ASSIGNED, {"roles": list(new_roles)})
    state = evolve(state, ev)

    awarded = tuple(cfg.role_points[ROLE_RANK[new_roles[s]]] for s in range(4))
    totals = tuple(state.scores[s] + awarded[s] for s in range(4))
    ev = em.emit(SCORES_UPDATED, {"awarded": list(awarded), "totals": list(totals)})
    state = evolve(state, ev)

    reached = [s for s in range(4) if totals[s] >= cfg.target_score]
    if reached:
        # tie-break: the higher role held during this shift (Chef best);
        # in shift 1 nobody held roles, so the newly earned ones decide
        tb = during_roles if during_roles is not None else new_roles
        winner = min(reached, key=lambda s: ROLE_RANK[tb[s]])
        ev = em.emit(
            MATCH_ENDED,
            {"winner": winner, "reason": END_TARGET_REACHED, "totals": list(totals)},
        )
        state = evolve(state, ev)
    elif state.shift_number >= cfg.max_shifts:
        winner = min(range(4), key=lambda s: (-totals[s], ROLE_RANK[new_roles[s]], s))
        ev = em.emit(MATCH_ENDED, {"winner": winner, "reason": END_CUTOFF, "totals": list(totals)})
        state = evolve(state, ev)
    return state


def replay(events: Iterable[Event], strict: bool = True) -> MatchState:
    """Fold a log back into a state. strict verifies everything the reducer
    can check (dense seq, phase discipline, legality, engine-computed values)
    and raises CorruptLogError on the first violation."""
    state: MatchState | None = None
    expected = 0
    for ev in events:
        if ev.seq != expected:
            raise CorruptLogError(f"seq gap: expected {expected}, got {ev.seq}")
        expected += 1
        state = evolve(state, ev, strict=strict)
    if state is None:
        raise CorruptLogError("empty event log")
    return state


def verify_invariants(state: MatchState) -> None:
    """Full conservation and capacity audit; raises AssertionError on any
    violation. Used by the simulator's verify mode and by tests."""
    seen: list[int] = []
    for h in state.hands:
        seen.extend(h.uids())
    seen.extend(state.board)
    seen.extend(state.discard)
    assert len(seen) == 68, f"card count {len(seen)} != 68"
    assert sorted(seen) == list(range(68)), "card multiset is not the deck"
    assert state.pizza.slots_used <= 11, f"slots_used {state.pizza.slots_used} > 11"
    assert len(state.board) == state.pizza.slots_used or state.to_act is None, (
        "board/slots mismatch"
    )
    assert all(v >= 0 for v in state.scores)
    assert len(set(state.finishing_order)) == len(state.finishing_order) <= 4
    if state.roles is not None:
        assert sorted(state.roles) == sorted(ROLE_ORDER), "roles are not a bijection"
