"""Pure rules for one pizza round: deck composition, legality, board transitions.

Everything here is an immutable value or a pure function — no I/O, no clocks,
no hidden state. The match engine and the tests are the only consumers.

Deck composition follows the Dalmuti pyramid: face N appears N times for
N in 1..11 (66 ingredient cards), plus 2 Jokers, 68 cards total, dealt 17
to each of 4 seats. Jokers play as face 0, beating every ingredient face,
and can only be stacked with other Jokers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .rng import SplitMix64

JOKER_FACE = 0
NUM_FACES = 11
JOKER_COUNT = 2
DECK_SIZE = NUM_FACES * (NUM_FACES + 1) // 2 + JOKER_COUNT  # 68
PLAYERS = 4
HAND_SIZE = DECK_SIZE // PLAYERS  # 17
BOARD_SLOTS = 11
GOLDEN_UID = NUM_FACES * (NUM_FACES + 1) // 2 - 1  # last face-11 card, uid 65


class RulesError(Exception):
    """Base for rule-level failures."""


class InvalidConfigError(RulesError):
    pass


class PlayerCountUnsupportedError(RulesError):
    pass


class Reason(str, Enum):
    """Rejection codes for play legality; OK means legal."""

    OK = "ok"
    NOT_RARER = "not_rarer"
    TOO_FEW_COPIES = "too_few_copies"
    BOARD_FULL = "board_full"
    CARDS_NOT_HELD = "cards_not_held"
    ALREADY_PASSED = "already_passed"
    NOT_YOUR_TURN = "not_your_turn"
    OPENER_MUST_PLAY = "opener_must_play"


class IllegalActionError(RulesError):
    """Raised by apply_* defensive checks and by the engine's step()."""

    def __init__(self, reason: Reason, detail: str = "") -> None:
        self.reason = reason
        super().__init__(f"{reason.value}{': ' + detail if detail else ''}")


@dataclass(frozen=True, slots=True)
class RuleConfig:
    """Match rules. Composition fields are pinned to the standard game by
    validation; only the toggles below actually vary.

    exchange_dishwasher_gives: "highest" is the table rule (Dishwasher hands
    over its two highest faces); "lowest" is the Dalmuti-style variant where
    the Dishwasher gives up its two strongest (lowest-face) cards instead.
    """

    num_faces: int = NUM_FACES
    joker_count: int = JOKER_COUNT
    players: int = PLAYERS
    hand_size: int = HAND_SIZE
    board_slots: int = BOARD_SLOTS
    target_score: int = 15
    role_points: tuple[int, int, int, int] = (3, 2, 1, 0)  # Chef..Dishwasher
    exchange_dishwasher_gives: str = "highest"
    max_shifts: int = 50

    def __post_init__(self) -> None:
        if (self.num_faces, self.joker_count, self.players) != (NUM_FACES, JOKER_COUNT, PLAYERS):
            raise InvalidConfigError("deck composition is fixed: 11 faces, 2 jokers, 4 players")
        if self.hand_size != HAND_SIZE or self.board_slots != BOARD_SLOTS:
            raise InvalidConfigError("hand_size=17 and board_slots=11 are fixed")
        if self.target_score < 1:
            raise InvalidConfigError("target_score must be >= 1")
        pts = self.role_points
        if len(pts) != 4 or any(not isinstance(p, int) or p < 0 for p in pts):
            raise InvalidConfigError("role_points must be 4 non-negative integers")
        if list(pts) != sorted(pts, reverse=True):
            raise InvalidConfigError("role_points must be non-increasing Chef..Dishwasher")
        if self.exchange_dishwasher_gives not in ("highest", "lowest"):
            raise InvalidConfigError("exchange_dishwasher_gives must be 'highest' or 'lowest'")
        if self.max_shifts < 1:
            raise InvalidConfigError("max_shifts must be >= 1")

    def to_dict(self) -> dict:
        return {
            "num_faces": self.num_faces,
            "joker_count": self.joker_count,
            "players": self.players,
            "hand_size": self.hand_size,
            "board_slots": self.board_slots,
            "target_score": self.target_score,
            "role_points": list(self.role_points),
            "exchange_dishwasher_gives": self.exchange_dishwasher_gives,
            "max_shifts": self.max_shifts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RuleConfig":
        kwargs = dict(d)
        if "role_points" in kwargs:
            kwargs["role_points"] = tuple(kwargs["role_points"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise InvalidConfigError(str(exc)) from None


@dataclass(frozen=True, slots=True)
class Card:
    """One physical card. face 0 is the Joker; golden implies face 11.

    uid is the card's stable identity within the deck (0..67, canonical
    order: faces ascending, the golden 11 last among the elevens, jokers
    last).
    """

    uid: int
    face: int
    golden: bool = False

    def to_dict(self) -> dict:
        return {"uid": self.uid, "face": self.face, "golden": self.golden}


def _make_cards() -> tuple[Card, ...]:
    cards = []
    uid = 0
    for face in range(1, NUM_FACES + 1):
        for _ in range(face):
            cards.append(Card(uid=uid, face=face, golden=(uid == GOLDEN_UID)))
            uid += 1
    for _ in range(JOKER_COUNT):
        cards.append(Card(uid=uid, face=JOKER_FACE))
        uid += 1
    return tuple(cards)


#: The 68 canonical card objects, indexable by uid. All hands, boards and
#: decks share these instances; identity within a match is the uid.
CARDS: tuple[Card, ...] = _make_cards()


def card_by_uid(uid: int) -> Card:
    return CARDS[uid]


@dataclass(frozen=True, slots=True)
class Deck:
    """The full 68-card deck in a fixed order."""

    cards: tuple[Card, ...]


def build_deck(config: RuleConfig) -> Deck:
    """Canonical deck for the (validated) standard config."""
    return Deck(cards=CARDS)


@dataclass(frozen=True, slots=True)
class Hand:
    """One seat's concealed cards, kept sorted by uid."""

    owner: int
    cards: tuple[Card, ...]
    # lazy face-descending grouping, built at most once per (immutable) hand
    _groups: tuple[tuple[int, tuple[int, ...]], ...] | None = field(
        default=None, init=False, repr=False, compare=False
    )
    # enumeration memo keyed by board constraints; a hand is often asked
    # again under the same pizza after other seats pass
    _legal_memo: dict | None = field(default=None, init=False, repr=False, compare=False)

    def size(self) -> int:
        return len(self.cards)

    def uids(self) -> tuple[int, ...]:
        return tuple([c.uid for c in self.cards])

    def face_uids(self) -> dict[int, list[int]]:
        """uid lists per face, ascending uid (cards are uid-sorted)."""
        by_face: dict[int, list[int]] = {}
        for c in self.cards:
            by_face.setdefault(c.face, []).append(c.uid)
        return by_face

    def face_groups(self) -> tuple[tuple[int, tuple[int, ...]], ...]:
        """(face, uids) pairs, faces descending, uids ascending; cached."""
        groups = self._groups
        if groups is None:
            by_face: dict[int, list[int]] = {}
            for c in self.cards:
                by_face.setdefault(c.face, []).append(c.uid)
            groups = tuple(
                (face, tuple(by_face[face])) for face in sorted(by_face, reverse=True)
            )
            object.__setattr__(self, "_groups", groups)
        return groups

    def without_uids(self, uids) -> "Hand":
        gone = set(uids)
        return Hand(self.owner, tuple([c for c in self.cards if c.uid not in gone]))

    def holds(self, uids) -> bool:
        held = {c.uid for c in self.cards}
        return all(u in held for u in uids)


def deal(deck: Deck, seed: int, players: int = PLAYERS) -> tuple[Hand, ...]:
    """Seeded Fisher-Yates shuffle dealt round-robin; 4 hands of 17."""
    if players != PLAYERS:
        raise PlayerCountUnsupportedError(f"only {PLAYERS} players supported, got {players}")
    return deal_with_rng(deck, SplitMix64(seed))


def deal_with_rng(deck: Deck, rng: SplitMix64) -> tuple[Hand, ...]:
    """Like deal(), but advances a caller-owned generator (match engine)."""
    order = list(deck.cards)
    rng.shuffle(order)
    piles: tuple[list[Card], ...] = ([], [], [], [])
    for i, card in enumerate(order):
        piles[i % PLAYERS].append(card)
    return tuple(
        Hand(owner=s, cards=tuple(sorted(piles[s], key=lambda c: c.uid))) for s in range(PLAYERS)
    )


@dataclass(frozen=True, slots=True)
class PlayAction:
    """Lay count copies of one face; card_uids are the cards spent."""

    face: int
    count: int
    card_uids: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"type": "play", "face": self.face, "count": self.count, "uids": list(self.card_uids)}


@dataclass(frozen=True, slots=True)
class PassAction:
    def to_dict(self) -> dict:
        return {"type": "pass"}


PASS = PassAction()

Action = PlayAction | PassAction


def action_from_dict(d: dict) -> Action:
    kind = d.get("type")
    if kind == "pass":
        return PASS
    if kind == "play":
        return PlayAction(face=d["face"], count=d["count"], card_uids=tuple(d["uids"]))
    raise ValueError(f"not a turn action: {d!r}")


@dataclass(slots=True)
class PizzaState:
    """One pizza in progress on the 11-slot board. Treated as immutable:
    apply_play and apply_pass build fresh instances rather than mutating."""

    opener: int
    slots_used: int = 0
    top_face: int | None = None
    top_count: int = 0
    passed: frozenset[int] = frozenset()
    last_player_to_play: int | None = None

    def is_empty(self) -> bool:
        return self.slots_used == 0

    def to_dict(self) -> dict:
        return {
            "opener": self.opener,
            "slots_used": self.slots_used,
            "top_face": self.top_face,
            "top_count": self.top_count,
            "passed": sorted(self.passed),
            "last_player_to_play": self.last_player_to_play,
        }


def new_pizza(opener: int) -> PizzaState:
    return PizzaState(opener=opener)


@dataclass(frozen=True, slots=True)
class LegalityResult:
    legal: bool
    reason: Reason

    @classmethod
    def ok(cls) -> "LegalityResult":
        return _OK

    @classmethod
    def rejected(cls, reason: Reason) -> "LegalityResult":
        return LegalityResult(False, reason)


_OK = LegalityResult(True, Reason.OK)


def validate_play(pizza: PizzaState, hand: Hand, action: Action, seat: int) -> LegalityResult:
    """Full legality check; returns a result, never raises.

    Check order (first failure wins): NOT_YOUR_TURN (hand/seat mismatch),
    ALREADY_PASSED, then for a pass OPENER_MUST_PLAY, and for a play
    CARDS_NOT_HELD, BOARD_FULL, NOT_RARER, TOO_FEW_COPIES.
    """
    if hand.owner != seat:
        return LegalityResult.rejected(Reason.NOT_YOUR_TURN)
    if seat in pizza.passed:
        return LegalityResult.rejected(Reason.ALREADY_PASSED)

    if isinstance(action, PassAction):
        if pizza.slots_used == 0 and seat == pizza.opener:
            return LegalityResult.rejected(Reason.OPENER_MUST_PLAY)
        return _OK

    uids = action.card_uids
    if (
        action.count < 1
        or len(uids) != action.count
        or len(set(uids)) != action.count
        or not hand.holds(uids)
        or any(CARDS[u].face != action.face for u in uids)
    ):
        return LegalityResult.rejected(Reason.CARDS_NOT_HELD)
    if pizza.slots_used + action.count > BOARD_SLOTS:
        return LegalityResult.rejected(Reason.BOARD_FULL)
    if pizza.top_face is not None:
        if action.face >= pizza.top_face:
            return LegalityResult.rejected(Reason.NOT_RARER)
        if action.count < pizza.top_count:
            return LegalityResult.rejected(Reason.TOO_FEW_COPIES)
    return _OK


def legal_actions(pizza: PizzaState, hand: Hand, seat: int) -> tuple[Action, ...]:
    """Every legal action for seat, in canonical order: plays face-descending
    then count-ascending (equal-face cards spent lowest uid first), Pass last.
    A seat that already passed gets the empty tuple — it is skipped, not asked.
    """
    if hand.owner != seat or seat in pizza.passed:
        return ()

    room = BOARD_SLOTS - pizza.slots_used
    if pizza.top_face is None:
        min_count, face_cap = 1, NUM_FACES + 1
    else:
        min_count, face_cap = max(pizza.top_count, 1), pizza.top_face
    may_pass = pizza.slots_used != 0 or seat != pizza.opener

    memo = hand._legal_memo
    key = (face_cap, min_count, room, may_pass)
    if memo is None:
        memo = {}
        object.__setattr__(hand, "_legal_memo", memo)
    else:
        hit = memo.get(key)
        if hit is not None:
            return hit

    actions: list[Action] = []
    append = actions.append
    for face, uids in hand.face_groups():
        if face >= face_cap:
            continue
        cap = len(uids)
        if cap > room:
            cap = room
        for count in range(min_count, cap + 1):
            append(PlayAction(face, count, uids[:count]))
    if may_pass:
        append(PASS)
    result = tuple(actions)
    memo[key] = result
    return result


def apply_play(
    pizza: PizzaState, hand: Hand, action: PlayAction, seat: int
) -> tuple[PizzaState, Hand]:
    """Lay the cards; pure — inputs untouched. Raises IllegalActionError if
    the play would not validate (defensive; engine validates beforehand)."""
    check = validate_play(pizza, hand, action, seat)
    if not check.legal:
        raise IllegalActionError(check.reason)
    next_pizza = PizzaState(
        opener=pizza.opener,
        slots_used=pizza.slots_used + action.count,
        top_face=action.face,
        top_count=action.count,
        passed=pizza.passed,
        last_player_to_play=seat,
    )
    return next_pizza, hand.without_uids(action.card_uids)


def apply_pass(pizza: PizzaState, seat: int) -> PizzaState:
    """Sticky pass: seat acts no more until the next pizza. One-shot —
    passing twice is an error, not a no-op."""
    if seat in pizza.passed:
        raise IllegalActionError(Reason.ALREADY_PASSED)
    if pizza.slots_used == 0 and seat == pizza.opener:
        raise IllegalActionError(Reason.OPENER_MUST_PLAY)
    return PizzaState(
        opener=pizza.opener,
        slots_used=pizza.slots_used,
        top_face=pizza.top_face,
        top_count=pizza.top_count,
        passed=pizza.passed | {seat},
        last_player_to_play=pizza.last_player_to_play,
    )


def is_pizza_done(pizza: PizzaState, active_seats: frozenset[int] | set[int]) -> bool:
    """Done when the board is full, at most one seat still holds cards, or
    everyone active except (at most) the last player to play has passed."""
    if pizza.slots_used >= BOARD_SLOTS:
        return True
    if len(active_seats) <= 1:
        return True
    pending = active_seats - pizza.passed
    if pizza.last_player_to_play is None:
        return not pending
    return pending <= {pizza.last_player_to_play}


def next_to_act(
    pizza: PizzaState, active_seats: frozenset[int] | set[int], previous_actor: int
) -> int | None:
    """Next seat clockwise (ascending index mod 4) from previous_actor that
    still holds cards and has not passed; None if no other seat qualifies."""
    for off in range(1, PLAYERS):
        s = (previous_actor + off) % PLAYERS
        if s in active_seats and s not in pizza.passed:
            return s
    return None
