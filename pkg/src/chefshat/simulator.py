"""Seeded tournament harness.

run_match drives one full match between four policies, converting any agent
misbehavior into a forced fallback move (flagged auto="fault") so a buggy bot
can never deadlock a tournament. run_tournament executes seeded batches —
optionally across processes — writes per-match JSONL logs and a CSV table,
and folds statistics in match-index order so results are reproducible
byte-for-byte regardless of scheduling.

Seed derivation (documented in docs/formats.md): match seed =
derive_seed(master_seed, match_index); the agent at seat s uses
derive_seed(match_seed, 16 + s). With seat rotation, the agent listed at
lineup position i sits at seat (i + match_index) % 4.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

from .agents import AGENT_FACTORIES, AgentPolicy, build_view, make_agent
from .core_rules import CARDS, IllegalActionError, PassAction, RuleConfig
from .events import (
    CARDS_PLAYED,
    MATCH_ENDED,
    PASSED,
    PIZZA_DONE,
    PIZZA_OPENED,
    SHIFT_ENDED,
    SPECIAL_ACTION_DECLARED,
    Event,
    encode_event,
)
from .match_engine import (
    PHASE_EXCHANGE,
    PHASE_MAKING_PIZZAS,
    PHASE_SHIFT_ENDED,
    PHASE_SPECIAL_ACTION_WINDOW,
    MatchState,
    evolve,
    exchange_prompts,
    new_match,
    perform_exchange,
    resolve_special_action,
    special_action_offer,
    start_shift,
    state_json,
    step,
    verify_invariants,
)
from .rng import derive_seed

#: Offset so per-seat agent seeds never collide with per-match seed indices.
AGENT_SEED_OFFSET = 16


@dataclass(slots=True)
class MatchSummary:
    """One row of tournament output; every field is derived from the event
    log and the final state, never from wall-clock time."""

    match_index: int
    seed: int
    winner_seat: int
    end_reason: str
    shifts: int
    pizzas: int
    plays: int
    passes: int
    faults: int
    auto_moves: int
    specials: int
    event_count: int
    scores: tuple[int, int, int, int]


@dataclass(slots=True)
class MatchResult:
    events: tuple[Event, ...] | None
    summary: MatchSummary
    final_state: MatchState
    snapshots: dict[int, str] = field(default_factory=dict)


def fallback_action(legal: Sequence[Any]):
    """Forced move when a policy faults or a turn times out: Pass when legal,
    otherwise the first legal play in canonical order."""
    if legal and isinstance(legal[-1], PassAction):
        return legal[-1]
    return legal[0]


def fallback_exchange_return(pool: Sequence[int], k: int) -> tuple[int, ...]:
    """Forced exchange return: the k highest faces, ties to the lower uid."""
    ranked = sorted(pool, key=lambda u: (-CARDS[u].face, u))
    return tuple(ranked[:k])


def checked_exchange_return(
    agent: AgentPolicy,
    state: MatchState,
    seat: int,
    received: tuple[int, ...],
    k: int,
    pool: tuple[int, ...],
) -> tuple[tuple[int, ...], int]:
    """Ask a policy for its exchange return; on any misbehavior substitute
    the deterministic fallback and count one fault."""
    view = build_view(state, seat)
    try:
        ret = tuple(agent.decide_exchange_return(view, received, k))
        if len(ret) != k or len(set(ret)) != k or any(u not in pool for u in ret):
            raise ValueError(f"bad exchange return {ret!r}")
        return ret, 0
    except Exception:
        return fallback_exchange_return(pool, k), 1


def policy_special(agent: AgentPolicy, state: MatchState, offer) -> tuple[bool, int]:
    """Ask a policy about an offered two-Joker declaration; a fault declines."""
    view = build_view(state, offer.declarer)
    try:
        return bool(agent.decide_special_action(view, offer.kind)), 0
    except Exception:
        return False, 1


def policy_turn(agent: AgentPolicy, state: MatchState, seat: int):
    """One making-phase turn driven by a policy: decide, validate via step,
    and on any misbehavior play the flagged fallback. Returns
    (state, events, faulted)."""
    view = build_view(state, seat)
    action = None
    try:
        action = agent.decide_play(view)
    except Exception:
        action = None
    if action is None:
        state, evs = step(state, seat, fallback_action(view.legal), auto="fault")
        return state, evs, 1
    try:
        state, evs = step(state, seat, action)
        return state, evs, 0
    except IllegalActionError:
        state, evs = step(state, seat, fallback_action(view.legal), auto="fault")
        return state, evs, 1


def run_match(
    rule_config: RuleConfig,
    agents: Sequence[AgentPolicy],
    seed: int,
    *,
    match_index: int = 0,
    keep_events: bool = True,
    verify: bool = False,
    snapshot_seqs: Sequence[int] = (),
) -> MatchResult:
    """Play one match to completion. Deterministic in (rule_config, agents'
    seeds and kinds, seed).

    verify audits conservation and capacity after every transition batch
    (full card-multiset audit at pizza and shift boundaries). snapshot_seqs
    requests canonical state serializations captured live immediately after
    the named event seq numbers, for replay comparison.
    """
    if len(agents) != 4:
        raise ValueError("a match needs exactly 4 agents")
    wanted = set(snapshot_seqs)
    snapshots: dict[int, str] = {}
    events: list[Event] | None = [] if keep_events else None
    plays = passes = pizzas = faults = autos = specials = n_events = 0

    prev_state: MatchState | None = None
    state, evs = new_match(rule_config, seed)

    while True:
        # bookkeeping for the batch of events the last operation emitted
        n_events += len(evs)
        if events is not None:
            events.extend(evs)
        full_audit = False
        for ev in evs:
            k = ev.kind
            if k == CARDS_PLAYED:
                plays += 1
                autos += "auto" in ev.payload
            elif k == PASSED:
                passes += 1
                autos += "auto" in ev.payload
            elif k == PIZZA_OPENED:
                pizzas += 1
            elif k == PIZZA_DONE or k == SHIFT_ENDED or k == MATCH_ENDED:
                full_audit = True
            elif k == SPECIAL_ACTION_DECLARED:
                specials += bool(ev.payload)
        if wanted:
            hit = [s for s in wanted if evs and evs[0].seq <= s <= evs[-1].seq]
            if hit:
                inter = prev_state
                for ev in evs:
                    inter = evolve(inter, ev)
                    if ev.seq in wanted:
                        snapshots[ev.seq] = state_json(inter)
        if verify:
            if full_audit:
                verify_invariants(state)
            else:
                h0, h1, h2, h3 = state.hands
                held = len(h0.cards) + len(h1.cards) + len(h2.cards) + len(h3.cards)
                assert held + len(state.board) + len(state.discard) == 68, "cards leaked"
                assert state.pizza.slots_used <= 11, "board overfilled"

        if state.winner is not None:
            break

        prev_state = state
        ph = state.phase
        if ph == PHASE_SHIFT_ENDED:
            state, evs = start_shift(state)
        elif ph == PHASE_SPECIAL_ACTION_WINDOW:
            offer = special_action_offer(state)
            declaration = None
            if offer is not None:
                accepted, f = policy_special(agents[offer.declarer], state, offer)
                faults += f
                if accepted:
                    declaration = offer
            state, evs = resolve_special_action(state, declaration)
        elif ph == PHASE_EXCHANGE:
            prompts = exchange_prompts(state)
            chef_ret, f1 = checked_exchange_return(
                agents[prompts.chef_seat],
                state,
                prompts.chef_seat,
                prompts.dishwasher_gives,
                2,
                prompts.chef_hand_after,
            )
            sous_ret, f2 = checked_exchange_return(
                agents[prompts.sous_chef_seat],
                state,
                prompts.sous_chef_seat,
                prompts.waiter_gives,
                1,
                prompts.sous_chef_hand_after,
            )
            faults += f1 + f2
            state, evs = perform_exchange(state, chef_ret, sous_ret)
        elif ph == PHASE_MAKING_PIZZAS:
            seat = state.to_act
            assert seat is not None
            state, evs, f = policy_turn(agents[seat], state, seat)
            faults += f
        else:  # pragma: no cover - phases are exhaustive
            raise RuntimeError(f"unexpected phase {ph}")

    assert state.end_reason is not None
    summary = MatchSummary(
        match_index=match_index,
        seed=seed,
        winner_seat=state.winner,
        end_reason=state.end_reason,
        shifts=state.shift_number,
        pizzas=pizzas,
        plays=plays,
        passes=passes,
        faults=faults,
        auto_moves=autos,
        specials=specials,
        event_count=n_events,
        scores=state.scores,
    )
    return MatchResult(
        events=tuple(events) if events is not None else None,
        summary=summary,
        final_state=state,
        snapshots=snapshots,
    )


# ------------------------------------------------------------- tournaments


@dataclass(frozen=True, slots=True)
class TournamentConfig:
    matches: int
    master_seed: int
    lineup: tuple[str, str, str, str]
    rule_config: RuleConfig = RuleConfig()
    rotate_seats: bool = True
    output_dir: str | None = None
    formats: tuple[str, ...] = ()
    parallel: int = 1
    verify: bool = False

    def __post_init__(self) -> None:
        if self.matches < 1:
            raise ValueError("matches must be >= 1")
        if len(self.lineup) != 4:
            raise ValueError("lineup must name exactly 4 agents")
        for name in self.lineup:
            if name not in AGENT_FACTORIES:
                raise ValueError(f"unknown agent {name!r}")
        bad = set(self.formats) - {"jsonl", "csv"}
        if bad:
            raise ValueError(f"unknown output formats: {sorted(bad)}")
        if self.formats and not self.output_dir:
            raise ValueError("formats requested but no output_dir given")
        if self.parallel < 1:
            raise ValueError("parallel must be >= 1")


@dataclass(slots=True)
class AgentStats:
    name: str
    lineup_index: int
    wins: int
    win_rate: float
    mean_score: float


@dataclass(slots=True)
class TournamentStats:
    matches: int
    per_agent: list[AgentStats]
    mean_shifts: float
    mean_pizzas: float
    pass_rate: float
    specials: int
    faults: int
    faulted_matches: list[int]
    cutoff_matches: int
    runtime_s: float
    summaries: list[MatchSummary]


def seat_of_lineup_index(i: int, match_index: int, rotate: bool) -> int:
    return (i + match_index) % 4 if rotate else i


def lineup_index_of_seat(seat: int, match_index: int, rotate: bool) -> int:
    return (seat - match_index) % 4 if rotate else seat


def agents_for_match(config: TournamentConfig, match_index: int) -> list[AgentPolicy]:
    match_seed = derive_seed(config.master_seed, match_index)
    lineup_at_seat = [
        config.lineup[lineup_index_of_seat(s, match_index, config.rotate_seats)] for s in range(4)
    ]
    return [
        make_agent(lineup_at_seat[s], derive_seed(match_seed, AGENT_SEED_OFFSET + s))
        for s in range(4)
    ]


def _log_path(output_dir: str, match_index: int) -> str:
    return os.path.join(output_dir, f"match_{match_index:05d}.jsonl")


def _run_indexed(args: tuple[TournamentConfig, int]) -> MatchSummary:
    config, m = args
    want_jsonl = "jsonl" in config.formats
    result = run_match(
        config.rule_config,
        agents_for_match(config, m),
        derive_seed(config.master_seed, m),
        match_index=m,
        keep_events=want_jsonl,
        verify=config.verify,
    )
    if want_jsonl:
        assert config.output_dir is not None and result.events is not None
        with open(_log_path(config.output_dir, m), "w", encoding="utf-8", newline="\n") as f:
            for ev in result.events:
                f.write(encode_event(ev))
                f.write("\n")
    return result.summary


def run_tournament(config: TournamentConfig) -> TournamentStats:
    """Execute the whole batch and fold statistics in match-index order."""
    if config.output_dir:
        os.makedirs(config.output_dir, exist_ok=True)
    started = time.monotonic()
    jobs = [(config, m) for m in range(config.matches)]
    if config.parallel > 1 and config.matches > 1:
        with ProcessPoolExecutor(max_workers=config.parallel) as pool:
            summaries = list(pool.map(_run_indexed, jobs, chunksize=64))
    else:
        summaries = [_run_indexed(job) for job in jobs]
    summaries.sort(key=lambda s: s.match_index)
    stats = fold_stats(config, summaries, runtime_s=time.monotonic() - started)
    if "csv" in config.formats:
        assert config.output_dir is not None
        write_csv(os.path.join(config.output_dir, "matches.csv"), config, stats)
    return stats


def fold_stats(
    config: TournamentConfig, summaries: list[MatchSummary], runtime_s: float = 0.0
) -> TournamentStats:
    n = len(summaries)
    wins = [0, 0, 0, 0]
    score_sums = [0, 0, 0, 0]
    total_plays = total_passes = total_specials = total_faults = cutoffs = 0
    shift_sum = pizza_sum = 0
    faulted: list[int] = []
    for s in summaries:
        wi = lineup_index_of_seat(s.winner_seat, s.match_index, config.rotate_seats)
        wins[wi] += 1
        for seat in range(4):
            li = lineup_index_of_seat(seat, s.match_index, config.rotate_seats)
            score_sums[li] += s.scores[seat]
        total_plays += s.plays
        total_passes += s.passes
        total_specials += s.specials
        total_faults += s.faults
        cutoffs += s.end_reason == "cutoff"
        shift_sum += s.shifts
        pizza_sum += s.pizzas
        if s.faults:
            faulted.append(s.match_index)
    actions = total_plays + total_passes
    per_agent = [
        AgentStats(
            name=config.lineup[i],
            lineup_index=i,
            wins=wins[i],
            win_rate=wins[i] / n,
            mean_score=score_sums[i] / n,
        )
        for i in range(4)
    ]
    return TournamentStats(
        matches=n,
        per_agent=per_agent,
        mean_shifts=shift_sum / n,
        mean_pizzas=pizza_sum / n,
        pass_rate=total_passes / actions if actions else 0.0,
        specials=total_specials,
        faults=total_faults,
        faulted_matches=faulted,
        cutoff_matches=cutoffs,
        runtime_s=runtime_s,
        summaries=summaries,
    )


CSV_COLUMNS = [
    "match",
    "seed",
    "winner_seat",
    "winner_agent",
    "reason",
    "shifts",
    "pizzas",
    "plays",
    "passes",
    "faults",
    "auto_moves",
    "specials",
    "score_seat0",
    "score_seat1",
    "score_seat2",
    "score_seat3",
]


def write_csv(path: str, config: TournamentConfig, stats: TournamentStats) -> None:
    """One row per match plus a final aggregate row; no wall-clock values, so
    identical runs produce identical files."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in stats.summaries:
            wi = lineup_index_of_seat(s.winner_seat, s.match_index, config.rotate_seats)
            w.writerow(
                [
                    s.match_index,
                    s.seed,
                    s.winner_seat,
                    config.lineup[wi],
                    s.end_reason,
                    s.shifts,
                    s.pizzas,
                    s.plays,
                    s.passes,
                    s.faults,
                    s.auto_moves,
                    s.specials,
                    *s.scores,
                ]
            )
        best = max(stats.per_agent, key=lambda a: (a.wins, -a.lineup_index))
        w.writerow(
            [
                "aggregate",
                config.master_seed,
                "",
                best.name,
                f"cutoffs={stats.cutoff_matches}",
                f"{stats.mean_shifts:.6f}",
                f"{stats.mean_pizzas:.6f}",
                sum(s.plays for s in stats.summaries),
                sum(s.passes for s in stats.summaries),
                stats.faults,
                sum(s.auto_moves for s in stats.summaries),
                stats.specials,
                *(f"{a.win_rate:.6f}" for a in stats.per_agent),
            ]
        )
