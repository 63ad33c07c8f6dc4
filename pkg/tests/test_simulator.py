"""Tournament harness: seeding, rotation, statistics folding, output files,
and serial/parallel equivalence."""

from __future__ import annotations

import csv

import pytest

from chefshat.agents import make_agent
from chefshat.core_rules import RuleConfig
from chefshat.events import (
    CARDS_PLAYED,
    PASSED,
    PIZZA_OPENED,
    SPECIAL_ACTION_DECLARED,
    encode_event,
    read_jsonl,
)
from chefshat.match_engine import replay, state_json
from chefshat.rng import derive_seed
from chefshat.simulator import (
    AGENT_SEED_OFFSET,
    TournamentConfig,
    agents_for_match,
    lineup_index_of_seat,
    run_match,
    run_tournament,
    seat_of_lineup_index,
)

CFG = RuleConfig()
LINEUP = ("random", "greedy", "conservative", "random")


def random_lineup(base=100):
    return [make_agent("random", base + i) for i in range(4)]


class TestRunMatch:
    def test_deterministic_log_and_summary(self):
        a = run_match(CFG, random_lineup(), seed=21)
        b = run_match(CFG, random_lineup(), seed=21)
        assert [encode_event(e) for e in a.events] == [encode_event(e) for e in b.events]
        assert a.summary == b.summary

    def test_summary_counts_match_the_log(self):
        res = run_match(CFG, random_lineup(), seed=22)
        s, evs = res.summary, res.events
        assert s.event_count == len(evs)
        assert s.plays == sum(e.kind == CARDS_PLAYED for e in evs)
        assert s.passes == sum(e.kind == PASSED for e in evs)
        assert s.pizzas == sum(e.kind == PIZZA_OPENED for e in evs)
        assert s.specials == sum(
            e.kind == SPECIAL_ACTION_DECLARED and bool(e.payload) for e in evs
        )
        assert s.auto_moves == sum(
            "auto" in e.payload for e in evs if e.kind in (CARDS_PLAYED, PASSED)
        )
        assert s.shifts == res.final_state.shift_number == max(e.shift for e in evs)
        assert s.winner_seat == res.final_state.winner
        assert s.scores == res.final_state.scores
        assert s.end_reason in ("target_reached", "cutoff")

    def test_dropping_the_log_changes_nothing_else(self):
        full = run_match(CFG, random_lineup(), seed=23)
        lean = run_match(CFG, random_lineup(), seed=23, keep_events=False)
        assert lean.events is None
        assert lean.summary == full.summary
        assert state_json(lean.final_state) == state_json(full.final_state)

    def test_replayable(self):
        res = run_match(CFG, random_lineup(), seed=24)
        assert state_json(replay(res.events)) == state_json(res.final_state)

    def test_snapshots_capture_requested_seqs(self):
        res = run_match(CFG, random_lineup(), seed=24, snapshot_seqs=(0, 5, 100))
        assert set(res.snapshots) == {0, 5, 100}
        assert all(isinstance(v, str) and v.startswith("{") for v in res.snapshots.values())

    def test_requires_four_agents(self):
        with pytest.raises(ValueError):
            run_match(CFG, random_lineup()[:3], seed=1)


class TestSeatRotation:
    def test_roundtrip(self):
        for m in range(8):
            for i in range(4):
                seat = seat_of_lineup_index(i, m, rotate=True)
                assert lineup_index_of_seat(seat, m, rotate=True) == i

    def test_match_zero_is_identity_and_rotation_advances(self):
        assert [seat_of_lineup_index(i, 0, True) for i in range(4)] == [0, 1, 2, 3]
        assert [seat_of_lineup_index(i, 1, True) for i in range(4)] == [1, 2, 3, 0]
        assert [seat_of_lineup_index(i, 5, True) for i in range(4)] == [1, 2, 3, 0]

    def test_rotation_can_be_disabled(self):
        assert [seat_of_lineup_index(i, 3, False) for i in range(4)] == [0, 1, 2, 3]

    def test_agents_for_match_names_and_seeds(self):
        config = TournamentConfig(matches=4, master_seed=7, lineup=LINEUP)
        agents = agents_for_match(config, 2)
        # with rotation, lineup index i sits at seat (i + 2) % 4
        expected_names = [LINEUP[(s - 2) % 4] for s in range(4)]
        assert [a.name for a in agents] == expected_names
        match_seed = derive_seed(7, 2)
        assert [a.seed for a in agents] == [
            derive_seed(match_seed, AGENT_SEED_OFFSET + s) for s in range(4)
        ]

    def test_match_seeds_are_distinct(self):
        seeds = {derive_seed(7, m) for m in range(1000)}
        assert len(seeds) == 1000


class TestTournamentConfig:
    def test_validation(self):
        good = dict(matches=1, master_seed=0, lineup=LINEUP)
        TournamentConfig(**good)
        with pytest.raises(ValueError):
            TournamentConfig(**{**good, "matches": 0})
        with pytest.raises(ValueError):
            TournamentConfig(**{**good, "lineup": ("random",) * 3})
        with pytest.raises(ValueError):
            TournamentConfig(**{**good, "lineup": ("random", "psychic", "random", "random")})
        with pytest.raises(ValueError):
            TournamentConfig(**{**good, "formats": ("xml",), "output_dir": "x"})
        with pytest.raises(ValueError):
            TournamentConfig(**{**good, "formats": ("csv",)})  # no output_dir
        with pytest.raises(ValueError):
            TournamentConfig(**{**good, "parallel": 0})


class TestTournament:
    def test_reproducible(self):
        config = TournamentConfig(matches=6, master_seed=11, lineup=LINEUP)
        a = run_tournament(config)
        b = run_tournament(config)
        assert a.summaries == b.summaries
        assert a.per_agent == b.per_agent

    def test_statistics_fold(self):
        config = TournamentConfig(matches=12, master_seed=3, lineup=LINEUP)
        stats = run_tournament(config)
        assert stats.matches == 12
        assert sum(a.wins for a in stats.per_agent) == 12
        assert sum(a.win_rate for a in stats.per_agent) == pytest.approx(1.0)
        assert 0.0 <= stats.pass_rate <= 1.0
        assert stats.mean_shifts > 0 and stats.mean_pizzas > 0
        assert stats.faults == 0 and stats.faulted_matches == []
        assert [s.match_index for s in stats.summaries] == list(range(12))
        # wins are credited to the lineup slot, not the seat
        for s in stats.summaries:
            assert 0 <= lineup_index_of_seat(s.winner_seat, s.match_index, True) < 4

    def test_jsonl_logs_replay_cleanly(self, tmp_path):
        config = TournamentConfig(
            matches=3,
            master_seed=5,
            lineup=LINEUP,
            output_dir=str(tmp_path),
            formats=("jsonl",),
        )
        stats = run_tournament(config)
        for m in range(3):
            path = tmp_path / f"match_{m:05d}.jsonl"
            assert path.exists()
            events = read_jsonl(str(path))
            assert len(events) == stats.summaries[m].event_count
            final = replay(events)
            assert final.winner == stats.summaries[m].winner_seat

    def test_csv_table(self, tmp_path):
        config = TournamentConfig(
            matches=4,
            master_seed=9,
            lineup=LINEUP,
            output_dir=str(tmp_path),
            formats=("csv",),
        )
        stats = run_tournament(config)
        with open(tmp_path / "matches.csv", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        header, body, aggregate = rows[0], rows[1:-1], rows[-1]
        assert header[0] == "match" and len(body) == 4
        for row, s in zip(body, stats.summaries):
            assert int(row[0]) == s.match_index
            assert int(row[2]) == s.winner_seat
            wi = lineup_index_of_seat(s.winner_seat, s.match_index, True)
            assert row[3] == LINEUP[wi]
        assert aggregate[0] == "aggregate"
        assert [float(x) for x in aggregate[-4:]] == pytest.approx(
            [a.win_rate for a in stats.per_agent]
        )

    def test_parallel_equals_serial(self, tmp_path):
        serial = TournamentConfig(
            matches=8,
            master_seed=13,
            lineup=LINEUP,
            output_dir=str(tmp_path / "serial"),
            formats=("jsonl", "csv"),
        )
        parallel = TournamentConfig(
            matches=8,
            master_seed=13,
            lineup=LINEUP,
            output_dir=str(tmp_path / "parallel"),
            formats=("jsonl", "csv"),
            parallel=2,
        )
        a = run_tournament(serial)
        b = run_tournament(parallel)
        assert a.summaries == b.summaries
        for m in range(8):
            with open(tmp_path / "serial" / f"match_{m:05d}.jsonl", encoding="utf-8") as f:
                sa = f.read()
            with open(tmp_path / "parallel" / f"match_{m:05d}.jsonl", encoding="utf-8") as f:
                sb = f.read()
            assert sa == sb
        with open(tmp_path / "serial" / "matches.csv", encoding="utf-8") as f:
            ca = f.read()
        with open(tmp_path / "parallel" / "matches.csv", encoding="utf-8") as f:
            cb = f.read()
        assert ca == cb

    def test_cutoff_accounting(self):
        short = RuleConfig(max_shifts=1)
        config = TournamentConfig(matches=3, master_seed=2, lineup=LINEUP, rule_config=short)
        stats = run_tournament(config)
        assert stats.cutoff_matches == 3
        assert all(s.end_reason == "cutoff" for s in stats.summaries)
        assert all(s.shifts == 1 for s in stats.summaries)
