"""Run a seeded round-robin style tournament and print the standings.

Seats rotate one position each match so every lineup entry plays every
chair equally often; with identical agents the win rates converge to 25%
each, which is the built-in fairness check. The same thing is available
from the command line:

    chefshat simulate --matches 400 --seed 99 --agents random,greedy,conservative,random

    python3 demos/tournament.py [matches] [seed]
"""

from __future__ import annotations

import sys

from chefshat import TournamentConfig, run_tournament

MATCHES = 400
SEED = 99
LINEUP = ("random", "greedy", "conservative", "random")


def main() -> None:
    matches = int(sys.argv[1]) if len(sys.argv) > 1 else MATCHES
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else SEED
    config = TournamentConfig(matches=matches, master_seed=seed, lineup=LINEUP)
    stats = run_tournament(config)

    print(f"{matches} matches, master seed {seed}\n")
    print(f"{'agent':<16}{'wins':>8}{'win rate':>12}{'mean score':>14}")
    for a in sorted(stats.per_agent, key=lambda a: -a.wins):
        print(f"{a.name:<16}{a.wins:>8}{a.win_rate:>12.4f}{a.mean_score:>14.3f}")
    print()
    print(f"mean shifts per match  {stats.mean_shifts:.2f}")
    print(f"mean pizzas per match  {stats.mean_pizzas:.2f}")
    print(f"pass rate              {stats.pass_rate:.3f}")
    print(f"special declarations   {stats.specials}")
    print(f"cutoff matches         {stats.cutoff_matches}")
    print(f"agent faults           {stats.faults}")
    print(f"runtime                {stats.runtime_s:.2f} s")
    print("\nRerun with the same arguments: every number above is identical.")


if __name__ == "__main__":
    main()
