"""Command-line entry points.

Two subcommands:

  chefshat simulate  - run a seeded tournament and print aggregate statistics
  chefshat serve     - host live tables over TCP / WebSocket

Every flag can also be supplied through an environment variable named
CHEFSHAT_<FLAG> with the flag name upper-cased and dashes replaced by
underscores (e.g. --max-shifts -> CHEFSHAT_MAX_SHIFTS). An explicit flag
always wins over its environment variable; booleans accept 1/0, true/false,
yes/no, on/off.

Exit codes for simulate: 0 on success, 2 when any agent faulted during the
run (the tournament still completes; faults are recoverable), 1 on a
configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Sequence

from .agents import AGENT_FACTORIES
from .core_rules import InvalidConfigError, RuleConfig

ENV_PREFIX = "CHEFSHAT_"

# flags parse with default=None so an untouched flag is distinguishable from
# an explicit one; the environment fills untouched flags, then these apply
_DEFAULTS: dict[str, dict[str, Any]] = {
    "simulate": {
        "matches": 100,
        "seed": 0,
        "agents": "random,random,random,random",
        "rules": None,
        "out": None,
        "format": "",
        "rotate_seats": True,
        "max_shifts": None,
        "parallel": 1,
    },
    "serve": {
        "bind": "127.0.0.1:7788",
        "logs": None,
        "turn_timer": 0.0,
        "rules": None,
        "static": None,
    },
}


class ConfigError(Exception):
    """A problem with flags, environment overrides, or the rules file."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for agent faults here
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _env_name(flag: str) -> str:
    return ENV_PREFIX + flag.lstrip("-").upper().replace("-", "_")


def _parse_bool(env: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{env}: not a boolean: {raw!r}")


def _resolve(args: argparse.Namespace, sub: argparse.ArgumentParser, command: str) -> None:
    """Apply environment overrides to untouched flags, then real defaults."""
    for action in sub._actions:
        if not action.option_strings or action.dest in ("help", "_sub"):
            continue
        if getattr(args, action.dest) is not None:
            continue  # explicit flag wins
        env = _env_name(action.option_strings[0])
        raw = os.environ.get(env)
        if raw is not None:
            if isinstance(action, argparse.BooleanOptionalAction):
                value: Any = _parse_bool(env, raw)
            else:
                try:
                    value = action.type(raw) if callable(action.type) else raw
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{env}: {exc}") from None
            setattr(args, action.dest, value)
        else:
            setattr(args, action.dest, _DEFAULTS[command][action.dest])


def _load_rules(path: str | None, max_shifts: int | None) -> RuleConfig:
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read rules file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"rules file is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("rules file must hold a JSON object")
    if max_shifts is not None:
        data["max_shifts"] = max_shifts
    try:
        return RuleConfig.from_dict(data)
    except InvalidConfigError as exc:
        raise ConfigError(f"bad rules: {exc}") from None


def _parse_agents(spec: str) -> tuple[str, str, str, str]:
    names = tuple(part.strip() for part in spec.split(","))
    if len(names) != 4:
        raise ConfigError(f"--agents needs exactly 4 comma-separated names, got {len(names)}")
    for name in names:
        if name not in AGENT_FACTORIES:
            raise ConfigError(f"unknown agent {name!r}; choose from {sorted(AGENT_FACTORIES)}")
    return names  # type: ignore[return-value]


def _parse_formats(spec: str) -> tuple[str, ...]:
    if not spec:
        return ()
    formats = tuple(dict.fromkeys(part.strip() for part in spec.split(",")))
    bad = [f for f in formats if f not in ("jsonl", "csv")]
    if bad:
        raise ConfigError(f"unknown format(s) {bad}; choose from jsonl, csv")
    return formats


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="chefshat",
        description="Deterministic card-game engine: tournament simulator and match server.",
        epilog=(
            "Environment overrides: every flag maps to CHEFSHAT_<NAME> "
            "(e.g. --turn-timer -> CHEFSHAT_TURN_TIMER); explicit flags win."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a seeded batch of matches")
    sim.add_argument("--matches", type=int, default=None, help="number of matches (default 100)")
    sim.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    sim.add_argument(
        "--agents",
        type=str,
        default=None,
        help="4 comma-separated agent names (default all random)",
    )
    sim.add_argument("--rules", type=str, default=None, help="path to a rules JSON file")
    sim.add_argument("--out", type=str, default=None, help="directory for logs and stats")
    sim.add_argument(
        "--format",
        type=str,
        default=None,
        help="comma-separated outputs to write under --out: jsonl, csv",
    )
    sim.add_argument(
        "--rotate-seats",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="cycle the lineup one seat per match (default on)",
    )
    sim.add_argument("--max-shifts", type=int, default=None, help="cutoff shift count")
    sim.add_argument("--parallel", type=int, default=None, help="worker processes (default 1)")

    srv = sub.add_parser("serve", help="host live tables on one port")
    srv.add_argument("--bind", type=str, default=None, help="host:port (default 127.0.0.1:7788)")
    srv.add_argument("--logs", type=str, default=None, help="directory for finished-match logs")
    srv.add_argument(
        "--turn-timer",
        type=float,
        default=None,
        help="seconds before an auto-move is played for a slow seat; 0 disables (default)",
    )
    srv.add_argument("--rules", type=str, default=None, help="path to a rules JSON file")
    srv.add_argument(
        "--static",
        type=str,
        default=None,
        help="directory of web-client files to serve over HTTP",
    )
    sim.set_defaults(_sub=sim)
    srv.set_defaults(_sub=srv)
    return parser


def cmd_simulate(args: argparse.Namespace) -> int:
    from .simulator import TournamentConfig, run_tournament

    lineup = _parse_agents(args.agents)
    formats = _parse_formats(args.format)
    rules = _load_rules(args.rules, args.max_shifts)
    if args.matches < 1:
        raise ConfigError("--matches must be >= 1")
    if args.parallel < 1:
        raise ConfigError("--parallel must be >= 1")
    if formats and args.out is None:
        raise ConfigError("--format requires --out")
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)

    config = TournamentConfig(
        matches=args.matches,
        master_seed=args.seed,
        lineup=lineup,
        rule_config=rules,
        rotate_seats=args.rotate_seats,
        output_dir=args.out,
        formats=formats,
        parallel=args.parallel,
    )
    stats = run_tournament(config)

    print(f"matches        {stats.matches}")
    print(f"seed           {args.seed}")
    for agent in stats.per_agent:
        print(
            f"agent[{agent.lineup_index}] {agent.name:<14} "
            f"wins {agent.wins:>6}  win_rate {agent.win_rate:.4f}  "
            f"mean_score {agent.mean_score:.3f}"
        )
    print(f"mean_shifts    {stats.mean_shifts:.3f}")
    print(f"mean_pizzas    {stats.mean_pizzas:.3f}")
    print(f"pass_rate      {stats.pass_rate:.4f}")
    print(f"specials       {stats.specials}")
    print(f"cutoff_matches {stats.cutoff_matches}")
    print(f"faults         {stats.faults}")
    if stats.faulted_matches:
        print(f"faulted_matches {','.join(map(str, stats.faulted_matches))}")
    print(f"runtime_s      {stats.runtime_s:.2f}")
    if args.out is not None and formats:
        print(f"wrote {','.join(formats)} to {args.out}")
    return 2 if stats.faults else 0


def cmd_serve(args: argparse.Namespace) -> int:
    rules = _load_rules(args.rules, None)
    host, sep, port_text = args.bind.rpartition(":")
    if not sep or not host:
        raise ConfigError("--bind must look like host:port")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"--bind port is not an integer: {port_text!r}") from None
    if not 0 <= port <= 65535:
        raise ConfigError(f"--bind port out of range: {port}")
    if args.turn_timer < 0:
        raise ConfigError("--turn-timer must be >= 0")
    if args.logs is not None:
        os.makedirs(args.logs, exist_ok=True)
    # imported lazily: simulate must not pay for asyncio/server machinery
    from .server import serve_forever

    serve_forever(
        host=host,
        port=port,
        rules=rules,
        logs_dir=args.logs,
        turn_timer=args.turn_timer,
        static_dir=args.static,
    )
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve(args, args._sub, args.command)
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_serve(args)
    except ConfigError as exc:
        print(f"chefshat {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
