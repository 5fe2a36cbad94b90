"""Command-line front end.

Exit codes: 0 affirmative, 3 negative, 2 usage or input error, 4 size cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .branching import DEFAULT_PROFILE_CAP, CtlError, branching_game
from .bundled import BUNDLED, bundled_text
from .concurrent import DEFAULT_MATRIX_CAP, concurrent_game, payoff_matrix
from .game import SpecError, Specification, linear_game, parse_spec
from .model import Coalition, KripkeStructure, ModalTransitionSystem, ModelError, parse_model
from .shapley import DEFAULT_EXACT_CAP, CoalitionGame, decimal6, prune_forced_parts
from .solve import ResourceCapExceeded, arena_from_structure, solve_game, verify_strategy
from .solve.lar import DEFAULT_CLASS_CAP, DEFAULT_NODE_CAP
from .solve.pgsolver import PgSolverFormatError, parse_pgsolver, render_pgsolver
from .spec.conditions import ConditionError, Parity
from .spec.lexer import SpecSyntaxError
from .spec.ltl import DEFAULT_MONITOR_CAP, MonitorBlowup, UnsupportedFormula

EXIT_YES, EXIT_INPUT, EXIT_NO, EXIT_CAP = 0, 2, 3, 4


class UsageError(ValueError):
    pass


def _jobs_default() -> int:
    env = os.environ.get("IMPORTANCE_MC_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"IMPORTANCE_MC_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _common(p: argparse.ArgumentParser, spec_required: bool = True) -> None:
    p.add_argument("-m", "--model", required=spec_required,
                   help=f"model document (JSON) or bundled:NAME with NAME in {', '.join(BUNDLED)}")
    p.add_argument("-s", "--spec", required=spec_required,
                   help="'<kind>: <body>' with kind reach, safety, buchi, cobuchi, parity, rabin, "
                        "streett, muller, el, ltl or ctl")
    p.add_argument("--mode", choices=("auto", "kripke", "mts"), default="auto")
    engine = p.add_mutually_exclusive_group()
    engine.add_argument("--two-turn", dest="engine", action="store_const", const="two-turn",
                        help="two-turn CTL game on an MTS (Sat chooses first)")
    engine.add_argument("--dual", dest="engine", action="store_const", const="dual",
                        help="two-turn CTL game where Unsat chooses first")
    engine.add_argument("--concurrent", dest="engine", action="store_const", const="concurrent",
                        help="concurrent CTL game (mixed strategies, rational values)")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--paranoid", action="store_true",
                   help="disable pruning, verify every strategy and re-solve cached values")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: $IMPORTANCE_MC_JOBS or CPU count)")
    caps = p.add_argument_group("caps")
    caps.add_argument("--exact-cap", type=int, default=DEFAULT_EXACT_CAP)
    caps.add_argument("--class-cap", type=int, default=DEFAULT_CLASS_CAP,
                      help="max loop classes for the LAR reduction")
    caps.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP,
                      help="max nodes of the LAR product")
    caps.add_argument("--monitor-cap", type=int, default=DEFAULT_MONITOR_CAP)
    caps.add_argument("--profile-cap", type=int, default=DEFAULT_PROFILE_CAP)
    caps.add_argument("--matrix-cap", type=int, default=DEFAULT_MATRIX_CAP)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="importance-mc",
        description="Shapley importance of states in Kripke structures and modal transition systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("value", help="value of a coalition")
    _common(p)
    p.add_argument("--coalition", default="", help="comma-separated part names owned by Sat")
    p.add_argument("--unsat", action="store_true",
                   help="--coalition lists Unsat's parts; Sat owns the others")
    p.add_argument("--dump-matrix", metavar="CSV", help="write the payoff matrix (concurrent only)")

    p = sub.add_parser("usefulness", help="is a part useful (importance > 0)?")
    _common(p)
    p.add_argument("--part", required=True)

    p = sub.add_parser("threshold", help="is the importance of a part strictly above eta?")
    _common(p)
    p.add_argument("--part", required=True)
    p.add_argument("--eta", required=True, help="exact rational p/q")

    p = sub.add_parser("importance", help="importance of every part")
    _common(p)
    p.add_argument("--exact", action="store_true", help="exact computation (default)")
    p.add_argument("--sample", type=int, metavar="N", help="estimate from N random orderings")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("solve", help="solve one game and print regions and strategies")
    _common(p, spec_required=False)
    p.add_argument("--pgsolver", metavar="FILE", help="parity game in PGSolver format")
    p.add_argument("--coalition", default="", help="comma-separated part names owned by Sat")
    p.add_argument("--verify", action="store_true", help="check the strategies independently")
    p.add_argument("--export-pgsolver", metavar="FILE", help="write a parity arena in PGSolver format")
    return parser


# --- helpers -------------------------------------------------------------------

def _read_model(args):
    ref = args.model
    if ref.startswith("bundled:"):
        text = bundled_text(ref.split(":", 1)[1])
    else:
        text = Path(ref).read_text(encoding="utf-8")
    kind = None if args.mode == "auto" else args.mode
    return parse_model(text, kind)


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _coalition(partition, text: str, unsat: bool = False) -> Coalition:
    names = _names(text)
    unknown = [x for x in names if x not in partition.names]
    if unknown:
        raise UsageError(f"unknown part {unknown[0]!r}; parts are {', '.join(partition.names)}")
    if unsat:
        names = [x for x in partition.names if x not in names]
    return Coalition.from_names(partition, names)


def _part(partition, name: str) -> int:
    if name not in partition.names:
        raise UsageError(f"unknown part {name!r}; parts are {', '.join(partition.names)}")
    return partition.names.index(name)


def parse_eta(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"eta must be an exact rational such as 1/2, got {text!r}") from None


def _fmt(x) -> str:
    return str(Fraction(x))


def make_game(args, model, partition, spec: Specification) -> CoalitionGame:
    jobs = args.jobs if args.jobs is not None else _jobs_default()
    engine = args.engine
    if isinstance(model, ModalTransitionSystem):
        if spec.kind != "ctl":
            raise UsageError("an MTS needs a ctl specification with --two-turn, --dual or --concurrent")
        if engine is None:
            raise UsageError("choose the game semantics for an MTS: --two-turn, --dual or --concurrent")
        if engine == "concurrent":
            return concurrent_game(model, spec.formula, partition, paranoid=args.paranoid, jobs=jobs,
                                   matrix_cap=args.matrix_cap)
        return branching_game(model, spec.formula, partition, dual=engine == "dual",
                              paranoid=args.paranoid, jobs=jobs, profile_cap=args.profile_cap)
    if engine is not None:
        raise UsageError(f"--{engine} applies to modal transition systems only")
    if spec.kind == "ctl":
        raise UsageError("ctl specifications are evaluated on an MTS with --two-turn, --dual or "
                         "--concurrent; for a Kripke structure use an ltl or condition specification")
    game = linear_game(model, partition, spec, verify=args.paranoid, monitor_cap=args.monitor_cap,
                       class_cap=args.class_cap, node_cap=args.node_cap)
    return CoalitionGame(game, partition.names, prune_forced_parts(model, partition), engine="game",
                         paranoid=args.paranoid, jobs=jobs)


def _emit(args, doc: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        print(text)


# --- commands ------------------------------------------------------------------

def cmd_value(args) -> int:
    model, partition = _read_model(args)
    spec = parse_spec(args.spec, model)
    coalition = _coalition(partition, args.coalition, args.unsat)
    game = make_game(args, model, partition, spec)
    value = Fraction(game.value(coalition.mask))
    if args.dump_matrix:
        if game.engine != "concurrent":
            raise UsageError("--dump-matrix needs --concurrent")
        Path(args.dump_matrix).write_text(
            payoff_matrix(model, spec.formula, coalition, partition, args.matrix_cap).to_csv())
    sat = [partition.names[p] for p in sorted(coalition.part_indices)]
    _emit(args, {"engine": game.engine, "coalition": sat,
                 "value": {"num": value.numerator, "den": value.denominator}}, _fmt(value))
    return EXIT_YES if value == 1 else EXIT_NO


def cmd_usefulness(args) -> int:
    model, partition = _read_model(args)
    spec = parse_spec(args.spec, model)
    game = make_game(args, model, partition, spec)
    i = _part(partition, args.part)
    if game.fractional:
        imp = game.importance(i, args.exact_cap)
        useful, witness = imp > 0, None
    else:
        useful, witness = game.usefulness(i)
    doc = {"engine": game.engine, "part": args.part, "useful": useful}
    text = f"{args.part}: {'useful' if useful else 'not useful'}"
    if witness is not None:
        names = [partition.names[p] for p in range(len(partition.names)) if witness >> p & 1]
        doc["critical_pair"] = {"part": args.part, "coalition": names}
        text += f"\ncritical pair: ({args.part}, {{{', '.join(names)}}})"
    _emit(args, doc, text)
    return EXIT_YES if useful else EXIT_NO


def cmd_threshold(args) -> int:
    eta = parse_eta(args.eta)
    model, partition = _read_model(args)
    spec = parse_spec(args.spec, model)
    game = make_game(args, model, partition, spec)
    i = _part(partition, args.part)
    imp = game.importance(i, args.exact_cap)
    above = imp > eta
    _emit(args, {"engine": game.engine, "part": args.part,
                 "importance": {"num": imp.numerator, "den": imp.denominator},
                 "eta": {"num": eta.numerator, "den": eta.denominator}, "above": above},
          f"{'yes' if above else 'no'}: I({args.part}) = {_fmt(imp)} {'>' if above else '<='} {_fmt(eta)}")
    return EXIT_YES if above else EXIT_NO


def cmd_importance(args) -> int:
    model, partition = _read_model(args)
    spec = parse_spec(args.spec, model)
    game = make_game(args, model, partition, spec)
    if args.sample is not None:
        if args.sample < 1:
            raise UsageError("--sample needs a positive count")
        report = game.sampled(args.sample, args.seed)
        _emit(args, report.to_dict(), report.render_table())
    else:
        report = game.exact(args.exact_cap)
        _emit(args, report.to_dict(), report.render_table())
    game.close()
    return EXIT_YES


def cmd_solve(args) -> int:
    if args.pgsolver:
        arena, cond = parse_pgsolver(Path(args.pgsolver).read_text(encoding="utf-8"))
    else:
        if not (args.model and args.spec):
            raise UsageError("solve needs --pgsolver FILE or --model and --spec")
        model, partition = _read_model(args)
        if not isinstance(model, KripkeStructure):
            raise UsageError("solve works on Kripke structures")
        spec = parse_spec(args.spec, model)
        if spec.kind == "ctl":
            raise UsageError("solve takes a winning condition or an ltl specification")
        game = linear_game(model, partition, spec, verify=False, monitor_cap=args.monitor_cap,
                           class_cap=args.class_cap, node_cap=args.node_cap)
        arena = game.arena(_coalition(partition, args.coalition).mask)
        cond = game.condition
    sol = solve_game(arena, cond, verify=args.paranoid, class_cap=args.class_cap, node_cap=args.node_cap)
    verified = verify_strategy(arena, cond, sol) if args.verify else None
    if args.export_pgsolver:
        if not isinstance(cond, Parity):
            raise UsageError("--export-pgsolver needs a parity condition")
        Path(args.export_pgsolver).write_text(render_pgsolver(arena, cond))
    name = arena.name

    def table(strategy):
        return [{"memory": str(mem) if sol.memory_size > 1 else None, "state": name(s), "move": name(t)}
                for (mem, s), t in sorted(strategy.items(), key=lambda kv: (kv[0][1], str(kv[0][0])))]

    doc = {"init": name(arena.init), "init_winner": "sat" if arena.init in sol.win_sat else "unsat",
           "win_sat": [name(s) for s in sorted(sol.win_sat)],
           "win_unsat": [name(s) for s in sorted(sol.win_unsat)],
           "memory_size": sol.memory_size,
           "strategy_sat": table(sol.strategy_sat), "strategy_unsat": table(sol.strategy_unsat)}
    lines = [f"winner at {name(arena.init)}: {doc['init_winner']}",
             f"win_sat:   {{{', '.join(doc['win_sat'])}}}",
             f"win_unsat: {{{', '.join(doc['win_unsat'])}}}",
             f"memory size: {sol.memory_size}"]
    for who in ("sat", "unsat"):
        lines.append(f"strategy {who}:")
        for row in doc[f"strategy_{who}"]:
            mem = f" [{row['memory']}]" if row["memory"] else ""
            lines.append(f"  {row['state']}{mem} -> {row['move']}")
    if verified is not None:
        doc["verified"] = verified
        lines.append("strategies verified" if verified else "strategy check FAILED")
    _emit(args, doc, "\n".join(lines))
    if verified is False:
        return EXIT_NO
    return EXIT_YES if arena.init in sol.win_sat else EXIT_NO


COMMANDS = {"value": cmd_value, "usefulness": cmd_usefulness, "threshold": cmd_threshold,
            "importance": cmd_importance, "solve": cmd_solve}

INPUT_ERRORS = (UsageError, ModelError, SpecSyntaxError, ConditionError, SpecError, UnsupportedFormula,
                CtlError, PgSolverFormatError, OSError, KeyError)
CAP_ERRORS = (ResourceCapExceeded, MonitorBlowup)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_YES
    try:
        return COMMANDS[args.command](args)
    except CAP_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except INPUT_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
