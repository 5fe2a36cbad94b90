"""Specification dispatch and the coalition-value oracle of the linear-time game."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import KripkeStructure, Model, ModalTransitionSystem, Partition
from .solve import Arena, solve_game
from .solve.lar import DEFAULT_CLASS_CAP, DEFAULT_NODE_CAP
from .spec.conditions import CONDITION_KINDS, ConditionError, WinningCondition, parse_condition, split_spec
from .spec.ltl import (DEFAULT_MONITOR_CAP, Fragment, UnsupportedFormula, classify_ltl, compile_cosafe,
                       compile_inf_fragment, product_game)
from .spec.syntax import Formula, atoms, parse_ctl, parse_ltl


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class Specification:
    """A parsed ``--spec`` string: a winning condition, an LTL or a CTL formula."""

    kind: str  # "condition", "ltl" or "ctl"
    text: str
    condition: WinningCondition | None = None
    formula: Formula | None = None


def parse_spec(text: str, model: Model) -> Specification:
    kind, body = split_spec(text)
    if kind == "ltl":
        f = parse_ltl(body)
        check_atoms(f, model)
        return Specification("ltl", text, formula=f)
    if kind == "ctl":
        f = parse_ctl(body)
        check_atoms(f, model)
        return Specification("ctl", text, formula=f)
    if kind in CONDITION_KINDS:
        return Specification("condition", text, condition=parse_condition(text, model.states))
    raise SpecError(f"unknown specification kind {kind!r}; expected one of "
                    f"{', '.join(CONDITION_KINDS + ('ltl', 'ctl'))}")


def check_atoms(f: Formula, model: Model) -> None:
    known = set(model.atomic_props) | set(model.states)
    unknown = sorted(atoms(f) - known)
    if unknown:
        raise SpecError(f"unknown atom {unknown[0]!r} (not a proposition or state name)")


@dataclass(frozen=True)
class LinearGame:
    """Game graph plus winning condition, with each game state assigned to a part.

    For LTL specifications the graph is the product with a monitor and every copy of
    a model state belongs to that state's part.  Calling the object with a coalition
    bitmask returns the value of that coalition (picklable, so usable in worker
    processes).
    """

    succ: tuple[tuple[int, ...], ...]
    init: int
    part_of: tuple[int, ...]
    condition: WinningCondition
    names: tuple[str, ...]
    verify: bool = False
    class_cap: int = DEFAULT_CLASS_CAP
    node_cap: int = DEFAULT_NODE_CAP

    def arena(self, mask: int) -> Arena:
        return Arena(self.succ, tuple(bool(mask >> p & 1) for p in self.part_of), self.init, self.names)

    def __call__(self, mask: int) -> int:
        sol = solve_game(self.arena(mask), self.condition, verify=self.verify,
                         class_cap=self.class_cap, node_cap=self.node_cap)
        return int(self.init in sol.win_sat)


def linear_game(model: Model, partition: Partition, spec: Specification, *, verify: bool = False,
                monitor_cap: int = DEFAULT_MONITOR_CAP, class_cap: int = DEFAULT_CLASS_CAP,
                node_cap: int = DEFAULT_NODE_CAP) -> LinearGame:
    if isinstance(model, ModalTransitionSystem):
        raise SpecError("linear-time games are played on Kripke structures; for an MTS use a "
                        "ctl specification with --two-turn, --dual or --concurrent")
    if spec.kind == "ctl":
        raise SpecError("ctl specifications need an MTS and an explicit game semantics "
                        "(--two-turn, --dual or --concurrent)")
    part_of = partition.part_of(model)
    structure: KripkeStructure = model
    projection: Sequence[int] = range(len(model.states))
    if spec.kind == "condition":
        cond = spec.condition
    else:
        frag = classify_ltl(spec.formula)
        if frag is Fragment.INF:
            cond = compile_inf_fragment(spec.formula, model)
        elif frag is Fragment.UNSUPPORTED:
            raise UnsupportedFormula(
                f"{spec.formula} is outside the supported LTL fragments (co-safe, safe, or "
                "Boolean combinations of GF/FG over propositional formulas)")
        else:
            game = product_game(model, compile_cosafe(spec.formula, cap=monitor_cap))
            structure, cond, projection = game.structure, game.condition, game.projection
    if cond is None:
        raise ConditionError("missing condition")
    return LinearGame(structure.succ, structure.init_index,
                      tuple(part_of[s] for s in projection), cond, structure.states,
                      verify, class_cap, node_cap)
