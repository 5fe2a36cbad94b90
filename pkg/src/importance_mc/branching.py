"""CTL model checking and the two-turn game on modal transition systems.

A pure strategy picks, for every owned state, a successor set between its must and
may successors.  In the two-turn game Sat fixes her choices first, then Unsat; Sat
wins when the resulting Kripke structure satisfies the CTL formula.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .model import Coalition, KripkeStructure, ModalTransitionSystem, Partition, default_partition
from .solve.arena import ResourceCapExceeded
from .spec.syntax import AU, EU, EX, And, Atom, Const, Formula, Not, Or, atoms

DEFAULT_PROFILE_CAP = 2**24


class CtlError(ValueError):
    pass


def _sat_set(f: Formula, n: int, succ: Sequence[int], atom_mask) -> int:
    """Bitset of states satisfying ``f``; ``succ[s]`` is the successor bitset of ``s``."""
    full = (1 << n) - 1
    if isinstance(f, Const):
        return full if f.value else 0
    if isinstance(f, Atom):
        return atom_mask(f.name)
    if isinstance(f, Not):
        return full & ~_sat_set(f.arg, n, succ, atom_mask)
    if isinstance(f, And):
        return _sat_set(f.left, n, succ, atom_mask) & _sat_set(f.right, n, succ, atom_mask)
    if isinstance(f, Or):
        return _sat_set(f.left, n, succ, atom_mask) | _sat_set(f.right, n, succ, atom_mask)
    if isinstance(f, EX):
        target = _sat_set(f.arg, n, succ, atom_mask)
        return _pre_exists(n, succ, target)
    if isinstance(f, EU):
        keep = _sat_set(f.left, n, succ, atom_mask)
        z = _sat_set(f.right, n, succ, atom_mask)
        while True:
            nxt = z | (keep & _pre_exists(n, succ, z))
            if nxt == z:
                return z
            z = nxt
    if isinstance(f, AU):
        keep = _sat_set(f.left, n, succ, atom_mask)
        z = _sat_set(f.right, n, succ, atom_mask)
        while True:
            nxt = z | (keep & _pre_forall(n, succ, z))
            if nxt == z:
                return z
            z = nxt
    raise CtlError(f"not a CTL formula in core syntax: {f}")


def _pre_exists(n: int, succ: Sequence[int], target: int) -> int:
    out = 0
    for s in range(n):
        if succ[s] & target:
            out |= 1 << s
    return out


def _pre_forall(n: int, succ: Sequence[int], target: int) -> int:
    out = 0
    for s in range(n):
        if succ[s] & ~target == 0:
            out |= 1 << s
    return out


def _atom_masks(labels: Sequence[frozenset[str]]):
    cache: dict[str, int] = {}

    def mask(name: str) -> int:
        if name not in cache:
            cache[name] = sum(1 << s for s, lab in enumerate(labels) if name in lab)
        return cache[name]

    return mask


def _check_atoms(f: Formula, model) -> None:
    known = set(model.atomic_props) | set(model.states)
    unknown = sorted(atoms(f) - known)
    if unknown:
        raise CtlError(f"unknown atom {unknown[0]!r}")


def sat_states(k: KripkeStructure, f: Formula) -> frozenset[int]:
    """Indices of the states of ``k`` satisfying ``f`` (bottom-up labelling)."""
    _check_atoms(f, k)
    n = len(k.states)
    succ = [sum(1 << t for t in out) for out in k.succ]
    labels = [k.effective_label(s) for s in range(n)]
    z = _sat_set(f, n, succ, _atom_masks(labels))
    return frozenset(s for s in range(n) if z >> s & 1)


def check_ctl(k: KripkeStructure, f: Formula) -> bool:
    return k.init_index in sat_states(k, f)


# --- strategies -----------------------------------------------------------------

@dataclass(frozen=True)
class PureStrategy:
    """Chosen successor sets (state indices) of the owned states."""

    choice: tuple[tuple[int, frozenset[int]], ...]

    def as_dict(self) -> dict[int, frozenset[int]]:
        return dict(self.choice)

    def describe(self, mts: ModalTransitionSystem) -> str:
        """Edge-choice bitstring: one bit per optional edge of the owned states."""
        bits = []
        for s, chosen in self.choice:
            bits.extend("1" if t in chosen else "0" for t in mts.optional(s))
        return "".join(bits) or "-"


def _state_choices(must: frozenset[int], optional: Sequence[int]) -> list[frozenset[int]]:
    # binary counter over the optional edges, must-only first and may-closure last
    out = []
    for counter in range(1 << len(optional)):
        out.append(must | frozenset(t for k, t in enumerate(optional) if counter >> k & 1))
    return out


def strategy_count(mts: ModalTransitionSystem, owned: Iterable[int]) -> int:
    count = 1
    for s in owned:
        count <<= len(mts.optional(s))
    return count


def enumerate_pure_strategies(mts: ModalTransitionSystem, owned: Iterable[int]) -> Iterator[PureStrategy]:
    states = sorted(set(owned))
    per_state = [_state_choices(frozenset(mts.must[s]), mts.optional(s)) for s in states]
    for combo in itertools.product(*per_state):
        yield PureStrategy(tuple(zip(states, combo)))


def induced_kripke(mts: ModalTransitionSystem, sat: PureStrategy, unsat: PureStrategy) -> KripkeStructure:
    choice = {**sat.as_dict(), **unsat.as_dict()}
    if set(choice) != set(range(len(mts.states))):
        raise ValueError("strategy profile must cover every state exactly once")
    names = mts.states
    edges = frozenset((names[s], names[t]) for s, ts in choice.items() for t in ts)
    return KripkeStructure(names, mts.atomic_props, edges, mts.init,
                           {s: mts.labeling.get(s, frozenset()) for s in names})


# --- the two-turn game as a value oracle --------------------------------------------

@dataclass(frozen=True)
class BranchingGame:
    """Everything needed to evaluate strategy profiles quickly, as bitsets.

    ``choices[s]`` lists the successor bitsets available at ``s`` in enumeration order.
    Calling the object with a coalition mask (over parts) gives the two-turn value, or
    the dual value when ``dual`` is set.
    """

    n: int
    init: int
    choices: tuple[tuple[int, ...], ...]
    labels: tuple[frozenset[str], ...]
    part_of: tuple[int, ...]
    n_parts: int
    formula: Formula
    dual: bool = False
    profile_cap: int = DEFAULT_PROFILE_CAP

    @classmethod
    def build(cls, mts: ModalTransitionSystem, f: Formula, partition: Partition | None = None,
              dual: bool = False, profile_cap: int = DEFAULT_PROFILE_CAP) -> "BranchingGame":
        _check_atoms(f, mts)
        partition = partition or default_partition(mts)
        n = len(mts.states)
        choices = tuple(tuple(sum(1 << t for t in c) for c in
                              _state_choices(frozenset(mts.must[s]), mts.optional(s)))
                        for s in range(n))
        return cls(n, mts.init_index, choices, tuple(mts.effective_label(s) for s in range(n)),
                   partition.part_of(mts), len(partition.parts), f, dual, profile_cap)

    def owned(self, mask: int) -> tuple[list[int], list[int]]:
        sat = [s for s in range(self.n) if mask >> self.part_of[s] & 1]
        unsat = [s for s in range(self.n) if not mask >> self.part_of[s] & 1]
        return sat, unsat

    def profiles(self, states: Sequence[int]) -> Iterator[tuple[tuple[int, int], ...]]:
        free = [s for s in states if len(self.choices[s]) > 1]
        for combo in itertools.product(*(self.choices[s] for s in free)):
            yield tuple(zip(free, combo))

    def count(self, states: Sequence[int]) -> int:
        out = 1
        for s in states:
            out *= len(self.choices[s])
        return out

    def holds(self, formula: Formula, picks: Iterable[tuple[int, int]]) -> bool:
        succ = [c[0] for c in self.choices]  # must-only default for undecided states
        for s, m in picks:
            succ[s] = m
        z = _sat_set(formula, self.n, succ, _atom_masks(self.labels))
        return bool(z >> self.init & 1)

    def two_turn(self, formula: Formula, mask: int) -> int:
        sat, unsat = self.owned(mask)
        total = self.count(sat) * self.count(unsat)
        if total > self.profile_cap:
            raise ResourceCapExceeded(f"{total} strategy profiles exceed the cap of {self.profile_cap}")
        masks = _atom_masks(self.labels)
        succ = [c[0] for c in self.choices]
        unsat_profiles = list(self.profiles(unsat))
        for sp in self.profiles(sat):
            for s, m in sp:
                succ[s] = m
            for up in unsat_profiles:
                for s, m in up:
                    succ[s] = m
                if not _sat_set(formula, self.n, succ, masks) >> self.init & 1:
                    break
            else:
                return 1
        return 0

    def __call__(self, mask: int) -> int:
        if self.dual:
            full = (1 << self.n_parts) - 1
            return 1 - self.two_turn(Not(self.formula), full & ~mask)
        return self.two_turn(self.formula, mask)


def _mask(partition: Partition, coalition) -> int:
    if isinstance(coalition, Coalition):
        return coalition.mask
    if isinstance(coalition, int):
        return coalition
    return Coalition.from_names(partition, coalition).mask


def two_turn_value(mts: ModalTransitionSystem, f: Formula, coalition, partition: Partition | None = None,
                   profile_cap: int = DEFAULT_PROFILE_CAP) -> int:
    partition = partition or default_partition(mts)
    return BranchingGame.build(mts, f, partition, profile_cap=profile_cap)(_mask(partition, coalition))


def dual_two_turn_value(mts: ModalTransitionSystem, f: Formula, coalition, partition: Partition | None = None,
                        profile_cap: int = DEFAULT_PROFILE_CAP) -> int:
    partition = partition or default_partition(mts)
    return BranchingGame.build(mts, f, partition, dual=True, profile_cap=profile_cap)(_mask(partition, coalition))


def branching_game(mts, f, partition=None, *, dual=False, paranoid=False, jobs=1,
                   profile_cap: int = DEFAULT_PROFILE_CAP):
    from .shapley import CoalitionGame, prune_forced_parts

    partition = partition or default_partition(mts)
    game = BranchingGame.build(mts, f, partition, dual, profile_cap)
    return CoalitionGame(game, partition.names, prune_forced_parts(mts, partition),
                         engine="dual" if dual else "two-turn", paranoid=paranoid, jobs=jobs)


def two_turn_importance(mts, f, partition=None, cap: int | None = None, **kw):
    from .shapley import DEFAULT_EXACT_CAP

    return branching_game(mts, f, partition, **kw).exact(cap or DEFAULT_EXACT_CAP)
