"""Solutions of turn-based games."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable

from ..spec.conditions import Negated, WinningCondition, complement


class PositionalMemory:
    """Trivial memory: a single value, 0."""

    size = 1

    def initial(self, state: int) -> int:
        return 0

    def update(self, mem: int, state: int) -> int:
        return 0

    def __eq__(self, other):
        return isinstance(other, PositionalMemory)

    def __hash__(self):
        return 0

    def __repr__(self):
        return "PositionalMemory()"


POSITIONAL = PositionalMemory()


@dataclass
class Solution:
    """Winning regions plus strategies keyed by ``(memory, state)``.

    ``memory.initial(s)`` is the memory value after a play starts in ``s`` and
    ``memory.update(m, t)`` the value after moving to ``t``.
    """

    win_sat: frozenset[int]
    win_unsat: frozenset[int]
    strategy_sat: dict[tuple[Hashable, int], int]
    strategy_unsat: dict[tuple[Hashable, int], int]
    memory: object = field(default=POSITIONAL)
    memory_size: int = 1

    def winner(self, state: int) -> bool:
        return state in self.win_sat

    def positional(self, player: bool) -> dict[int, int]:
        """Strategy as ``state -> successor``; only meaningful when memory_size is 1."""
        strategy = self.strategy_sat if player else self.strategy_unsat
        return {s: t for (_, s), t in strategy.items()}


def positional_solution(regions) -> Solution:
    w_sat, w_unsat, s_sat, s_unsat = regions
    return Solution(frozenset(w_sat), frozenset(w_unsat),
                    {(0, s): t for s, t in sorted(s_sat.items())},
                    {(0, s): t for s, t in sorted(s_unsat.items())})


def normalize(cond: WinningCondition, n: int) -> WinningCondition:
    """Strip ``Negated`` wrappers where a structural complement exists."""
    while isinstance(cond, Negated):
        inner = cond.inner
        if isinstance(inner, Negated):
            cond = inner.inner
            continue
        flipped = complement(inner, range(n))
        if isinstance(flipped, Negated):
            return cond
        cond = flipped
    return cond
