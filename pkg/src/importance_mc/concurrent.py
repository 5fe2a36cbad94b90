"""Concurrent CTL game: 0/1 payoff matrices solved as zero-sum matrix games.

Both players pick a pure strategy at the same time; Sat gets 1 when the induced
Kripke structure satisfies the formula.  The value of the mixed extension is found by
an exact rational simplex (Bland's rule) after removing dominated rows and columns.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .branching import BranchingGame, PureStrategy, _check_atoms, _mask, enumerate_pure_strategies
from .model import ModalTransitionSystem, Partition, default_partition
from .solve.arena import ResourceCapExceeded
from .spec.syntax import Formula

DEFAULT_MATRIX_CAP = 2**22


class LpCheckFailed(AssertionError):
    pass


@dataclass(frozen=True)
class PayoffMatrix:
    rows: tuple[str, ...]  # Sat strategy descriptors
    cols: tuple[str, ...]  # Unsat strategy descriptors
    entries: tuple[tuple[int, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sat\\unsat", *self.cols])
        for name, row in zip(self.rows, self.entries):
            w.writerow([name, *row])
        return buf.getvalue()


@dataclass(frozen=True)
class MatrixGameSolution:
    value: Fraction
    row_mix: tuple[Fraction, ...]
    col_mix: tuple[Fraction, ...]


# --- exact LP -----------------------------------------------------------------

def _dominance_reduce(a: Sequence[Sequence[int]]) -> tuple[list[int], list[int]]:
    """Indices of surviving rows and columns after iterated weak-dominance removal.

    Among identical rows (columns) the lowest index survives.
    """
    rows = list(range(len(a)))
    cols = list(range(len(a[0])))
    changed = True
    while changed:
        changed = False
        vecs = {r: tuple(a[r][c] for c in cols) for r in rows}
        keep = []
        for r in rows:
            if not any(o != r and all(x >= y for x, y in zip(vecs[o], vecs[r]))
                       and (vecs[o] != vecs[r] or o < r) for o in rows):
                keep.append(r)
        if len(keep) < len(rows):
            rows, changed = keep, True
        vecs = {c: tuple(a[r][c] for r in rows) for c in cols}
        keep = []
        for c in cols:
            if not any(o != c and all(x <= y for x, y in zip(vecs[o], vecs[c]))
                       and (vecs[o] != vecs[c] or o < c) for o in cols):
                keep.append(c)
        if len(keep) < len(cols):
            cols, changed = keep, True
    return rows, cols


def _simplex(b: list[list[Fraction]]) -> tuple[list[Fraction], list[Fraction]]:
    """Maximize sum(y) s.t. b·y <= 1, y >= 0 for a positive matrix ``b``.

    Returns the optimal primal ``y`` and dual ``x`` (one price per row).
    """
    m, n = len(b), len(b[0])
    tab = [list(b[i]) + [Fraction(int(k == i)) for k in range(m)] + [Fraction(1)] for i in range(m)]
    obj = [Fraction(-1)] * n + [Fraction(0)] * (m + 1)
    basis = [n + i for i in range(m)]
    while True:
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            break
        best = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][-1] / tab[i][enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            raise ArithmeticError("unbounded LP (payoffs must be positive)")
        r = best[1]
        piv = tab[r][enter]
        tab[r] = [v / piv for v in tab[r]]
        for i in range(m):
            if i != r and tab[i][enter]:
                f = tab[i][enter]
                tab[i] = [v - f * w for v, w in zip(tab[i], tab[r])]
        f = obj[enter]
        obj = [v - f * w for v, w in zip(obj, tab[r])]
        basis[r] = enter
    y = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            y[j] = tab[i][-1]
    x = obj[n:n + m]
    return y, x


def matrix_game_value(m: PayoffMatrix | Sequence[Sequence[int]]) -> MatrixGameSolution:
    """Value and optimal mixed strategies of the zero-sum game (row player maximizes)."""
    a = m.entries if isinstance(m, PayoffMatrix) else [list(r) for r in m]
    if not a or not a[0]:
        raise ValueError("empty payoff matrix")
    rows, cols = _dominance_reduce(a)
    shift = 1 - min(min(a[r][c] for c in cols) for r in rows)  # make every payoff >= 1
    b = [[Fraction(a[r][c] + shift) for c in cols] for r in rows]
    y, x = _simplex(b)
    total = sum(y)
    if total != sum(x):
        raise LpCheckFailed(f"primal {total} and dual {sum(x)} LP values differ")
    value_b = 1 / total
    row_mix = [Fraction(0)] * len(a)
    col_mix = [Fraction(0)] * len(a[0])
    for k, r in enumerate(rows):
        row_mix[r] = x[k] * value_b
    for k, c in enumerate(cols):
        col_mix[c] = y[k] * value_b
    value = value_b - shift
    _verify(a, value, row_mix, col_mix)
    return MatrixGameSolution(value, tuple(row_mix), tuple(col_mix))


def _verify(a, value, row_mix, col_mix) -> None:
    if sum(row_mix) != 1 or sum(col_mix) != 1 or min(row_mix) < 0 or min(col_mix) < 0:
        raise LpCheckFailed("mixed strategies are not distributions")
    nz_rows = [(r, p) for r, p in enumerate(row_mix) if p]
    nz_cols = [(c, q) for c, q in enumerate(col_mix) if q]
    for c in range(len(a[0])):
        if sum(p * a[r][c] for r, p in nz_rows) < value:
            raise LpCheckFailed(f"row mix falls below the value against column {c}")
    for r in range(len(a)):
        if sum(q * a[r][c] for c, q in nz_cols) > value:
            raise LpCheckFailed(f"column mix exceeds the value against row {r}")


# --- the concurrent game ----------------------------------------------------------

@dataclass(frozen=True)
class ConcurrentGame:
    """Coalition-value oracle of the concurrent game (exact rationals)."""

    game: BranchingGame
    matrix_cap: int = DEFAULT_MATRIX_CAP

    def entries(self, mask: int) -> list[list[int]]:
        g = self.game
        sat, unsat = g.owned(mask)
        total = g.count(sat) * g.count(unsat)
        if total > self.matrix_cap:
            raise ResourceCapExceeded(f"payoff matrix with {total} entries exceeds the cap of {self.matrix_cap}")
        cols = list(g.profiles(unsat))
        return [[int(g.holds(g.formula, sp + up)) for up in cols] for sp in g.profiles(sat)]

    def __call__(self, mask: int) -> Fraction:
        return matrix_game_value(self.entries(mask)).value


def payoff_matrix(mts: ModalTransitionSystem, f: Formula, coalition, partition: Partition | None = None,
                  matrix_cap: int = DEFAULT_MATRIX_CAP) -> PayoffMatrix:
    partition = partition or default_partition(mts)
    game = BranchingGame.build(mts, f, partition)
    mask = _mask(partition, coalition)
    sat, unsat = game.owned(mask)
    rows = list(enumerate_pure_strategies(mts, sat))
    cols = list(enumerate_pure_strategies(mts, unsat))
    if len(rows) * len(cols) > matrix_cap:
        raise ResourceCapExceeded(f"payoff matrix with {len(rows) * len(cols)} entries exceeds "
                                  f"the cap of {matrix_cap}")
    entries = ConcurrentGame(game, matrix_cap).entries(mask)
    return PayoffMatrix(tuple(r.describe(mts) for r in rows), tuple(c.describe(mts) for c in cols),
                        tuple(map(tuple, entries)))


def concurrent_value(mts, f, coalition, partition=None, matrix_cap: int = DEFAULT_MATRIX_CAP) -> Fraction:
    partition = partition or default_partition(mts)
    return ConcurrentGame(BranchingGame.build(mts, f, partition), matrix_cap)(_mask(partition, coalition))


def concurrent_game(mts, f, partition=None, *, paranoid=False, jobs=1, matrix_cap: int = DEFAULT_MATRIX_CAP):
    from .shapley import CoalitionGame, prune_forced_parts

    _check_atoms(f, mts)
    partition = partition or default_partition(mts)
    oracle = ConcurrentGame(BranchingGame.build(mts, f, partition), matrix_cap)
    return CoalitionGame(oracle, partition.names, prune_forced_parts(mts, partition),
                         engine="concurrent", fractional=True, paranoid=paranoid, jobs=jobs)


def concurrent_importance(mts, f, partition=None, cap: int | None = None, **kw):
    from .shapley import DEFAULT_EXACT_CAP

    return concurrent_game(mts, f, partition, **kw).exact(cap or DEFAULT_EXACT_CAP)


__all__ = ["PayoffMatrix", "MatrixGameSolution", "matrix_game_value", "payoff_matrix", "concurrent_value",
           "concurrent_game", "concurrent_importance", "ConcurrentGame", "LpCheckFailed", "PureStrategy"]
