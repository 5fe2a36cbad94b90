"""Specialised solvers: reachability, safety, Büchi, co-Büchi and Zielonka's parity solver.

Every solver returns the two winning regions and positional strategies for both
players, as maps ``state -> successor`` over the owned states of each region.
"""
from __future__ import annotations

import sys
from typing import Iterable, Mapping

from .arena import SAT, UNSAT, Arena, attractor

Regions = tuple[frozenset[int], frozenset[int], dict[int, int], dict[int, int]]


def _stay(arena: Arena, s: int, region) -> int:
    return min(t for t in arena.succ[s] if t in region)


def _complete(arena: Arena, player: bool, region, strategy: dict[int, int]) -> dict[int, int]:
    """Fill in a successor inside ``region`` for owned states not yet covered."""
    for s in sorted(region):
        if arena.owner[s] == player and s not in strategy:
            strategy[s] = _stay(arena, s, region)
    return strategy


def solve_reachability(arena: Arena, target: Iterable[int], player: bool = SAT) -> Regions:
    """``player`` wants to reach ``target``; the opponent wants to avoid it."""
    win, strat = attractor(arena, player, target)
    lose = frozenset(range(len(arena))) - win
    other = _complete(arena, not player, lose, {})
    if player == SAT:
        return win, lose, strat, other
    return lose, win, other, strat


def solve_safety(arena: Arena, safe: Iterable[int]) -> Regions:
    bad = frozenset(range(len(arena))) - frozenset(safe)
    return solve_reachability(arena, bad, UNSAT)


def solve_buchi(arena: Arena, accept: Iterable[int], player: bool = SAT) -> Regions:
    """``player`` wants to visit ``accept`` infinitely often."""
    accept = frozenset(accept)
    alive = set(range(len(arena)))
    opp_strat: dict[int, int] = {}
    while True:
        reach, reach_strat = attractor(arena, player, accept & alive, alive)
        trap = alive - reach
        if not trap:
            break
        lost, lost_strat = attractor(arena, not player, trap, alive)
        opp_strat.update(lost_strat)
        _complete(arena, not player, trap, opp_strat)
        alive -= lost
    win = frozenset(alive)
    strat = _complete(arena, player, win, dict(reach_strat) if alive else {})
    lose = frozenset(range(len(arena))) - win
    opp_strat = {s: t for s, t in opp_strat.items() if s in lose}
    if player == SAT:
        return win, lose, strat, opp_strat
    return lose, win, opp_strat, strat


def solve_cobuchi(arena: Arena, reject: Iterable[int]) -> Regions:
    return solve_buchi(arena, reject, UNSAT)


def solve_parity(arena: Arena, priority: Mapping[int, int] | list[int]) -> Regions:
    """Zielonka's recursive algorithm for max-parity (even priorities favour Sat)."""
    prio = [priority[s] for s in range(len(arena))]
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10_000))
    try:
        w_sat, w_unsat, s_sat, s_unsat = _zielonka(arena, prio, frozenset(range(len(arena))))
    finally:
        sys.setrecursionlimit(limit)
    return w_sat, w_unsat, s_sat, s_unsat


def _zielonka(arena: Arena, prio: list[int], nodes: frozenset[int]) -> Regions:
    if not nodes:
        return frozenset(), frozenset(), {}, {}
    top = max(prio[s] for s in nodes)
    player = top % 2 == 0  # SAT on even
    heads = frozenset(s for s in nodes if prio[s] == top)
    a, a_strat = attractor(arena, player, heads, nodes)
    sub = _zielonka(arena, prio, nodes - a)
    win = {SAT: sub[0], UNSAT: sub[1]}
    strat = {SAT: sub[2], UNSAT: sub[3]}
    if not win[not player]:
        mine = dict(strat[player])
        mine.update(a_strat)
        for s in sorted(heads):
            if arena.owner[s] == player:
                mine[s] = _stay(arena, s, nodes)
        out_win, out_strat = {player: nodes, not player: frozenset()}, {player: mine, not player: {}}
    else:
        b, b_strat = attractor(arena, not player, win[not player], nodes)
        sub2 = _zielonka(arena, prio, nodes - b)
        win2 = {SAT: sub2[0], UNSAT: sub2[1]}
        strat2 = {SAT: sub2[2], UNSAT: sub2[3]}
        theirs = dict(strat2[not player])
        theirs.update(strat[not player])
        theirs.update(b_strat)
        out_win = {player: win2[player], not player: win2[not player] | b}
        out_strat = {player: strat2[player], not player: theirs}
    return out_win[SAT], out_win[UNSAT], out_strat[SAT], out_strat[UNSAT]
