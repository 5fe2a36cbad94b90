"""Dispatch from winning conditions to solvers."""
from __future__ import annotations

from ..spec.conditions import (LOOP_DETERMINED, Buchi, CoBuchi, Negated, Parity, Reachability,
                               Safety, WinningCondition, check_states)
from .algorithms import solve_buchi, solve_cobuchi, solve_parity, solve_reachability, solve_safety
from .arena import SAT, UNSAT, Arena
from .lar import DEFAULT_CLASS_CAP, DEFAULT_NODE_CAP, lar_reduce
from .solution import Solution, normalize, positional_solution
from .verify import verify_strategy


class StrategyCheckFailed(AssertionError):
    """A solver produced a strategy that the independent checker rejects."""


def solve_game(arena: Arena, cond: WinningCondition, verify: bool = True, generic: bool = False,
               class_cap: int = DEFAULT_CLASS_CAP, node_cap: int = DEFAULT_NODE_CAP) -> Solution:
    """Winning regions and strategies of both players.

    ``generic`` routes every loop condition through the LAR reduction, which is how the
    specialised solvers are cross-checked.
    """
    n = len(arena)
    check_states(cond, n)
    cond = normalize(cond, n)
    if isinstance(cond, Reachability):
        sol = positional_solution(solve_reachability(arena, cond.target))
    elif isinstance(cond, Safety):
        sol = positional_solution(solve_safety(arena, cond.safe))
    elif generic or not isinstance(cond, (Buchi, CoBuchi, Parity)):
        if not isinstance(cond, LOOP_DETERMINED + (Negated,)):
            raise TypeError(f"unsupported condition {cond!r}")
        sol = solve_via_lar(arena, cond, class_cap, node_cap)
    elif isinstance(cond, Buchi):
        sol = positional_solution(solve_buchi(arena, cond.accept))
    elif isinstance(cond, CoBuchi):
        sol = positional_solution(solve_cobuchi(arena, cond.reject))
    else:
        sol = positional_solution(solve_parity(arena, [cond.of(s) for s in range(n)]))
    if verify and not verify_strategy(arena, cond, sol):
        raise StrategyCheckFailed(f"strategy check failed for {cond!r}")
    return sol


def solve_via_lar(arena: Arena, cond: WinningCondition, class_cap: int = DEFAULT_CLASS_CAP,
                  node_cap: int = DEFAULT_NODE_CAP) -> Solution:
    product = lar_reduce(arena, cond, class_cap, node_cap)
    p = product.arena
    w_sat, w_unsat, s_sat, s_unsat = solve_parity(p, product.priority)
    strategies = {SAT: {}, UNSAT: {}}
    for player, strat in ((SAT, s_sat), (UNSAT, s_unsat)):
        for k, nxt in sorted(strat.items()):
            s, mem = product.nodes[k]
            strategies[player][(mem, s)] = product.nodes[nxt][0]
    win_sat = frozenset(s for s in range(len(arena)) if product.start[s] in w_sat)
    return Solution(win_sat, frozenset(range(len(arena))) - win_sat,
                    strategies[SAT], strategies[UNSAT], product.memory,
                    len({mem for _, mem in product.nodes}))


def value_of(arena: Arena, cond: WinningCondition, **kw) -> int:
    """1 iff Sat wins from the arena's initial state."""
    return int(arena.init in solve_game(arena, cond, **kw).win_sat)
