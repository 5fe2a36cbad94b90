"""Independent strategy checker.

Fixing one player's strategy leaves a one-player graph over (state, memory) pairs.
The strategy wins iff no play in that graph violates the condition:

* reachability: no cycle avoiding the target is reachable through non-target nodes;
* safety: no unsafe node is reachable;
* loop conditions: no cycle whose projection violates the condition is reachable.
  Cycles are searched by SCC decomposition, retrying with each arena state removed
  so that every sub-loop gets examined.
"""
from __future__ import annotations

from typing import Hashable

from ..spec.conditions import (Reachability, Safety, WinningCondition, complement,
                               evaluate_on_loop)
from .arena import SAT, Arena
from .solution import Solution, normalize


def _sccs(nodes: set, succ) -> list[list]:
    """Tarjan's algorithm restricted to ``nodes`` (iterative)."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list[list] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter([t for t in succ[root] if t in nodes]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter([t for t in succ[w] if t in nodes])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _cyclic(comp, succ) -> bool:
    return len(comp) > 1 or comp[0] in succ[comp[0]]


def _bad_loop(nodes: set, succ, proj, cond, seen: set) -> frozenset | None:
    for comp in _sccs(nodes, succ):
        if not _cyclic(comp, succ):
            continue
        key = frozenset(comp)
        if key in seen:
            continue
        seen.add(key)
        states = frozenset(proj[v] for v in comp)
        if not evaluate_on_loop(cond, states):
            return states
        for s in sorted(states):
            rest = {v for v in comp if proj[v] != s}
            found = _bad_loop(rest, succ, proj, cond, seen)
            if found is not None:
                return found
    return None


def _play_graph(arena: Arena, solution: Solution, player: bool, stop=frozenset()):
    """Reachable (state, memory) graph under ``player``'s strategy, or None if undefined.

    Plays are not continued past states in ``stop``.
    """
    strategy = solution.strategy_sat if player == SAT else solution.strategy_unsat
    region = solution.win_sat if player == SAT else solution.win_unsat
    mem_of = solution.memory
    index: dict[tuple[int, Hashable], int] = {}
    nodes: list[tuple[int, Hashable]] = []
    succ: list[list[int]] = []

    def add(node):
        if node not in index:
            index[node] = len(nodes)
            nodes.append(node)
        return index[node]

    starts = [add((s, mem_of.initial(s))) for s in sorted(region)]
    k = 0
    while k < len(nodes):
        s, mem = nodes[k]
        if s in stop:
            targets = []
        elif arena.owner[s] == player:
            t = strategy.get((mem, s))
            if t is None or t not in arena.succ[s]:
                return None
            targets = [t]
        else:
            targets = arena.succ[s]
        succ.append([add((t, mem_of.update(mem, t))) for t in targets])
        k += 1
    return nodes, succ, starts


def verify_player(arena: Arena, cond: WinningCondition, solution: Solution, player: bool) -> bool:
    if player != SAT:
        cond = complement(cond, range(len(arena)))
    cond = normalize(cond, len(arena))
    stop = cond.target if isinstance(cond, Reachability) else frozenset()
    graph = _play_graph(arena, solution, player, stop)
    if graph is None:
        return False
    nodes, succ, _ = graph
    proj = [s for s, _ in nodes]
    everything = set(range(len(nodes)))
    if isinstance(cond, Safety):
        return all(s in cond.safe for s in proj)
    if isinstance(cond, Reachability):
        # every reachable play must hit the target: no cycle among nodes reachable
        # from the starts without passing the target
        stack = [v for v in graph[2] if proj[v] not in cond.target]
        free = set(stack)
        while stack:
            v = stack.pop()
            for w in succ[v]:
                if w not in free and proj[w] not in cond.target:
                    free.add(w)
                    stack.append(w)
        return not any(_cyclic(c, succ) for c in _sccs(free, succ))
    return _bad_loop(everything, succ, proj, cond, set()) is None


def verify_strategy(arena: Arena, cond: WinningCondition, solution: Solution) -> bool:
    """True iff both strategies win from every state of their player's region."""
    n = len(arena)
    if solution.win_sat & solution.win_unsat or (solution.win_sat | solution.win_unsat) != frozenset(range(n)):
        return False
    for player, strategy in ((SAT, solution.strategy_sat), (not SAT, solution.strategy_unsat)):
        if any(arena.owner[s] != player for _, s in strategy):
            return False
        if not verify_player(arena, cond, solution, player):
            return False
    return True
