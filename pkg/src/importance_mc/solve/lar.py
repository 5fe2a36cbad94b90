"""Latest-appearance-record reduction of loop conditions to max-parity.

States are first grouped into *loop classes* (see ``loop_classes``): the condition only
depends on which classes recur.  The record is a permutation of the classes, most
recent first.  Entering a state of class ``c`` found at position ``h`` moves ``c`` to
the front; the product node remembers ``h``.  Its priority is ``2h+2`` when the classes
at positions ``0..h`` of the old record satisfy the condition, ``2h+1`` otherwise.
Along any play the largest ``h`` seen infinitely often covers exactly the recurring
classes, so the parity winner is the winner of the original condition.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..spec.conditions import WinningCondition, evaluate_on_loop, loop_classes
from .arena import Arena, ResourceCapExceeded

DEFAULT_CLASS_CAP = 12
DEFAULT_NODE_CAP = 250_000

Memory = tuple[tuple[int, ...], int]  # (record, hit position)


@dataclass(frozen=True)
class LarMemory:
    """Memory structure of LAR strategies; a memory value is ``(record, hit)``."""

    class_of: tuple[int, ...]
    n_classes: int

    def initial(self, state: int) -> Memory:
        return self.update((tuple(range(self.n_classes)), 0), state)

    def update(self, mem: Memory, state: int) -> Memory:
        record = mem[0]
        c = self.class_of[state]
        h = record.index(c)
        return (c,) + record[:h] + record[h + 1:], h


@dataclass(frozen=True)
class LarProduct:
    arena: Arena
    priority: tuple[int, ...]
    nodes: tuple[tuple[int, Memory], ...]  # product node -> (arena state, memory)
    start: tuple[int, ...]  # arena state -> product node entered first
    memory: LarMemory


def lar_reduce(arena: Arena, cond: WinningCondition, class_cap: int = DEFAULT_CLASS_CAP,
               node_cap: int = DEFAULT_NODE_CAP) -> LarProduct:
    n = len(arena)
    classes = loop_classes(cond, n)
    if len(classes) > class_cap:
        raise ResourceCapExceeded(
            f"LAR reduction needs {len(classes)} loop classes, cap is {class_cap}")
    class_of = [0] * n
    for k, cls in enumerate(classes):
        for s in cls:
            class_of[s] = k
    memory = LarMemory(tuple(class_of), len(classes))
    verdict: dict[frozenset[int], bool] = {}

    def priority(record, h) -> int:
        key = frozenset(record[:h + 1])
        if key not in verdict:
            states = frozenset().union(*(classes[c] for c in key))
            verdict[key] = evaluate_on_loop(cond, states)
        return 2 * h + 2 if verdict[key] else 2 * h + 1

    index: dict[tuple[int, Memory], int] = {}
    nodes: list[tuple[int, Memory]] = []
    prio: list[int] = []

    def visit(node) -> int:
        k = index.get(node)
        if k is None:
            if len(nodes) >= node_cap:
                raise ResourceCapExceeded(f"LAR product exceeds {node_cap} nodes")
            k = index[node] = len(nodes)
            nodes.append(node)
            record, h = node[1]
            # the new record's first h+1 classes are the old record's, as a set
            prio.append(priority(record, h))
        return k

    start = [visit((s, memory.initial(s))) for s in range(n)]
    succ: list[list[int]] = []
    k = 0
    while k < len(nodes):
        s, mem = nodes[k]
        succ.append(sorted({visit((t, memory.update(mem, t))) for t in arena.succ[s]}))
        k += 1
    product = Arena(tuple(map(tuple, succ)), tuple(arena.owner[s] for s, _ in nodes),
                    start[arena.init],
                    tuple(f"{arena.name(s)}@{mem}" for s, mem in nodes))
    return LarProduct(product, tuple(prio), tuple(nodes), tuple(start), memory)
