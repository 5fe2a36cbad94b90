"""Game arenas and the attractor construction."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..model import Coalition, KripkeStructure, Partition

SAT = True
UNSAT = False


class ResourceCapExceeded(RuntimeError):
    """A configured size limit was hit (LAR product, strategy space, ...)."""


@dataclass(frozen=True)
class Arena:
    """Turn-based game graph; ``owner[s]`` is True when Sat moves at ``s``."""

    succ: tuple[tuple[int, ...], ...]
    owner: tuple[bool, ...]
    init: int = 0
    names: tuple[str, ...] | None = None
    _pred: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.succ)
        if len(self.owner) != n:
            raise ValueError("owner map must cover every state")
        if any(not out for out in self.succ):
            dead = next(s for s, out in enumerate(self.succ) if not out)
            raise ValueError(f"arena state {self.name(dead)} has no successor")
        pred: list[list[int]] = [[] for _ in range(n)]
        for s, out in enumerate(self.succ):
            for t in out:
                pred[t].append(s)
        object.__setattr__(self, "_pred", tuple(tuple(p) for p in pred))

    def __len__(self):
        return len(self.succ)

    @property
    def pred(self):
        return self._pred

    def name(self, s: int) -> str:
        return self.names[s] if self.names else str(s)

    def owned_by(self, player: bool) -> frozenset[int]:
        return frozenset(s for s, o in enumerate(self.owner) if o == player)

    def with_owner(self, owner: Sequence[bool]) -> "Arena":
        return Arena(self.succ, tuple(owner), self.init, self.names)


def arena_from_structure(k: KripkeStructure, owner: Sequence[bool]) -> Arena:
    return Arena(k.succ, tuple(bool(o) for o in owner), k.init_index, k.states)


def build_arena(model: KripkeStructure, partition: Partition, coalition: Coalition | Iterable[int]) -> Arena:
    """Sat owns exactly the states whose part is in ``coalition``."""
    if not isinstance(coalition, Coalition):
        coalition = Coalition(frozenset(coalition))
    coalition.check(partition)
    part_of = partition.part_of(model)
    return arena_from_structure(model, [part_of[s] in coalition.part_indices
                                        for s in range(len(model.states))])


def attractor(arena: Arena, player: bool, target: Iterable[int],
              within: Iterable[int] | None = None) -> tuple[frozenset[int], dict[int, int]]:
    """Least set from which ``player`` forces a visit to ``target``.

    Computed inside the subgame ``within`` (default: the whole arena), which must be
    closed enough that every state keeps a successor in it.  The strategy maps each
    player-owned attractor state outside ``target`` to a successor one rank closer.
    """
    region = set(range(len(arena))) if within is None else set(within)
    attr = set(t for t in target if t in region)
    strategy: dict[int, int] = {}
    missing = {}
    for s in region:
        if s not in attr and arena.owner[s] != player:
            missing[s] = sum(1 for t in arena.succ[s] if t in region)
    queue = deque(sorted(attr))
    while queue:
        t = queue.popleft()
        for s in arena.pred[t]:
            if s not in region or s in attr:
                continue
            if arena.owner[s] == player:
                # lowest-index successor already in the attractor
                strategy[s] = min(u for u in arena.succ[s] if u in attr)
                attr.add(s)
                queue.append(s)
            else:
                missing[s] -= 1
                if missing[s] == 0:
                    attr.add(s)
                    queue.append(s)
    return frozenset(attr), strategy
