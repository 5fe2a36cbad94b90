"""Kripke structures, modal transition systems and state partitions.

Models are loaded from a small JSON document::

    {"type": "kripke" | "mts",
     "states": [...], "init": "...",
     "labels": {"s": ["a", ...], ...},
     "transitions": [["s", "t"], ...],          # kripke
     "must": [...], "may": [...],               # mts
     "partition": {"P1": ["s", ...], ...}}      # optional

The order of ``states`` is the canonical order used everywhere else.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Union


class ModelError(ValueError):
    """Base class for model loading problems."""


class ModelSyntaxError(ModelError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


class ModelValidationError(ModelError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


def _index_map(states: tuple[str, ...]) -> dict[str, int]:
    return {s: i for i, s in enumerate(states)}


def _successors(n: int, index: Mapping[str, int], edges) -> tuple[tuple[int, ...], ...]:
    succ: list[set[int]] = [set() for _ in range(n)]
    for s, t in edges:
        if s in index and t in index:
            succ[index[s]].add(index[t])
    return tuple(tuple(sorted(x)) for x in succ)


@dataclass(frozen=True)
class KripkeStructure:
    states: tuple[str, ...]
    atomic_props: frozenset[str]
    transitions: frozenset[tuple[str, str]]
    init: str
    labeling: Mapping[str, frozenset[str]] = field(hash=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "atomic_props", frozenset(self.atomic_props))
        object.__setattr__(self, "transitions", frozenset(map(tuple, self.transitions)))
        labels = {s: frozenset(self.labeling.get(s, ())) for s in self.states}
        object.__setattr__(self, "labeling", labels)
        index = _index_map(self.states)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_succ", _successors(len(self.states), index, self.transitions))

    kind = "kripke"

    def index(self, state: str) -> int:
        return self._index[state]

    @property
    def succ(self) -> tuple[tuple[int, ...], ...]:
        """Successor indices per state, ascending."""
        return self._succ

    @property
    def init_index(self) -> int:
        return self._index[self.init]

    def label(self, i: int) -> frozenset[str]:
        return self.labeling[self.states[i]]

    def effective_label(self, i: int) -> frozenset[str]:
        # state names double as atomic propositions
        return self.labeling[self.states[i]] | {self.states[i]}

    def __len__(self):
        return len(self.states)

    def __eq__(self, other):
        if not isinstance(other, KripkeStructure):
            return NotImplemented
        return (self.states == other.states and self.atomic_props == other.atomic_props
                and self.transitions == other.transitions and self.init == other.init
                and dict(self.labeling) == dict(other.labeling))

    def __hash__(self):
        return hash((self.states, self.transitions, self.init))


@dataclass(frozen=True)
class ModalTransitionSystem:
    states: tuple[str, ...]
    atomic_props: frozenset[str]
    must_transitions: frozenset[tuple[str, str]]
    may_transitions: frozenset[tuple[str, str]]
    init: str
    labeling: Mapping[str, frozenset[str]] = field(hash=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "atomic_props", frozenset(self.atomic_props))
        object.__setattr__(self, "must_transitions", frozenset(map(tuple, self.must_transitions)))
        object.__setattr__(self, "may_transitions", frozenset(map(tuple, self.may_transitions)))
        labels = {s: frozenset(self.labeling.get(s, ())) for s in self.states}
        object.__setattr__(self, "labeling", labels)
        index = _index_map(self.states)
        n = len(self.states)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_must", _successors(n, index, self.must_transitions))
        object.__setattr__(self, "_may", _successors(n, index, self.may_transitions))

    kind = "mts"

    def index(self, state: str) -> int:
        return self._index[state]

    @property
    def must(self) -> tuple[tuple[int, ...], ...]:
        return self._must

    @property
    def may(self) -> tuple[tuple[int, ...], ...]:
        return self._may

    def optional(self, i: int) -> tuple[int, ...]:
        """May-successors of state ``i`` that are not must-successors."""
        must = set(self._must[i])
        return tuple(t for t in self._may[i] if t not in must)

    @property
    def init_index(self) -> int:
        return self._index[self.init]

    def label(self, i: int) -> frozenset[str]:
        return self.labeling[self.states[i]]

    def effective_label(self, i: int) -> frozenset[str]:
        return self.labeling[self.states[i]] | {self.states[i]}

    def __len__(self):
        return len(self.states)

    def __eq__(self, other):
        if not isinstance(other, ModalTransitionSystem):
            return NotImplemented
        return (self.states == other.states and self.atomic_props == other.atomic_props
                and self.must_transitions == other.must_transitions
                and self.may_transitions == other.may_transitions
                and self.init == other.init and dict(self.labeling) == dict(other.labeling))

    def __hash__(self):
        return hash((self.states, self.must_transitions, self.may_transitions, self.init))


Model = Union[KripkeStructure, ModalTransitionSystem]


@dataclass(frozen=True)
class Partition:
    """Ordered, named, disjoint parts covering the state set."""

    names: tuple[str, ...]
    parts: tuple[frozenset[str], ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "parts", tuple(frozenset(p) for p in self.parts))

    def __len__(self):
        return len(self.parts)

    def part_of(self, model: Model) -> tuple[int, ...]:
        """Part index of every model state, in state order."""
        where = {}
        for k, part in enumerate(self.parts):
            for s in part:
                where[s] = k
        return tuple(where[s] for s in model.states)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown part {name!r}") from None

    def violations(self, states: Iterable[str]) -> list[str]:
        states = list(states)
        out = []
        if len(set(self.names)) != len(self.names):
            out.append("partition part names are not unique")
        seen: dict[str, str] = {}
        known = set(states)
        for name, part in zip(self.names, self.parts):
            if not part:
                out.append(f"partition part {name} is empty")
            for s in sorted(part):
                if s not in known:
                    out.append(f"partition part {name} mentions unknown state {s}")
                elif s in seen:
                    out.append(f"state {s} appears in parts {seen[s]} and {name}")
                else:
                    seen[s] = name
        for s in states:
            if s not in seen:
                out.append(f"state {s} is not covered by the partition")
        return out


@dataclass(frozen=True)
class Coalition:
    """A set of partition parts controlled by player Sat."""

    part_indices: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "part_indices", frozenset(self.part_indices))

    @classmethod
    def from_mask(cls, mask: int) -> "Coalition":
        return cls(frozenset(i for i in range(mask.bit_length()) if mask >> i & 1))

    @classmethod
    def from_names(cls, partition: Partition, names: Iterable[str]) -> "Coalition":
        return cls(frozenset(partition.index(n) for n in names))

    @property
    def mask(self) -> int:
        m = 0
        for i in self.part_indices:
            m |= 1 << i
        return m

    def check(self, partition: Partition) -> None:
        bad = [i for i in self.part_indices if not 0 <= i < len(partition)]
        if bad:
            raise IndexError(f"coalition indices out of range: {sorted(bad)}")

    def states(self, partition: Partition) -> frozenset[str]:
        self.check(partition)
        return frozenset().union(*(partition.parts[i] for i in self.part_indices))


class LoadedModel(NamedTuple):
    structure: Model
    partition: Partition


def default_partition(model: Model) -> Partition:
    """One singleton part per state, named after the state."""
    return Partition(tuple(model.states), tuple(frozenset([s]) for s in model.states))


def validate(model: Model) -> list[str]:
    """Return one message per violated invariant; empty when the model is valid."""
    out: list[str] = []
    states = list(model.states)
    if len(set(states)) != len(states):
        dup = sorted({s for s in states if states.count(s) > 1})
        out.extend(f"duplicate state identifier {s}" for s in dup)
    known = set(states)
    if model.init not in known:
        out.append(f"initial state {model.init} is not a declared state")
    for s in states:
        extra = sorted(model.labeling.get(s, frozenset()) - model.atomic_props)
        if extra:
            out.append(f"label of {s} uses undeclared propositions {extra}")

    def dangling(edges, what):
        for a, b in sorted(edges):
            if a not in known or b not in known:
                out.append(f"{what} ({a},{b}) mentions an unknown state")

    if isinstance(model, KripkeStructure):
        dangling(model.transitions, "transition")
        for i, s in enumerate(model.states):
            if not model.succ[i]:
                out.append(f"state {s} has no successor")
    else:
        dangling(model.may_transitions, "may-transition")
        dangling(model.must_transitions - model.may_transitions, "must-transition")
        for a, b in sorted(model.must_transitions - model.may_transitions):
            out.append(f"must not included in may at ({a},{b})")
        for i, s in enumerate(model.states):
            if not model.must[i]:
                out.append(f"state {s} has no must-successor")
    return out


def _edge_list(doc, key, pos_hint) -> list[tuple[str, str]]:
    raw = doc.get(key, [])
    if not isinstance(raw, list):
        raise ModelSyntaxError(f"{key!r} must be a list of [source, target] pairs")
    out = []
    for k, e in enumerate(raw):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e)):
            raise ModelSyntaxError(f"{key}[{k}] must be a pair of state names, got {e!r}")
        out.append((e[0], e[1]))
    return out


def from_document(doc: dict, kind: str | None = None) -> LoadedModel:
    """Build and validate a model from an already decoded JSON object."""
    if not isinstance(doc, dict):
        raise ModelSyntaxError("model document must be a JSON object")
    kind = kind or doc.get("type")
    if kind not in ("kripke", "mts"):
        raise ModelSyntaxError(f"model type must be 'kripke' or 'mts', got {kind!r}")
    states = doc.get("states")
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states) or not states:
        raise ModelSyntaxError("'states' must be a nonempty list of strings")
    init = doc.get("init")
    if not isinstance(init, str):
        raise ModelSyntaxError("'init' must be a state name")
    labels_raw = doc.get("labels", {})
    if not isinstance(labels_raw, dict):
        raise ModelSyntaxError("'labels' must be an object")
    labels = {}
    for s, props in labels_raw.items():
        if not isinstance(props, list) or not all(isinstance(p, str) for p in props):
            raise ModelSyntaxError(f"labels of {s!r} must be a list of strings")
        labels[s] = frozenset(props)
    aps = frozenset().union(*labels.values()) if labels else frozenset()
    violations = [f"label given for unknown state {s}" for s in labels if s not in set(states)]

    if kind == "kripke":
        model: Model = KripkeStructure(tuple(states), aps, frozenset(_edge_list(doc, "transitions", 0)),
                                       init, labels)
    else:
        must = frozenset(_edge_list(doc, "must", 0))
        may = frozenset(_edge_list(doc, "may", 0))
        model = ModalTransitionSystem(tuple(states), aps, must, may, init, labels)

    violations += validate(model)
    if "partition" in doc and doc["partition"] is not None:
        raw = doc["partition"]
        if not isinstance(raw, dict):
            raise ModelSyntaxError("'partition' must be an object mapping part names to state lists")
        for name, members in raw.items():
            if not isinstance(members, list) or not all(isinstance(s, str) for s in members):
                raise ModelSyntaxError(f"partition part {name!r} must be a list of state names")
        partition = Partition(tuple(raw), tuple(frozenset(v) for v in raw.values()))
        violations += partition.violations(model.states)
    else:
        partition = default_partition(model)
    if violations:
        raise ModelValidationError(violations)
    return LoadedModel(model, partition)


def parse_model(text: str, kind: str | None = None) -> LoadedModel:
    """Parse a JSON model document; ``kind`` overrides the document's ``type``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    return from_document(doc, kind)


def load_model(path, kind: str | None = None) -> LoadedModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), kind)


def _sorted_edges(model: Model, edges) -> list[list[str]]:
    idx = {s: i for i, s in enumerate(model.states)}
    return [[a, b] for a, b in sorted(edges, key=lambda e: (idx[e[0]], idx[e[1]]))]


def to_document(model: Model, partition: Partition | None = None) -> dict:
    doc: dict = {"type": model.kind, "states": list(model.states), "init": model.init}
    doc["labels"] = {s: sorted(model.labeling[s]) for s in model.states if model.labeling[s]}
    if isinstance(model, KripkeStructure):
        doc["transitions"] = _sorted_edges(model, model.transitions)
    else:
        doc["must"] = _sorted_edges(model, model.must_transitions)
        doc["may"] = _sorted_edges(model, model.may_transitions)
    if partition is not None:
        doc["partition"] = {name: [s for s in model.states if s in part]
                            for name, part in zip(partition.names, partition.parts)}
    return doc


def render_model(model: Model, partition: Partition | None = None) -> str:
    return json.dumps(to_document(model, partition), indent=2)
