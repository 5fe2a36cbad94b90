"""LTL fragments that reduce to the supported winning conditions.

* COSAFE / SAFE formulas are compiled into deterministic finite monitors by formula
  progression; the model is then multiplied with the monitor and the game becomes a
  reachability (co-safe) or safety (safe) game on the product.
* INF formulas (Boolean combinations of ``GF β`` and ``FG β``, β propositional) map
  directly to Emerson-Lei conditions on the model itself.

Atoms are evaluated on the effective label of a state: its propositions plus its
own name.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

from ..model import KripkeStructure
from .conditions import EmersonLei, Inf, Reachability, Safety, WinningCondition
from .syntax import (FALSE, TRUE, Always, And, Atom, Const, Eventually, Formula, Next, Not, Or,
                     Release, Until, atoms, eval_propositional, is_propositional, nnf)


class Fragment(enum.Enum):
    COSAFE = "cosafe"
    SAFE = "safe"
    INF = "inf"
    UNSUPPORTED = "unsupported"


class UnsupportedFormula(ValueError):
    pass


class MonitorBlowup(RuntimeError):
    pass


def _only(f: Formula, allowed: tuple[type, ...]) -> bool:
    if isinstance(f, (Atom, Const)):
        return True
    if isinstance(f, Not):
        return isinstance(f.arg, Atom)
    if isinstance(f, (And, Or)):
        return _only(f.left, allowed) and _only(f.right, allowed)
    if isinstance(f, allowed):
        if isinstance(f, (Until, Release)):
            return _only(f.left, allowed) and _only(f.right, allowed)
        return _only(f.arg, allowed)
    return False


def _inf_shape(f: Formula) -> bool:
    if isinstance(f, (And, Or)):
        return _inf_shape(f.left) and _inf_shape(f.right)
    if isinstance(f, Const):
        return True
    if isinstance(f, Always) and isinstance(f.arg, Eventually):
        return is_propositional(f.arg.arg)
    if isinstance(f, Eventually) and isinstance(f.arg, Always):
        return is_propositional(f.arg.arg)
    return False


def classify_ltl(f: Formula) -> Fragment:
    g = nnf(f)
    if _only(g, (Next, Until, Eventually)):
        return Fragment.COSAFE
    if _only(g, (Next, Release, Always)):
        return Fragment.SAFE
    if _inf_shape(g):
        return Fragment.INF
    return Fragment.UNSUPPORTED


# --- monitors -------------------------------------------------------------

# A monitor state is a positive Boolean combination of obligations kept in DNF:
# a frozenset of clauses, each clause a frozenset of temporal subformulas.
# The empty clause means "true" (good prefix seen); no clauses means "false".
Dnf = frozenset

_TRUE_DNF: Dnf = frozenset([frozenset()])
_FALSE_DNF: Dnf = frozenset()


def _dnf_or(a: Dnf, b: Dnf) -> Dnf:
    return _absorb(a | b)


def _dnf_and(a: Dnf, b: Dnf) -> Dnf:
    return _absorb(frozenset(x | y for x in a for y in b))


def _absorb(d: Dnf) -> Dnf:
    clauses = sorted(d, key=len)
    kept: list[frozenset] = []
    for c in clauses:
        if not any(k <= c for k in kept):
            kept.append(c)
    return frozenset(kept)


def _lit(f: Formula) -> Dnf:
    return frozenset([frozenset([f])])


def _progress(f: Formula, letter: frozenset[str]) -> Dnf:
    """Obligation left after reading ``letter`` for NNF formula ``f``."""
    if isinstance(f, Const):
        return _TRUE_DNF if f.value else _FALSE_DNF
    if isinstance(f, Atom):
        return _TRUE_DNF if f.name in letter else _FALSE_DNF
    if isinstance(f, Not):
        return _FALSE_DNF if f.arg.name in letter else _TRUE_DNF
    if isinstance(f, And):
        return _dnf_and(_progress(f.left, letter), _progress(f.right, letter))
    if isinstance(f, Or):
        return _dnf_or(_progress(f.left, letter), _progress(f.right, letter))
    if isinstance(f, Next):
        return _expand(f.arg)
    if isinstance(f, Until):
        return _dnf_or(_progress(f.right, letter),
                       _dnf_and(_progress(f.left, letter), _lit(f)))
    if isinstance(f, Eventually):
        return _dnf_or(_progress(f.arg, letter), _lit(f))
    if isinstance(f, Release):
        return _dnf_and(_progress(f.right, letter),
                        _dnf_or(_progress(f.left, letter), _lit(f)))
    if isinstance(f, Always):
        return _dnf_and(_progress(f.arg, letter), _lit(f))
    raise TypeError(f)


def _expand(f: Formula) -> Dnf:
    """DNF of ``f`` over its top-level temporal subformulas."""
    if isinstance(f, Const):
        return _TRUE_DNF if f.value else _FALSE_DNF
    if isinstance(f, And):
        return _dnf_and(_expand(f.left), _expand(f.right))
    if isinstance(f, Or):
        return _dnf_or(_expand(f.left), _expand(f.right))
    return _lit(f)


def _progress_dnf(d: Dnf, letter) -> Dnf:
    out = _FALSE_DNF
    for clause in d:
        acc = _TRUE_DNF
        for f in clause:
            acc = _dnf_and(acc, _progress(f, letter))
            if not acc:
                break
        out = _dnf_or(out, acc)
        if out == _TRUE_DNF:
            break
    return out


@dataclass
class DeterministicFiniteMonitor:
    """Total deterministic monitor over letters = subsets of ``atoms``.

    ``accepting`` states are sinks.  With polarity ``cosafe`` they mark good prefixes of
    the compiled formula; with polarity ``safe`` they mark its bad prefixes.
    """

    atoms: tuple[str, ...]
    states: list[Dnf]
    initial: int
    delta: dict[tuple[int, frozenset[str]], int]
    accepting: frozenset[int]
    polarity: str
    formula: Formula = field(repr=False, default=TRUE)

    def letters(self):
        for r in range(len(self.atoms) + 1):
            for combo in itertools.combinations(self.atoms, r):
                yield frozenset(combo)

    def letter_of(self, label) -> frozenset[str]:
        return frozenset(a for a in self.atoms if a in label)

    def step(self, q: int, label) -> int:
        return self.delta[(q, self.letter_of(label))]

    def run(self, word) -> int:
        q = self.initial
        for letter in word:
            q = self.step(q, letter)
        return q

    def accepts(self, word) -> bool:
        """True once the word has reached an accepting sink."""
        return self.run(word) in self.accepting

    def describe(self, q: int) -> str:
        d = self.states[q]
        if d == _TRUE_DNF:
            return "accept"
        if d == _FALSE_DNF:
            return "reject"
        return " | ".join("&".join(sorted(map(str, c))) or "true" for c in
                          sorted(d, key=lambda c: sorted(map(str, c))))


DEFAULT_MONITOR_CAP = 4096


def compile_cosafe(f: Formula, props=None, cap: int = DEFAULT_MONITOR_CAP) -> DeterministicFiniteMonitor:
    """Compile a COSAFE or SAFE formula into a deterministic finite monitor.

    ``props`` extends the alphabet beyond the formula's own atoms (letters outside
    the formula's atoms never change a transition).
    """
    frag = classify_ltl(f)
    if frag is Fragment.COSAFE:
        target, polarity = nnf(f), "cosafe"
    elif frag is Fragment.SAFE:
        target, polarity = nnf(Not(f)), "safe"
    else:
        raise UnsupportedFormula(f"{f} is {frag.value}, not co-safe or safe")
    alphabet = tuple(sorted(atoms(f) | set(props or ())))
    letters = [frozenset(c) for r in range(len(alphabet) + 1)
               for c in itertools.combinations(alphabet, r)]
    start = _expand(target)
    states = [start]
    index = {start: 0}
    delta: dict[tuple[int, frozenset[str]], int] = {}
    todo = [0]
    while todo:
        q = todo.pop()
        d = states[q]
        for letter in letters:
            if d in (_TRUE_DNF, _FALSE_DNF):
                nxt = d
            else:
                nxt = _progress_dnf(d, letter)
            if nxt not in index:
                if len(states) >= cap:
                    raise MonitorBlowup(f"monitor for {f} exceeds {cap} states")
                index[nxt] = len(states)
                states.append(nxt)
                todo.append(index[nxt])
            delta[(q, letter)] = index[nxt]
    return _collapse(alphabet, states, delta, letters, polarity, f)


def _collapse(alphabet, states, delta, letters, polarity, f) -> DeterministicFiniteMonitor:
    """Send semantically decided states to the accept / reject sinks.

    Progression can lag behind the semantics (``X a | X !a`` is only seen to hold after
    two letters).  A state is decided good when no path avoids the accepting sink
    forever, and decided bad when the accepting sink is unreachable; for co-safe
    targets this makes acceptance coincide with good prefixes.
    """
    n = len(states)
    succ = [{delta[(q, a)] for a in letters} for q in range(n)]
    acc = {q for q in range(n) if states[q] == _TRUE_DNF}
    reach_acc = set(acc)
    changed = True
    while changed:
        changed = False
        for q in range(n):
            if q not in reach_acc and succ[q] & reach_acc:
                reach_acc.add(q)
                changed = True
    # states that can stay outside the accepting sink forever: greatest fixpoint
    avoid = set(range(n)) - acc
    changed = True
    while changed:
        changed = False
        for q in list(avoid):
            if not succ[q] & avoid:
                avoid.discard(q)
                changed = True
    good = set(range(n)) - avoid
    bad = set(range(n)) - reach_acc

    def kind(q):
        return _TRUE_DNF if q in good else _FALSE_DNF if q in bad else None

    new_states: list[Dnf] = []
    index: dict = {}

    def key(q):
        k = kind(q)
        return k if k is not None else ("q", q)

    order = [0]
    seen = {key(0)}
    while order:
        q = order.pop(0)
        index[key(q)] = len(new_states)
        new_states.append(kind(q) if kind(q) is not None else states[q])
        if kind(q) is None:
            for a in letters:
                t = delta[(q, a)]
                if key(t) not in seen:
                    seen.add(key(t))
                    order.append(t)
    reps: dict = {}
    for q in range(n):
        reps.setdefault(key(q), q)
    new_delta = {}
    for k, i in index.items():
        q = reps[k]
        for a in letters:
            new_delta[(i, a)] = i if kind(q) is not None else index[key(delta[(q, a)])]
    accepting = frozenset(i for i, d in enumerate(new_states) if d == _TRUE_DNF)
    return DeterministicFiniteMonitor(alphabet, new_states, 0, new_delta, accepting, polarity, f)


def compile_inf_fragment(f: Formula, model: KripkeStructure) -> EmersonLei:
    """Translate an INF-fragment formula into an Emerson-Lei condition on ``model``."""
    if classify_ltl(f) is not Fragment.INF:
        raise UnsupportedFormula(f"{f} is not a Boolean combination of GF/FG formulas")
    n = len(model.states)
    labels = [model.effective_label(i) for i in range(n)]

    def sat(beta):
        return frozenset(i for i in range(n) if eval_propositional(beta, labels[i]))

    def walk(g):
        if isinstance(g, Const):
            return g
        if isinstance(g, And):
            return And(walk(g.left), walk(g.right))
        if isinstance(g, Or):
            return Or(walk(g.left), walk(g.right))
        if isinstance(g, Always):  # G F beta
            return Inf(sat(g.arg.arg))
        # F G beta: eventually only beta-states recur
        return Not(Inf(frozenset(range(n)) - sat(g.arg.arg)))

    return EmersonLei(walk(nnf(f)))


@dataclass(frozen=True)
class ProductGame:
    structure: KripkeStructure
    condition: WinningCondition
    projection: tuple[int, ...]  # product state -> model state index
    monitor_state: tuple[int, ...]


def product_game(model: KripkeStructure, monitor: DeterministicFiniteMonitor) -> ProductGame:
    """Synchronous product, restricted to states reachable from the initial state.

    The monitor reads the label of every state as the play enters it, the initial
    state included.  Product state ``(s, q)`` is named ``"s|q"``.
    """
    labels = [model.effective_label(i) for i in range(len(model.states))]
    succ = model.succ
    start = (model.init_index, monitor.step(monitor.initial, labels[model.init_index]))
    order = [start]
    index = {start: 0}
    edges = []
    k = 0
    while k < len(order):
        s, q = order[k]
        for t in succ[s]:
            nxt = (t, monitor.step(q, labels[t]))
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            edges.append((k, index[nxt]))
        k += 1
    names = tuple(f"{model.states[s]}|{q}" for s, q in order)
    lab = {names[i]: model.labeling[model.states[s]] for i, (s, _) in enumerate(order)}
    product = KripkeStructure(names, model.atomic_props,
                              frozenset((names[a], names[b]) for a, b in edges), names[0], lab)
    hit = frozenset(i for i, (_, q) in enumerate(order) if q in monitor.accepting)
    if monitor.polarity == "cosafe":
        cond: WinningCondition = Reachability(hit)
    else:
        cond = Safety(frozenset(range(len(order))) - hit)
    return ProductGame(product, cond, tuple(s for s, _ in order), tuple(q for _, q in order))


__all__ = ["Fragment", "classify_ltl", "compile_cosafe", "compile_inf_fragment", "product_game",
           "ProductGame", "DeterministicFiniteMonitor", "UnsupportedFormula", "MonitorBlowup",
           "DEFAULT_MONITOR_CAP", "FALSE"]
