"""Shapley importance of partition parts for a coalition-value oracle.

The engine is generic: any picklable ``value(mask)`` works, where bit ``p`` of
``mask`` says that part ``p`` belongs to Sat's coalition.  0/1 oracles (the
linear-time game, the two-turn CTL game) use the critical-pair formula with
monotone pruning; rational oracles (the concurrent CTL game) use the weighted
subset-lattice sum.
"""
from __future__ import annotations

import itertools
import json
import math
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .model import Coalition, KripkeStructure, Model, ModalTransitionSystem, Partition
from .solve.arena import ResourceCapExceeded

DEFAULT_EXACT_CAP = 20
DEFAULT_BRUTE_CAP = 8
DEFAULT_BATCH_SIZE = 1000
PARALLEL_LAYER_MIN = 64  # smaller lattice layers are not worth a worker round-trip
_Z95 = 1.959963984540054

Value = int | Fraction
ValueFn = Callable[[int], Value]


class ImportanceCapExceeded(ResourceCapExceeded):
    pass


class InconsistentValues(AssertionError):
    """Two computations that must agree did not (a bug, never an input error)."""


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def mask_of(parts: Iterable[int]) -> int:
    out = 0
    for p in parts:
        out |= 1 << p
    return out


def parts_of(mask: int) -> list[int]:
    return [p for p in range(mask.bit_length()) if mask >> p & 1]


def subsets_by_size(universe: Sequence[int]) -> list[list[int]]:
    """Masks of all subsets of ``universe``: by size, then lexicographic by part index."""
    ordered = sorted(universe)
    return [[mask_of(c) for c in itertools.combinations(ordered, k)]
            for k in range(len(ordered) + 1)]


class ValueCache:
    """Memoized coalition values.

    With ``monotone`` on, a value is inferred without solving when the coalition is a
    superset of a known winning one or a subset of a known losing one.  Reads are
    lock-free; inserts are serialized.
    """

    def __init__(self, value_fn: ValueFn, monotone: bool = True):
        self.value_fn = value_fn
        self.monotone = monotone
        self._values: dict[int, Value] = {}
        self._wins: list[int] = []  # minimal known winning coalitions
        self._losses: list[int] = []  # maximal known losing coalitions
        self._lock = threading.Lock()
        self.hits = 0
        self.solves = 0
        self.inferred = 0

    def __len__(self):
        return len(self._values)

    def __contains__(self, mask: int) -> bool:
        return mask in self._values

    def lookup(self, mask: int) -> Value | None:
        v = self._values.get(mask)
        if v is not None:
            self.hits += 1
            return v
        if not self.monotone:
            return None
        if any(w & ~mask == 0 for w in self._wins):
            v = 1
        elif any(mask & ~lost == 0 for lost in self._losses):
            v = 0
        else:
            return None
        self.inferred += 1
        self._store(mask, v)
        return v

    def insert(self, mask: int, value: Value) -> None:
        self.solves += 1
        self._store(mask, value)

    def _store(self, mask: int, value: Value) -> None:
        with self._lock:
            self._values[mask] = value
            if not self.monotone:
                return
            if value == 1 and not any(w & ~mask == 0 for w in self._wins):
                self._wins = [w for w in self._wins if mask & ~w != 0] + [mask]
            elif value == 0 and not any(mask & ~lost == 0 for lost in self._losses):
                self._losses = [lost for lost in self._losses if lost & ~mask != 0] + [mask]

    def value(self, mask: int) -> Value:
        v = self.lookup(mask)
        if v is None:
            v = self.value_fn(mask)
            self.insert(mask, v)
        return v

    def items(self):
        return sorted(self._values.items())

    def monotone_consistent(self) -> bool:
        """No cached winning coalition has a cached losing superset."""
        wins = [m for m, v in self._values.items() if v == 1]
        losses = [m for m, v in self._values.items() if v == 0]
        return not any(w & ~lost == 0 for w in wins for lost in losses)


# --- reports ----------------------------------------------------------------

def _frac_json(x: Fraction) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def _frac_from(d) -> Fraction:
    return Fraction(int(d["num"]), int(d["den"]))


def decimal6(x: Fraction) -> str:
    """Exact rational rounded (half to even) to 6 decimal places."""
    q = round(Fraction(x) * 10**6)
    sign = "-" if q < 0 else ""
    q = abs(q)
    return f"{sign}{q // 10**6}.{q % 10**6:06d}"


def _fmt_frac(x: Fraction) -> str:
    return str(Fraction(x))


@dataclass
class PartImportance:
    name: str
    importance: Fraction
    useful: bool
    critical_pair_counts: list[int] = field(default_factory=list)


@dataclass
class ImportanceReport:
    """Exact importance of every part plus the two extreme coalition values."""

    parts: list[PartImportance]
    val_full: Fraction
    val_empty: Fraction
    engine: str = "game"
    notes: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.parts)

    @property
    def importances(self) -> list[Fraction]:
        return [p.importance for p in self.parts]

    def __getitem__(self, name: str) -> Fraction:
        for p in self.parts:
            if p.name == name:
                return p.importance
        raise KeyError(name)

    def n_factorial_times(self, p: PartImportance) -> Fraction:
        return p.importance * math.factorial(self.n)

    def check(self) -> None:
        total = sum(self.importances, Fraction(0))
        if total != self.val_full - self.val_empty:
            raise InconsistentValues(f"importances sum to {total}, expected "
                                     f"{self.val_full - self.val_empty}")
        for p in self.parts:
            if p.useful != (p.importance > 0):
                raise InconsistentValues(f"usefulness flag of {p.name} disagrees with {p.importance}")

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "n": self.n,
            "val_full": _frac_json(self.val_full),
            "val_empty": _frac_json(self.val_empty),
            "parts": [{
                "name": p.name,
                "importance": _frac_json(p.importance),
                "importance_decimal": decimal6(p.importance),
                "useful": p.useful,
                "n_factorial_times_importance": _fmt_frac(self.n_factorial_times(p)),
                "critical_pair_counts": list(p.critical_pair_counts),
            } for p in self.parts],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "ImportanceReport":
        parts = [PartImportance(d["name"], _frac_from(d["importance"]), bool(d["useful"]),
                                [int(c) for c in d.get("critical_pair_counts", [])])
                 for d in doc["parts"]]
        report = cls(parts, _frac_from(doc["val_full"]), _frac_from(doc["val_empty"]),
                     doc.get("engine", "game"), list(doc.get("notes", [])))
        if doc.get("n", report.n) != report.n:
            raise ValueError("part count does not match 'n'")
        for p, d in zip(report.parts, doc["parts"]):
            if "n_factorial_times_importance" in d and \
                    Fraction(d["n_factorial_times_importance"]) != report.n_factorial_times(p):
                raise ValueError(f"n!*I of {p.name} is inconsistent with its importance")
        return report

    @classmethod
    def from_json(cls, text: str) -> "ImportanceReport":
        return cls.from_dict(json.loads(text))

    def render_table(self) -> str:
        head = ("part", "importance", "decimal", "n!*I", "useful")
        rows = [(p.name, _fmt_frac(p.importance), decimal6(p.importance),
                 _fmt_frac(self.n_factorial_times(p)), "yes" if p.useful else "no")
                for p in self.parts]
        widths = [max(len(r[k]) for r in rows + [head]) for k in range(len(head))]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        lines = [f"engine: {self.engine}   parts: {self.n}   "
                 f"val(all) = {_fmt_frac(self.val_full)}   val(none) = {_fmt_frac(self.val_empty)}",
                 fmt.format(*head).rstrip()]
        lines += [fmt.format(*r).rstrip() for r in rows]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


@dataclass
class SampledPart:
    name: str
    estimate: Fraction
    low: float
    high: float
    charges: int


@dataclass
class SampledReport:
    parts: list[SampledPart]
    samples: int
    seed: int
    val_full: Fraction
    val_empty: Fraction
    batch_totals: list[Fraction]
    batch_sizes: list[int]
    engine: str = "game"

    @property
    def estimates(self) -> list[Fraction]:
        return [p.estimate for p in self.parts]

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "mode": "sampled",
            "samples": self.samples,
            "seed": self.seed,
            "val_full": _frac_json(self.val_full),
            "val_empty": _frac_json(self.val_empty),
            "parts": [{"name": p.name, "estimate": _frac_json(p.estimate),
                       "estimate_decimal": decimal6(p.estimate),
                       "ci95": [round(p.low, 6), round(p.high, 6)]} for p in self.parts],
            "batches": [{"size": s, "total": _frac_json(t)}
                        for s, t in zip(self.batch_sizes, self.batch_totals)],
        }

    def render_table(self) -> str:
        head = ("part", "estimate", "95% interval")
        rows = [(p.name, decimal6(p.estimate), f"[{p.low:.4f}, {p.high:.4f}]") for p in self.parts]
        widths = [max(len(r[k]) for r in rows + [head]) for k in range(3)]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        lines = [f"engine: {self.engine}   sampled permutations: {self.samples}   seed: {self.seed}",
                 fmt.format(*head).rstrip()]
        return "\n".join(lines + [fmt.format(*r).rstrip() for r in rows])


def wilson_interval(successes: float, n: int, z: float = _Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = min(max(successes / n, 0.0), 1.0)
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# --- the engine ---------------------------------------------------------------

def _sample_batch(value_fn: ValueFn, universe: tuple[int, ...], seed: np.random.SeedSequence,
                  size: int, monotone: bool) -> dict[int, Value]:
    """Walk ``size`` random give-up orders; return each part's summed marginal."""
    rng = np.random.default_rng(seed)
    cache = ValueCache(value_fn, monotone)
    charges: dict[int, Value] = {p: 0 for p in universe}
    for _ in range(size):
        order = [universe[k] for k in rng.permutation(len(universe))]
        mask = 0
        prev = cache.value(0)
        # the parts after p in the order are exactly the coalition before adding p
        for p in reversed(order):
            mask |= 1 << p
            cur = cache.value(mask)
            if cur != prev:
                charges[p] += cur - prev
            prev = cur
    return charges


def _call(args):
    fn, mask = args
    return fn(mask)


class CoalitionGame:
    """A value oracle over coalitions of named parts, with Shapley computations."""

    def __init__(self, value_fn: ValueFn, names: Sequence[str], forced: Iterable[int] = (), *,
                 engine: str = "game", fractional: bool = False, paranoid: bool = False,
                 jobs: int = 1):
        self.value_fn = value_fn
        self.names = tuple(names)
        self.n = len(self.names)
        self.forced = frozenset(forced)
        self.engine = engine
        self.fractional = fractional
        self.paranoid = paranoid
        self.jobs = max(1, int(jobs))
        self.cache = ValueCache(value_fn, monotone=not (paranoid or fractional))
        self._pool: ProcessPoolExecutor | None = None

    # values ------------------------------------------------------------------
    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def part_index(self, part: int | str) -> int:
        if isinstance(part, str):
            if part not in self.names:
                raise KeyError(f"unknown part {part!r}")
            return self.names.index(part)
        if not 0 <= part < self.n:
            raise IndexError(f"part index {part} out of range")
        return part

    def value(self, coalition: int | Coalition | Iterable) -> Value:
        if isinstance(coalition, Coalition):
            mask = coalition.mask
        elif isinstance(coalition, int):
            mask = coalition
        else:
            mask = mask_of(self.part_index(p) for p in coalition)
        return self.cache.value(mask)

    def _solve_many(self, masks: list[int]) -> list[Value]:
        if self.jobs > 1 and len(masks) >= PARALLEL_LAYER_MIN:
            if self._pool is None:
                self._pool = ProcessPoolExecutor(max_workers=self.jobs)
            return list(self._pool.map(_call, [(self.value_fn, m) for m in masks], chunksize=8))
        return [self.value_fn(m) for m in masks]

    def values_over(self, universe: Sequence[int]) -> dict[int, Value]:
        """Values of every subset of ``universe``, layer by layer (pruning fires early)."""
        out: dict[int, Value] = {}
        for layer in subsets_by_size(universe):
            pending = [m for m in layer if self.cache.lookup(m) is None]
            for m, v in zip(pending, self._solve_many(pending)):
                self.cache.insert(m, v)
            for m in layer:
                out[m] = self.cache.value(m)
        return out

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def reverify_cache(self) -> None:
        """Re-solve every memoized value (paranoid mode)."""
        for mask, v in self.cache.items():
            fresh = self.value_fn(mask)
            if fresh != v:
                raise InconsistentValues(f"cached value {v} of coalition {mask:#b} re-solves to {fresh}")

    # Shapley -----------------------------------------------------------------
    def _shapley(self, values: dict[int, Value], universe: Sequence[int], i: int):
        m = len(universe)
        others = [p for p in universe if p != i]
        bit = 1 << i
        total: Fraction | int = 0
        counts = [0] * max(m, 1) if not self.fractional else []
        null = True
        for k, layer in enumerate(subsets_by_size(others)):
            weight = math.factorial(k) * math.factorial(m - k - 1)
            for mask in layer:
                d = values[mask | bit] - values[mask]
                if d:
                    null = False
                    total += d * weight
                    if not self.fractional and values[mask | bit] == 1 and values[mask] == 0:
                        counts[k] += 1
        return Fraction(total, math.factorial(m)), counts, null

    def exact(self, cap: int = DEFAULT_EXACT_CAP) -> ImportanceReport:
        """Exact importance of every part, restricted to useful parts (two stages)."""
        if self.fractional or self.paranoid:
            universe = list(range(self.n))
        else:
            universe = [p for p in range(self.n) if p not in self.forced]
        if len(universe) > cap:
            raise ImportanceCapExceeded(
                f"{len(universe)} parts remain after pruning, exact cap is {cap}; "
                "use sampling (--sample N) or raise the cap")
        values = self.values_over(universe)
        stage1 = {i: self._shapley(values, universe, i) for i in universe}
        useful = [i for i in universe if not stage1[i][2]]
        stage2 = {i: self._shapley(values, useful, i) for i in useful}
        for i in useful:
            if stage2[i][0] != stage1[i][0]:
                raise InconsistentValues(f"restriction to useful parts changed the importance of "
                                         f"{self.names[i]}: {stage1[i][0]} vs {stage2[i][0]}")
        val_full = self.value(self.full_mask)
        val_empty = self.value(0)
        parts = []
        for p in range(self.n):
            imp, counts, _ = stage2.get(p, (Fraction(0), [], True))
            parts.append(PartImportance(self.names[p], imp, imp > 0, counts))
        notes = []
        if self.forced and not (self.fractional or self.paranoid):
            notes.append("parts with a single possible move were pruned: "
                         + ", ".join(self.names[p] for p in sorted(self.forced)))
        report = ImportanceReport(parts, Fraction(val_full), Fraction(val_empty), self.engine, notes)
        if self.paranoid:
            self.reverify_cache()
        report.check()
        return report

    def useful_universe(self) -> list[int]:
        universe = [p for p in range(self.n) if p not in self.forced]
        values = self.values_over(universe)
        return [i for i in universe if not self._shapley(values, universe, i)[2]]

    def critical_pairs(self, part: int | str) -> list[int]:
        """All critical coalitions of ``part`` over the useful-part universe (as masks)."""
        i = self.part_index(part)
        useful = self.useful_universe()
        if i not in useful:
            return []
        bit = 1 << i
        out = []
        for layer in subsets_by_size([p for p in useful if p != i]):
            for mask in layer:
                if self.cache.value(mask | bit) == 1 and self.cache.value(mask) == 0:
                    out.append(mask)
        return out

    def usefulness(self, part: int | str) -> tuple[bool, int | None]:
        """(useful?, first critical coalition found) scanning non-forced parts."""
        i = self.part_index(part)
        if i in self.forced and not self.paranoid:
            return False, None
        bit = 1 << i
        others = [p for p in range(self.n) if p != i and (self.paranoid or p not in self.forced)]
        for layer in subsets_by_size(others):
            for mask in layer:
                if self.value(mask | bit) == 1 and self.value(mask) == 0:
                    return True, mask
        return False, None

    def importance(self, part: int | str, cap: int = DEFAULT_EXACT_CAP) -> Fraction:
        i = self.part_index(part)
        return self.exact(cap).parts[i].importance

    def sampled(self, samples: int, seed: int = 0, batch_size: int = DEFAULT_BATCH_SIZE) -> SampledReport:
        if samples < 1:
            raise ValueError("samples must be positive")
        universe = tuple(p for p in range(self.n) if p not in self.forced)
        sizes = [batch_size] * (samples // batch_size)
        if samples % batch_size:
            sizes.append(samples % batch_size)
        seeds = np.random.SeedSequence(seed).spawn(len(sizes))
        monotone = not (self.paranoid or self.fractional)
        args = [(self.value_fn, universe, s, size, monotone) for s, size in zip(seeds, sizes)]
        if self.jobs > 1 and len(args) > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                results = list(pool.map(_sample_batch, *zip(*args)))
        else:
            results = [_sample_batch(*a) for a in args]
        totals = {p: 0 for p in range(self.n)}
        batch_totals = []
        for res in results:
            batch_totals.append(Fraction(sum(res.values(), 0)))
            for p, c in res.items():
                totals[p] += c
        parts = []
        for p in range(self.n):
            est = Fraction(totals[p]) / samples
            low, high = wilson_interval(float(totals[p]), samples)
            parts.append(SampledPart(self.names[p], est, low, high, int(totals[p]) if not self.fractional else 0))
        return SampledReport(parts, samples, seed, Fraction(self.value(self.full_mask)),
                             Fraction(self.value(0)), batch_totals, sizes, self.engine)

    def brute_force(self, cap: int = DEFAULT_BRUTE_CAP) -> list[Fraction]:
        """Literal average over all orderings of all parts; no pruning of any kind."""
        if self.n > cap:
            raise ImportanceCapExceeded(f"brute-force oracle limited to {cap} parts, got {self.n}")
        memo: dict[int, Value] = {}

        def v(mask):
            if mask not in memo:
                memo[mask] = self.value_fn(mask)
            return memo[mask]

        sums = [Fraction(0)] * self.n
        for order in itertools.permutations(range(self.n)):
            mask = 0
            for p in reversed(order):
                before = v(mask)
                mask |= 1 << p
                sums[p] += v(mask) - before
        fact = math.factorial(self.n)
        return [s / fact for s in sums]


# --- model-level entry points -------------------------------------------------------

def prune_forced_parts(model: Model, partition: Partition) -> frozenset[int]:
    """Parts none of whose states offers a real choice."""
    part_of = partition.part_of(model)
    free = set()
    for s in range(len(model.states)):
        if isinstance(model, ModalTransitionSystem):
            choice = bool(model.optional(s))
        else:
            choice = len(model.succ[s]) > 1
        if choice:
            free.add(part_of[s])
    return frozenset(range(len(partition.parts))) - free


def game_for(model: KripkeStructure, spec, partition: Partition | None = None, *,
             paranoid: bool = False, jobs: int = 1, **caps) -> CoalitionGame:
    """CoalitionGame of the linear-time game for a condition, Specification or spec text."""
    from .game import Specification, linear_game, parse_spec
    from .model import default_partition
    from .spec.conditions import LOOP_DETERMINED, Negated, Reachability, Safety

    partition = partition or default_partition(model)
    if isinstance(spec, str):
        spec = parse_spec(spec, model)
    elif isinstance(spec, LOOP_DETERMINED + (Negated, Reachability, Safety)):
        spec = Specification("condition", "", condition=spec)
    game = linear_game(model, partition, spec, verify=paranoid, **caps)
    return CoalitionGame(game, partition.names, prune_forced_parts(model, partition),
                         engine="game", paranoid=paranoid, jobs=jobs)


def coalition_value(model, spec, partition, coalition, **kw) -> int:
    return game_for(model, spec, partition, **kw).value(coalition)


def critical_pairs(model, spec, partition, part, **kw) -> list[Coalition]:
    g = game_for(model, spec, partition, **kw)
    return [Coalition.from_mask(m) for m in g.critical_pairs(part)]


def usefulness(model, spec, partition, part, **kw) -> bool:
    return game_for(model, spec, partition, **kw).usefulness(part)[0]


def importance_exact(model, spec, partition=None, cap: int = DEFAULT_EXACT_CAP, **kw) -> ImportanceReport:
    return game_for(model, spec, partition, **kw).exact(cap)


def importance_sampled(model, spec, partition=None, samples: int = 10_000, seed: int = 0,
                       batch_size: int = DEFAULT_BATCH_SIZE, **kw) -> SampledReport:
    return game_for(model, spec, partition, **kw).sampled(samples, seed, batch_size)


def importance_brute_oracle(model, spec, partition=None, cap: int = DEFAULT_BRUTE_CAP, **kw) -> list[Fraction]:
    return game_for(model, spec, partition, **kw).brute_force(cap)
