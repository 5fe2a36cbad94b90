"""Acceptance criteria.  Each test prints one PASS/FAIL line and asserts the criterion."""
import itertools
import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from importance_mc.branching import BranchingGame, branching_game
from importance_mc.bundled import load_bundled
from importance_mc.concurrent import ConcurrentGame, concurrent_game
from importance_mc.model import default_partition
from importance_mc.shapley import game_for, importance_brute_oracle, importance_exact, importance_sampled
from importance_mc.solve import Arena, solve_game, verify_strategy
from importance_mc.spec.conditions import Buchi, CoBuchi, Parity, complement
from importance_mc.spec.syntax import parse_ctl

from oracles import shapley_by_orderings
from strategies import FIG5, FIG6, FIG8, random_condition, random_kripke, random_mts, random_partition

EL = "el: Inf({check}) & !Inf({fail})"
LTL = "ltl: GF check & FG !fail"


def F(*xs):
    return [Fraction(x) for x in xs]


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(label, limit):
        start = time.perf_counter()
        verdict, detail = "FAIL", "raised"
        try:
            yield
            elapsed = time.perf_counter() - start
            detail = f"{elapsed:.2f}s (limit {limit}s)"
            if elapsed < limit:
                verdict = "PASS"
        except Exception as exc:
            detail = f"{type(exc).__name__}: {exc}".splitlines()[0]
            raise
        finally:
            with capsys.disabled():
                print(f"\n{verdict} criterion {label}: {detail}")
        assert verdict == "PASS", f"criterion {label} exceeded {limit}s"

    return run


def test_criterion_1_linear_goldens(criterion):
    with criterion("1 linear-time goldens (Fig. 1)", 1.0):
        for spec in (EL, LTL):
            k, p = load_bundled("fig1_left")
            assert importance_exact(k, spec, p).importances == F("1/2", 0, "1/2", 0)
            k, p = load_bundled("fig1_right")
            assert importance_exact(k, spec, p).importances == F("1/2", "1/6", "1/6", "1/6", 0)


def test_criterion_2_cosafe_goldens(criterion):
    with criterion("2 co-safe goldens (Figs. 2, 3)", 2.0):
        for name, expected in (("fig2", F(0, "1/2", "1/2", 0, 0)), ("fig3", F("1/6", "1/6", "2/3", 0, 0))):
            start = time.perf_counter()
            k, p = load_bundled(name)
            assert importance_exact(k, "ltl: a U b", p).importances == expected
            assert time.perf_counter() - start < 1.0


def test_criterion_3_two_turn_goldens(criterion):
    with criterion("3 two-turn CTL goldens (Figs. 5, 6, 8)", 30.0):
        for name, f, expected in (("fig5", FIG5, F("1/12", "1/4", "7/12", 0, 0, "1/12", 0)),
                                  ("fig6", FIG6, F("1/3", 0, 0, "1/3", "1/3")),
                                  ("fig8", FIG8, F("1/2", "1/2", 0, 0))):
            start = time.perf_counter()
            m, p = load_bundled(name)
            assert branching_game(m, f, p).exact().importances == expected
            assert time.perf_counter() - start < 10.0


def test_criterion_4_concurrent_goldens(criterion):
    with criterion("4 concurrent CTL goldens (Fig. 8)", 30.0):
        m, p = load_bundled("fig8")
        game = concurrent_game(m, FIG8, p)
        assert game.exact().importances == F("7/12", "1/3", "1/12", 0)
        # the sub-game in which Unsat holds {1, 3} and Sat holds {0, 2}
        assert game.value(["0", "2"]) == Fraction(1, 2)
        # read as Sat's coalition, {1, 3} loses outright (Unsat owns 0)
        assert game.value(["1", "3"]) == 0


def _restricted_importances(value, n, useful):
    """Shapley values over the useful parts only, as a plain permutation average."""
    index = sorted(useful)

    def sub_value(sub):
        return value(sum(1 << index[b] for b in range(len(index)) if sub >> b & 1))

    sub = shapley_by_orderings(sub_value, len(index))
    out = [Fraction(0)] * n
    for b, i in enumerate(index):
        out[i] = sub[b]
    return out


def test_criterion_5_shapley_properties(criterion):
    rng = random.Random(20240)
    with criterion("5 Shapley properties (300 random Kripke structures)", 300.0):
        for _ in range(300):
            k = random_kripke(rng, 4, 7)
            p = random_partition(rng, k.states)
            cond = random_condition(rng, len(k.states))
            n = len(p)
            game = game_for(k, cond, p)
            report = game.exact()
            imp = report.importances
            brute = importance_brute_oracle(k, cond, p)
            # telescope
            assert sum(imp) == report.val_full - report.val_empty
            # restriction to useful parts, against the all-parts oracle
            assert imp == brute
            useful = {i for i in range(n) if brute[i] != 0}
            if useful:
                assert _restricted_importances(game.value_fn, n, useful) == brute
            # complement objective
            comp = complement(cond, range(len(k.states)), k.succ)
            assert importance_exact(k, comp, p).importances == imp
            # needs-order
            values = [game.value(m) for m in range(1 << n)]
            for s, t in itertools.permutations(range(n), 2):
                if all(values[m] == 0 for m in range(1 << n) if m >> s & 1 and not m >> t & 1):
                    assert imp[s] <= imp[t]


def _graph_corpus(rng):
    """All graphs on 1-3 states, plus 40 seeded random graphs on each of 4 and 5 states."""
    for n in (1, 2, 3):
        rows = [tuple(t for t in range(n) if bits >> t & 1) for bits in range(1, 1 << n)]
        yield from itertools.product(rows, repeat=n)
    for n in (4, 5):
        for _ in range(40):
            yield tuple(tuple(sorted(rng.sample(range(n), rng.randint(1, 3)))) for _ in range(n))


def _specialized_conditions(rng, n):
    pick = lambda: frozenset(s for s in range(n) if rng.random() < 0.4)
    return [Buchi(pick()), CoBuchi(pick()), Parity(tuple((s, rng.randint(0, 4)) for s in range(n)))]


def _agree(arena, cond):
    fast = solve_game(arena, cond, verify=False)
    generic = solve_game(arena, cond, generic=True, verify=False)
    assert fast.win_sat == generic.win_sat, (arena, cond)
    assert verify_strategy(arena, cond, fast) and verify_strategy(arena, cond, generic), (arena, cond)


def test_criterion_6_solver_differential(criterion):
    rng = random.Random(606)
    with criterion("6 specialized vs generic solvers", 600.0):
        for succ in _graph_corpus(rng):
            n = len(succ)
            conds = _specialized_conditions(rng, n)
            for owner in itertools.product((False, True), repeat=n):
                arena = Arena(succ, owner)
                for cond in conds:
                    _agree(arena, cond)
        for _ in range(500):
            n = rng.randint(6, 8)
            succ = tuple(tuple(sorted(rng.sample(range(n), rng.randint(1, 3)))) for _ in range(n))
            arena = Arena(succ, tuple(rng.random() < 0.5 for _ in range(n)))
            for cond in _specialized_conditions(rng, n):
                _agree(arena, cond)


def _mts_corpus():
    m6, _ = load_bundled("fig6")
    m8, _ = load_bundled("fig8")
    yield m6, FIG6
    yield m8, FIG8
    rng = random.Random(77)
    formulas = [parse_ctl(t) for t in ("EF b", "AG a", "A a U b", "EX a & EX !a", "AG EF a",
                                       "EF (a & EX b) | AX !b", "E (a | b) U (a & b)")]
    for i in range(60):
        yield random_mts(rng, 2, 4, labels=("a", "b")), formulas[i % len(formulas)]


def test_criterion_7_concurrent_consistency(criterion):
    with criterion("7 concurrent vs two-turn consistency", 120.0):
        for m, f in _mts_corpus():
            assert len(m.states) <= 5
            p = default_partition(m)
            two, dual = BranchingGame.build(m, f, p), BranchingGame.build(m, f, p, dual=True)
            conc = ConcurrentGame(BranchingGame.build(m, f, p))
            for mask in range(1 << len(p)):
                v = conc(mask)
                assert math.floor(v) == two(mask)
                assert (v == 0) == (dual(mask) == 0)
            two_turn_imp = branching_game(m, f, p).exact().importances
            concurrent_imp = concurrent_game(m, f, p).exact().importances
            assert all(c > 0 for t, c in zip(two_turn_imp, concurrent_imp) if t > 0)
        m8, p8 = load_bundled("fig8")
        two_turn_imp = branching_game(m8, FIG8, p8).exact().importances
        concurrent_imp = concurrent_game(m8, FIG8, p8).exact().importances
        assert two_turn_imp[2] == 0 and concurrent_imp[2] == Fraction(1, 12)


def test_criterion_8_sampling(criterion):
    with criterion("8 sampling sanity (10,000 samples, Figs. 1-3)", 60.0):
        for name, spec in (("fig1_left", EL), ("fig1_right", EL), ("fig2", "ltl: a U b"), ("fig3", "ltl: a U b")):
            k, p = load_bundled(name)
            exact = importance_exact(k, spec, p)
            sampled = importance_sampled(k, spec, p, samples=10_000, seed=2024)
            for est, truth in zip(sampled.estimates, exact.importances):
                assert abs(float(est) - float(truth)) <= 0.05
            diff = sampled.val_full - sampled.val_empty
            assert all(t == size * diff for t, size in zip(sampled.batch_totals, sampled.batch_sizes))
            assert sum(sampled.estimates) == diff
