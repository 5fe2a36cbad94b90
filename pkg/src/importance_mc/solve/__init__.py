"""Turn-based game solving."""
from .algorithms import solve_buchi, solve_cobuchi, solve_parity, solve_reachability, solve_safety
from .arena import SAT, UNSAT, Arena, ResourceCapExceeded, arena_from_structure, attractor, build_arena
from .core import StrategyCheckFailed, solve_game, solve_via_lar, value_of
from .lar import LarMemory, LarProduct, lar_reduce
from .solution import POSITIONAL, Solution, normalize
from .verify import verify_strategy

__all__ = [
    "SAT", "UNSAT", "Arena", "ResourceCapExceeded", "arena_from_structure", "attractor",
    "build_arena", "solve_game", "solve_via_lar", "value_of", "StrategyCheckFailed", "lar_reduce",
    "LarMemory", "LarProduct", "Solution", "POSITIONAL", "normalize", "verify_strategy",
    "solve_buchi", "solve_cobuchi", "solve_parity", "solve_reachability", "solve_safety",
]
