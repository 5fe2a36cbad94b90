"""PGSolver-style parity game text format.

    parity <max-id>;
    [start <id>;]
    <id> <priority> <owner> <succ>,<succ>,... ["name"];

Owner 0 is the even player (Sat), owner 1 the odd player (Unsat); the winning
convention is max-parity.  Identifiers need not be contiguous; they are mapped to
arena indices in increasing order.
"""
from __future__ import annotations

import re
from typing import Sequence

from ..spec.conditions import Parity
from .arena import SAT, Arena


class PgSolverFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


_NODE = re.compile(r'^\s*(\d+)\s+(\d+)\s+([01])\s+(\d+(?:\s*,\s*\d+)*)\s*(?:"((?:[^"\\]|\\.)*)")?\s*;?\s*$')


def parse_pgsolver(text: str) -> tuple[Arena, Parity]:
    rows = []
    start = None
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen and line.startswith("parity"):
            if not re.fullmatch(r"parity\s+\d+\s*;?", line):
                raise PgSolverFormatError("malformed header, expected 'parity <n>;'", lineno)
            header_seen = True
            continue
        m = re.fullmatch(r"start\s+(\d+)\s*;?", line)
        if m:
            start = int(m.group(1))
            continue
        m = _NODE.match(line)
        if m is None:
            raise PgSolverFormatError(f"cannot parse node line {raw!r}", lineno)
        ident, prio, owner = int(m.group(1)), int(m.group(2)), int(m.group(3))
        succ = [int(x) for x in m.group(4).split(",")]
        rows.append((ident, prio, owner, succ, m.group(5), lineno))
    if not rows:
        raise PgSolverFormatError("no nodes")
    ids = sorted(r[0] for r in rows)
    if len(set(ids)) != len(ids):
        raise PgSolverFormatError("duplicate node identifier")
    index = {ident: k for k, ident in enumerate(ids)}
    succ: list[tuple[int, ...]] = [()] * len(ids)
    owner: list[bool] = [SAT] * len(ids)
    prio: list[tuple[int, int]] = []
    names: list[str] = [""] * len(ids)
    for ident, p, o, out, name, lineno in rows:
        k = index[ident]
        missing = [t for t in out if t not in index]
        if missing:
            raise PgSolverFormatError(f"node {ident} has unknown successor {missing[0]}", lineno)
        succ[k] = tuple(sorted({index[t] for t in out}))
        owner[k] = o == 0
        prio.append((k, p))
        names[k] = re.sub(r"\\(.)", r"\1", name) if name is not None else str(ident)
    if start is not None and start not in index:
        raise PgSolverFormatError(f"start node {start} is not declared")
    init = index[start] if start is not None else 0
    return Arena(tuple(succ), tuple(owner), init, tuple(names)), Parity(tuple(prio))


def render_pgsolver(arena: Arena, priority: Parity | Sequence[int]) -> str:
    of = priority.of if isinstance(priority, Parity) else (lambda s: priority[s])
    lines = [f"parity {len(arena) - 1};", f"start {arena.init};"]
    for s in range(len(arena)):
        owner = 0 if arena.owner[s] == SAT else 1
        name = arena.name(s).replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'{s} {of(s)} {owner} {",".join(map(str, arena.succ[s]))} "{name}";')
    return "\n".join(lines) + "\n"
