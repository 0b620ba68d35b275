"""Program evaluation for the built-in DSLs.

Evaluation is total: partiality surfaces as the NULL value (list language)
or as sentinel results "" / -1 (string language, which never produces NULL
from its own operations).  Any argument that is NULL makes the enclosing
call NULL, and any 64-bit integer overflow makes the result NULL, in every
language.  Oversized strings are treated like overflow so that runaway
concatenation chains cannot exhaust memory.
"""

from __future__ import annotations

from itertools import accumulate
from operator import add, mul, sub
from typing import Optional, Sequence

from .dsl import (
    INT64_MAX,
    INT64_MIN,
    MAX_STR_LEN,
    NULL,
    Node,
    PrimitiveKind,
    ProgramTree,
    Value,
)

_DIGITS = frozenset("0123456789")


def _i64(v: int) -> Value:
    return v if INT64_MIN <= v <= INT64_MAX else NULL


def _arr(xs: Sequence[int]) -> Value:
    if xs and (max(xs) > INT64_MAX or min(xs) < INT64_MIN):
        return NULL
    return tuple(xs)


def _cap_str(s: str) -> Value:
    return s if len(s) <= MAX_STR_LEN else NULL


# --- list language ---------------------------------------------------------


def _head(x):
    return x[0] if x else NULL


def _last(x):
    return x[-1] if x else NULL


def _take(n, x):
    return x[: max(n, 0)]


def _drop(n, x):
    return x[max(n, 0):]


def _access(n, x):
    return x[n] if 0 <= n < len(x) else NULL


def _minimum(x):
    return min(x) if x else NULL


def _maximum(x):
    return max(x) if x else NULL


def _scan(x, op):
    return _arr(tuple(accumulate(x, op)))


_LM_SEMANTICS = {
    "HEAD": _head,
    "LAST": _last,
    "TAKE": _take,
    "DROP": _drop,
    "ACCESS": _access,
    "MINIMUM": _minimum,
    "MAXIMUM": _maximum,
    "REVERSE": lambda x: x[::-1],
    "SORT": lambda x: tuple(sorted(x)),
    "SUM": lambda x: _i64(sum(x)),
    "MAPA1": lambda x: _arr([v + 1 for v in x]),
    "MAPM1": lambda x: _arr([v - 1 for v in x]),
    "MAPT2": lambda x: _arr([v * 2 for v in x]),
    "MAPT3": lambda x: _arr([v * 3 for v in x]),
    "MAPT4": lambda x: _arr([v * 4 for v in x]),
    "MAPD2": lambda x: tuple(v // 2 for v in x),
    "MAPD3": lambda x: tuple(v // 3 for v in x),
    "MAPD4": lambda x: tuple(v // 4 for v in x),
    "MAPV1": lambda x: _arr([-v for v in x]),
    "MAPP2": lambda x: _arr([v * v for v in x]),
    "FILG0": lambda x: tuple(v for v in x if v > 0),
    "FILL0": lambda x: tuple(v for v in x if v < 0),
    "FILEV": lambda x: tuple(v for v in x if v % 2 == 0),
    "FILOD": lambda x: tuple(v for v in x if v % 2 != 0),
    "COUG0": lambda x: sum(1 for v in x if v > 0),
    "COUL0": lambda x: sum(1 for v in x if v < 0),
    "COUEV": lambda x: sum(1 for v in x if v % 2 == 0),
    "COUOD": lambda x: sum(1 for v in x if v % 2 != 0),
    "ZIPSUM": lambda x, y: _arr([a + b for a, b in zip(x, y)]),
    "ZIPDIF": lambda x, y: _arr([a - b for a, b in zip(x, y)]),
    "ZIPMUL": lambda x, y: _arr([a * b for a, b in zip(x, y)]),
    "ZIPMAX": lambda x, y: tuple(a if a > b else b for a, b in zip(x, y)),
    "ZIPMIN": lambda x, y: tuple(a if a < b else b for a, b in zip(x, y)),
    "SCANSUM": lambda x: _scan(x, add),
    "SCANDIF": lambda x: _scan(x, sub),
    "SCANMUL": lambda x: _scan(x, mul),
    "SCANMAX": lambda x: tuple(accumulate(x, max)),
    "SCANMIN": lambda x: tuple(accumulate(x, min)),
}


# --- string language -------------------------------------------------------


def _at(s, i):
    return s[i] if 0 <= i < len(s) else ""


def _its(x):
    return str(x) if x >= 0 else ""


def _substr(s, i, j):
    if i < 0 or j < 0 or i >= len(s):
        return ""
    return s[i : min(len(s), i + j)]


def _sti(s):
    if s and all(c in _DIGITS for c in s):
        return _i64(int(s))
    return -1


def _ind(s, t, i):
    if i < 0 or i >= len(s):
        return -1
    return s.find(t, i)


_ST_SEMANTICS = {
    "CAT": lambda s, t: _cap_str(s + t),
    "REP": lambda s, t, r: _cap_str(s.replace(t, r, 1)),
    "AT": _at,
    "ITS": _its,
    "SITE": lambda b, s, t: s if b else t,
    "SUBSTR": _substr,
    "LEN": len,
    "STI": _sti,
    "IITE": lambda b, x, y: x if b else y,
    "IND": _ind,
    "PRF": lambda s, t: t.startswith(s),
    "SUF": lambda s, t: t.endswith(s),
    "CONT": lambda s, t: t in s,
}


# --- shared arithmetic (toy language and string language) ------------------

_COMMON_SEMANTICS = {
    "ADD": lambda x, y: _i64(x + y),
    "SUB": lambda x, y: _i64(x - y),
    "EQ": lambda x, y: x == y,
    "ITE": lambda b, x, y: x if b else y,
}

SEMANTICS: dict[str, object] = {**_LM_SEMANTICS, **_ST_SEMANTICS, **_COMMON_SEMANTICS}


class CompiledProgram:
    """Postorder opcode list for one tree; reused across example inputs."""

    __slots__ = ("ops",)

    _CONST, _INPUT, _CALL = 0, 1, 2

    def __init__(self, root: Node):
        ops: list[tuple] = []
        stack: list[tuple[Node, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded or not node.children:
                prim = node.primitive
                if prim.kind is PrimitiveKind.CONSTANT:
                    ops.append((self._CONST, prim.value))
                elif prim.kind is PrimitiveKind.INPUT:
                    ops.append((self._INPUT, prim.input_index))
                else:
                    ops.append((self._CALL, SEMANTICS[prim.symbol], prim.arity))
            else:
                stack.append((node, True))
                for c in reversed(node.children):
                    stack.append((c, False))
        self.ops = ops

    def run(self, env: Sequence[Value]) -> Value:
        stack: list[Value] = []
        push = stack.append
        for op in self.ops:
            code = op[0]
            if code == 2:
                arity = op[2]
                if arity == 1:
                    a = stack[-1]
                    stack[-1] = NULL if a is NULL else op[1](a)
                elif arity == 2:
                    b = stack.pop()
                    a = stack[-1]
                    stack[-1] = NULL if (a is NULL or b is NULL) else op[1](a, b)
                else:
                    c = stack.pop()
                    b = stack.pop()
                    a = stack[-1]
                    stack[-1] = (
                        NULL
                        if (a is NULL or b is NULL or c is NULL)
                        else op[1](a, b, c)
                    )
            elif code == 0:
                push(op[1])
            else:
                push(env[op[1]])
        return stack[0]


def compile_program(program: ProgramTree | Node) -> CompiledProgram:
    root = program.root if isinstance(program, ProgramTree) else program
    return CompiledProgram(root)


def evaluate(program: ProgramTree | Node, env: Sequence[Value] = ()) -> Value:
    """Run a program on one input tuple; always returns a value (or NULL)."""
    return compile_program(program).run(env)


class EvalCounter:
    """Tally of whole-candidate evaluations; budget checks live with callers."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def bump(self, n: int = 1) -> int:
        self.count += n
        return self.count
