"""Typed expression-tree DSLs: value model, primitive sets, program trees, generators.

Three built-in languages share one tree representation:

* ``toy``    -- integer arithmetic with a conditional, constants 0 and 1
* ``dsl-lm`` -- 38 list-manipulation functions over integers and integer arrays
* ``dsl-st`` -- 16 string-transformation functions over strings, integers, booleans

A program is an immutable tree of ``Node`` objects.  Every node carries a
stable integer id; freshly built trees are labeled in preorder (root = 0,
parent id < child id).  Edit application elsewhere may leave gaps in the id
space, so ids are only guaranteed unique, not contiguous, on derived trees.
"""

from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Union

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

# Longest string any program value may hold; concatenation chains past this
# are treated like integer overflow (the value becomes NULL).
MAX_STR_LEN = 10_000


class SemType(str, enum.Enum):
    """Semantic value types usable by DSL primitives."""

    INTEGER = "Integer"
    INT_ARRAY = "IntArray"
    BOOLEAN = "Boolean"
    STRING = "String"

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"SemType.{self.name}"


class _Null:
    """Singleton absent value; any function receiving it returns it."""

    _instance: Optional["_Null"] = None

    def __new__(cls) -> "_Null":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NULL"

    def __bool__(self) -> bool:
        return False


NULL = _Null()

# Runtime values: 64-bit ints, int arrays (as tuples), booleans, strings, NULL.
Value = Union[int, bool, str, tuple, _Null]


def sem_type_of(value: Value) -> Optional[SemType]:
    """Type tag of a concrete value; None for NULL."""
    if value is NULL:
        return None
    if isinstance(value, bool):  # bool before int: bool is an int subclass
        return SemType.BOOLEAN
    if isinstance(value, int):
        return SemType.INTEGER
    if isinstance(value, str):
        return SemType.STRING
    if isinstance(value, (tuple, list)):
        return SemType.INT_ARRAY
    raise TypeError(f"not a DSL value: {value!r}")


def values_equal(a: Value, b: Value) -> bool:
    """Deep equality with strict type tags (1 != True, NULL only equals NULL)."""
    if a is NULL or b is NULL:
        return a is b
    ta, tb = sem_type_of(a), sem_type_of(b)
    if ta is not tb:
        return False
    if ta is SemType.INT_ARRAY:
        return tuple(a) == tuple(b)
    return a == b


class GenerationError(Exception):
    """Raised when a generator cannot possibly satisfy its request."""


class PrimitiveKind(enum.Enum):
    FUNCTION = "function"
    CONSTANT = "constant"
    INPUT = "input"


def constant_symbol(value: Value) -> str:
    """Canonical rendering of a constant value as a primitive symbol."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (tuple, list)):
        return "[" + ",".join(str(int(v)) for v in value) + "]"
    raise TypeError(f"unsupported constant: {value!r}")


@dataclass(frozen=True)
class Primitive:
    """One symbol of a DSL: a function, a constant, or an input slot."""

    symbol: str
    arg_types: tuple[SemType, ...]
    return_type: SemType
    kind: PrimitiveKind
    value: Value = field(default=None)  # constants only
    input_index: int = field(default=-1)  # inputs only

    @property
    def arity(self) -> int:
        return len(self.arg_types)

    @property
    def is_terminal(self) -> bool:
        return self.kind is not PrimitiveKind.FUNCTION

    def __repr__(self) -> str:
        return f"Primitive({self.symbol})"


def _fn(symbol: str, args: tuple[SemType, ...], ret: SemType) -> Primitive:
    return Primitive(symbol, args, ret, PrimitiveKind.FUNCTION)


def constant(value: Value) -> Primitive:
    t = sem_type_of(value)
    if t is None:
        raise ValueError("NULL cannot be a constant")
    if t is SemType.INT_ARRAY:
        value = tuple(int(v) for v in value)
    return Primitive(constant_symbol(value), (), t, PrimitiveKind.CONSTANT, value=value)


def input_terminal(index: int, t: SemType) -> Primitive:
    return Primitive(f"IN{index}", (), t, PrimitiveKind.INPUT, input_index=index)


_I = SemType.INTEGER
_A = SemType.INT_ARRAY
_B = SemType.BOOLEAN
_S = SemType.STRING

_TOY_FUNCTIONS: tuple[Primitive, ...] = (
    _fn("ADD", (_I, _I), _I),
    _fn("SUB", (_I, _I), _I),
    _fn("EQ", (_I, _I), _B),
    _fn("ITE", (_B, _I, _I), _I),
)

# List-manipulation language: 28 array-or-scalar functions plus 10 zip/scan
# combinators.  No constants; terminals come from each task's input signature.
_LM_FUNCTIONS: tuple[Primitive, ...] = (
    _fn("HEAD", (_A,), _I),
    _fn("LAST", (_A,), _I),
    _fn("TAKE", (_I, _A), _A),
    _fn("DROP", (_I, _A), _A),
    _fn("ACCESS", (_I, _A), _I),
    _fn("MINIMUM", (_A,), _I),
    _fn("MAXIMUM", (_A,), _I),
    _fn("REVERSE", (_A,), _A),
    _fn("SORT", (_A,), _A),
    _fn("SUM", (_A,), _I),
    _fn("MAPA1", (_A,), _A),
    _fn("MAPM1", (_A,), _A),
    _fn("MAPT2", (_A,), _A),
    _fn("MAPT3", (_A,), _A),
    _fn("MAPT4", (_A,), _A),
    _fn("MAPD2", (_A,), _A),
    _fn("MAPD3", (_A,), _A),
    _fn("MAPD4", (_A,), _A),
    _fn("MAPV1", (_A,), _A),
    _fn("MAPP2", (_A,), _A),
    _fn("FILG0", (_A,), _A),
    _fn("FILL0", (_A,), _A),
    _fn("FILEV", (_A,), _A),
    _fn("FILOD", (_A,), _A),
    _fn("COUG0", (_A,), _I),
    _fn("COUL0", (_A,), _I),
    _fn("COUEV", (_A,), _I),
    _fn("COUOD", (_A,), _I),
    _fn("ZIPSUM", (_A, _A), _A),
    _fn("ZIPDIF", (_A, _A), _A),
    _fn("ZIPMUL", (_A, _A), _A),
    _fn("ZIPMAX", (_A, _A), _A),
    _fn("ZIPMIN", (_A, _A), _A),
    _fn("SCANSUM", (_A,), _A),
    _fn("SCANDIF", (_A,), _A),
    _fn("SCANMUL", (_A,), _A),
    _fn("SCANMAX", (_A,), _A),
    _fn("SCANMIN", (_A,), _A),
)

# String-transformation language: partial operations return a sentinel
# ("" or -1) instead of NULL.
_ST_FUNCTIONS: tuple[Primitive, ...] = (
    _fn("CAT", (_S, _S), _S),
    _fn("REP", (_S, _S, _S), _S),
    _fn("AT", (_S, _I), _S),
    _fn("ITS", (_I,), _S),
    _fn("SITE", (_B, _S, _S), _S),
    _fn("SUBSTR", (_S, _I, _I), _S),
    _fn("ADD", (_I, _I), _I),
    _fn("SUB", (_I, _I), _I),
    _fn("LEN", (_S,), _I),
    _fn("STI", (_S,), _I),
    _fn("IITE", (_B, _I, _I), _I),
    _fn("IND", (_S, _S, _I), _I),
    _fn("EQ", (_I, _I), _B),
    _fn("PRF", (_S, _S), _B),
    _fn("SUF", (_S, _S), _B),
    _fn("CONT", (_S, _S), _B),
)

_BUILTIN_FUNCTIONS: dict[str, tuple[Primitive, ...]] = {
    "toy": _TOY_FUNCTIONS,
    "dsl-lm": _LM_FUNCTIONS,
    "dsl-st": _ST_FUNCTIONS,
}

DSL_NAMES = tuple(_BUILTIN_FUNCTIONS)


def _mask_conv(a: int, b: int, cutoff: int) -> int:
    """Convolution of size bitmasks: bit k set iff k = i + j with bits i of a
    and j of b set; trimmed to the cutoff."""
    if not a or not b:
        return 0
    acc = 0
    rest = a
    while rest:
        low = rest & -rest
        acc |= b << (low.bit_length() - 1)
        rest ^= low
    return acc & cutoff


class PrimitiveSet:
    """Immutable collection of primitives with the lookup tables search needs."""

    def __init__(self, name: str, primitives: tuple[Primitive, ...]):
        self.name = name
        self.primitives = tuple(primitives)
        seen: set[str] = set()
        for p in self.primitives:
            if p.symbol in seen:
                raise ValueError(f"duplicate symbol {p.symbol!r} in primitive set")
            seen.add(p.symbol)
        self.by_symbol: dict[str, Primitive] = {p.symbol: p for p in self.primitives}
        self.functions: tuple[Primitive, ...] = tuple(
            p for p in self.primitives if not p.is_terminal
        )
        self.terminals: tuple[Primitive, ...] = tuple(
            p for p in self.primitives if p.is_terminal
        )
        self._terminals_by_type: dict[SemType, tuple[Primitive, ...]] = {}
        self._functions_by_return: dict[SemType, tuple[Primitive, ...]] = {}
        for t in SemType:
            self._terminals_by_type[t] = tuple(
                p for p in self.terminals if p.return_type is t
            )
            self._functions_by_return[t] = tuple(
                f for f in self.functions if f.return_type is t
            )
        self._min_size = self._fixpoint(lambda f, m: 1 + sum(m[a] for a in f.arg_types))
        self._min_depth = self._fixpoint(
            lambda f, m: 1 + max((m[a] for a in f.arg_types), default=0)
        )
        self._size_mask_limit = 0
        self._size_masks: dict[SemType, int] = {}
        self._fn_masks: dict[str, tuple[int, tuple[int, ...]]] = {}

    def _fixpoint(self, cost) -> dict[SemType, float]:
        best: dict[SemType, float] = {
            t: (1 if self._terminals_by_type[t] else math.inf) for t in SemType
        }
        changed = True
        while changed:
            changed = False
            for f in self.functions:
                c = cost(f, best)
                if c < best[f.return_type]:
                    best[f.return_type] = c
                    changed = True
        return best

    def terminals_of(self, t: SemType) -> tuple[Primitive, ...]:
        return self._terminals_by_type[t]

    def functions_returning(self, t: SemType) -> tuple[Primitive, ...]:
        return self._functions_by_return[t]

    def has_terminal(self, t: SemType) -> bool:
        return bool(self._terminals_by_type[t])

    def min_size(self, t: SemType) -> float:
        """Node count of the smallest well-typed tree of type t (inf if none)."""
        return self._min_size[t]

    def size_feasible(self, t: SemType, size: int) -> bool:
        """Whether any well-typed tree of type t has exactly ``size`` nodes.

        Many sizes are unrealizable (e.g. size 2 needs a unary function);
        sized generation consults this to avoid dead ends entirely.
        """
        if size < 1:
            return False
        return bool(self.type_size_mask(t, size) >> size & 1)

    def type_size_mask(self, t: SemType, limit: int) -> int:
        """Bitmask of realizable tree sizes for type t (bit k <=> size k)."""
        if limit > self._size_mask_limit:
            self._size_mask_limit = max(limit, 2 * self._size_mask_limit, 64)
            self._size_masks = self._feasible_size_masks(self._size_mask_limit)
            self._fn_masks.clear()
        return self._size_masks[t]

    def fn_size_masks(self, f: Primitive, limit: int) -> tuple[int, tuple[int, ...]]:
        """(sizes of trees rooted at f, per-position suffix argument masks).

        ``suffix[i]`` holds the realizable total sizes of arguments i..end;
        the sized builder uses it to split a node budget without dead ends.
        """
        self.type_size_mask(f.return_type, limit)  # ensure masks cover limit
        cached = self._fn_masks.get(f.symbol)
        if cached is None:
            cutoff = (1 << (self._size_mask_limit + 1)) - 1
            suffix = [1]  # bit 0: empty argument list
            for a in reversed(f.arg_types):
                suffix.append(_mask_conv(self._size_masks[a], suffix[-1], cutoff))
            suffix.reverse()
            cached = (suffix[0] << 1) & cutoff, tuple(suffix)
            self._fn_masks[f.symbol] = cached
        return cached

    def _feasible_size_masks(self, limit: int) -> dict[SemType, int]:
        # Fixpoint over bitmasks: bit k of masks[t] set <=> some tree of
        # type t has exactly k nodes.  A function contributes the shifted
        # convolution of its argument masks (one extra node for itself).
        cutoff = (1 << (limit + 1)) - 1
        masks = {t: (2 if self._terminals_by_type[t] else 0) for t in SemType}
        changed = True
        while changed:
            changed = False
            for f in self.functions:
                conv = 1  # bit 0: empty argument list
                for a in f.arg_types:
                    conv = _mask_conv(masks[a], conv, cutoff)
                    if not conv:
                        break
                new = masks[f.return_type] | (conv << 1) & cutoff
                if new != masks[f.return_type]:
                    masks[f.return_type] = new
                    changed = True
        return masks

    def min_depth(self, t: SemType) -> float:
        """Depth of the shallowest well-typed tree of type t (inf if none)."""
        return self._min_depth[t]

    def same_signature(self, p: Primitive) -> tuple[Primitive, ...]:
        """Other primitives with identical argument types and return type."""
        return self._signature_pools.get((p.arg_types, p.return_type, p.is_terminal), ())

    @cached_property
    def _signature_pools(self) -> dict[tuple, tuple[Primitive, ...]]:
        pools: dict[tuple, list[Primitive]] = {}
        for p in self.primitives:
            pools.setdefault((p.arg_types, p.return_type, p.is_terminal), []).append(p)
        return {k: tuple(v) for k, v in pools.items()}

    @cached_property
    def producible_types(self) -> tuple[SemType, ...]:
        return tuple(t for t in SemType if self._min_size[t] < math.inf)

    def fill_pool(self, t: SemType) -> tuple[Primitive, ...]:
        """Functions of return type t whose every argument has a terminal.

        Used as the fallback when a slot of type t must be filled but no
        terminal of type t exists.
        """
        return self._fill_pools[t]

    @cached_property
    def _fill_pools(self) -> dict[SemType, tuple[Primitive, ...]]:
        return {
            t: tuple(
                f
                for f in self._functions_by_return[t]
                if all(self._terminals_by_type[a] for a in f.arg_types)
            )
            for t in SemType
        }

    def slot_fillable(self, t: SemType) -> bool:
        """A slot of type t can be filled with a terminal or a terminal-filled call."""
        return self.has_terminal(t) or bool(self.fill_pool(t))

    def with_inputs(self, signature: tuple[SemType, ...]) -> "PrimitiveSet":
        """New set with IN0..INk terminals appended for a task signature."""
        inputs = tuple(input_terminal(i, t) for i, t in enumerate(signature))
        return PrimitiveSet(self.name, self.primitives + inputs)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, PrimitiveSet)
            and self.name == other.name
            and self.primitives == other.primitives
        )

    def __repr__(self) -> str:
        return f"PrimitiveSet({self.name}, {len(self.primitives)} primitives)"


def builtin_primitive_set(
    name: str,
    constants: tuple[Value, ...] = (),
    allowed_functions: Optional[tuple[str, ...]] = None,
) -> PrimitiveSet:
    """Build one of the named DSLs, optionally restricted to a function subset.

    ``constants`` are appended as terminals; input terminals are appended
    later per task signature (see :meth:`PrimitiveSet.with_inputs`).
    """
    if name not in _BUILTIN_FUNCTIONS:
        raise ValueError(f"unknown DSL {name!r}; expected one of {sorted(_BUILTIN_FUNCTIONS)}")
    functions = _BUILTIN_FUNCTIONS[name]
    if allowed_functions is not None:
        known = {f.symbol for f in functions}
        unknown = [s for s in allowed_functions if s not in known]
        if unknown:
            raise ValueError(f"unknown function symbols for {name}: {unknown}")
        keep = set(allowed_functions)
        functions = tuple(f for f in functions if f.symbol in keep)
    consts = tuple(constant(v) for v in constants)
    return PrimitiveSet(name, functions + consts)


@dataclass(frozen=True)
class Node:
    """One tree node; size and depth are cached for the whole subtree."""

    primitive: Primitive
    children: tuple["Node", ...]
    node_id: int
    size: int
    depth: int

    @property
    def return_type(self) -> SemType:
        return self.primitive.return_type

    def __repr__(self) -> str:
        return f"Node({self.primitive.symbol}@{self.node_id})"


def mk_node(primitive: Primitive, children: tuple[Node, ...] = (), node_id: int = -1) -> Node:
    if len(children) != primitive.arity:
        raise ValueError(
            f"{primitive.symbol} expects {primitive.arity} children, got {len(children)}"
        )
    size = 1 + sum(c.size for c in children)
    depth = 1 + max((c.depth for c in children), default=0)
    return Node(primitive, children, node_id, size, depth)


class ProgramTree:
    """An immutable program with unique node ids.

    ``from_template`` labels nodes 0..size-1 in preorder.  Trees produced by
    edit application keep surviving ids instead; call :meth:`renumbered`
    before using such a tree as a new edit base.
    """

    __slots__ = ("root", "_preorder", "_by_id")

    def __init__(self, root: Node):
        self.root = root
        self._preorder: Optional[tuple[Node, ...]] = None
        self._by_id: Optional[dict[int, Node]] = None

    @staticmethod
    def from_template(root: Node) -> "ProgramTree":
        return ProgramTree(_relabel_preorder(root, [0]))

    @property
    def size(self) -> int:
        return self.root.size

    @property
    def depth(self) -> int:
        return self.root.depth

    @property
    def return_type(self) -> SemType:
        return self.root.return_type

    def nodes(self) -> tuple[Node, ...]:
        """All nodes in preorder."""
        if self._preorder is None:
            acc: list[Node] = []
            stack = [self.root]
            while stack:
                n = stack.pop()
                acc.append(n)
                stack.extend(reversed(n.children))
            self._preorder = tuple(acc)
        return self._preorder

    def node(self, node_id: int) -> Optional[Node]:
        if self._by_id is None:
            self._by_id = {n.node_id: n for n in self.nodes()}
        return self._by_id.get(node_id)

    def node_ids(self) -> tuple[int, ...]:
        return tuple(n.node_id for n in self.nodes())

    def renumbered(self) -> "ProgramTree":
        return ProgramTree.from_template(self.root)

    def replace_subtree(self, node_id: int, template: Node) -> "ProgramTree":
        """Splice a subtree template over the node with the given id; relabels."""

        def rebuild(n: Node) -> tuple[Node, bool]:
            if n.node_id == node_id:
                return template, True
            done = False
            kids = []
            for c in n.children:
                if done:
                    kids.append(c)
                    continue
                nc, hit = rebuild(c)
                kids.append(nc)
                done = done or hit
            if not done:
                return n, False
            return mk_node(n.primitive, tuple(kids), n.node_id), True

        new_root, hit = rebuild(self.root)
        if not hit:
            raise KeyError(f"no node with id {node_id}")
        return ProgramTree.from_template(new_root)

    def to_prefix(self) -> str:
        return format_prefix(self.root)

    def structurally_equal(self, other: "ProgramTree") -> bool:
        return _same_shape(self.root, other.root)

    def __repr__(self) -> str:
        return f"ProgramTree({self.to_prefix()})"


def _relabel_preorder(root: Node, counter: list[int]) -> Node:
    nid = counter[0]
    counter[0] += 1
    children = tuple(_relabel_preorder(c, counter) for c in root.children)
    return Node(root.primitive, children, nid, root.size, root.depth)


def _same_shape(a: Node, b: Node) -> bool:
    if a.primitive != b.primitive or len(a.children) != len(b.children):
        return False
    return all(_same_shape(x, y) for x, y in zip(a.children, b.children))


def format_prefix(node: Node) -> str:
    if not node.children:
        return node.primitive.symbol
    return node.primitive.symbol + "(" + ",".join(format_prefix(c) for c in node.children) + ")"


def type_check(tree: ProgramTree, ps: PrimitiveSet) -> list[str]:
    """Structural and type validation; returns human-readable violations."""
    problems: list[str] = []
    seen_ids: set[int] = set()
    for n in tree.nodes():
        if n.node_id in seen_ids:
            problems.append(f"duplicate node id {n.node_id}")
        seen_ids.add(n.node_id)
        p = n.primitive
        if ps.by_symbol.get(p.symbol) != p:
            problems.append(f"node {n.node_id}: {p.symbol} not in primitive set")
            continue
        if len(n.children) != p.arity:
            problems.append(
                f"node {n.node_id}: {p.symbol} has {len(n.children)} children, wants {p.arity}"
            )
            continue
        for i, (c, want) in enumerate(zip(n.children, p.arg_types)):
            if c.return_type is not want:
                problems.append(
                    f"node {n.node_id}: arg {i} of {p.symbol} is "
                    f"{c.return_type.value}, wants {want.value}"
                )
    return problems


# ---------------------------------------------------------------------------
# Random tree generation


def random_tree_ramped(
    ps: PrimitiveSet,
    root_type: SemType,
    d_min: int,
    d_max: int,
    rng: random.Random,
) -> ProgramTree:
    """Ramped half-and-half: target depth uniform in [d_min, d_max], then a
    coin toss between the full and grow strategies.  A lone node has depth 1.
    """
    if not (1 <= d_min <= d_max):
        raise ValueError(f"bad depth range [{d_min}, {d_max}]")
    md = ps.min_depth(root_type)
    if md == math.inf:
        raise GenerationError(f"no primitive in {ps.name} can produce {root_type.value}")
    if md > d_max:
        raise GenerationError(
            f"{root_type.value} needs depth {md}, above the cap {d_max}"
        )
    target = rng.randint(d_min, d_max)
    if target < md:
        target = int(md)
    full = rng.random() < 0.5
    root = _build_to_depth(ps, root_type, 1, target, d_min, full, rng)
    return ProgramTree.from_template(root)


def _build_to_depth(
    ps: PrimitiveSet,
    t: SemType,
    level: int,
    target: int,
    d_min: int,
    full: bool,
    rng: random.Random,
) -> Node:
    remaining = target - level + 1
    terms = ps.terminals_of(t)
    if remaining <= 1:
        if not terms:
            raise GenerationError(f"no terminal of type {t.value} at depth limit")
        return mk_node(rng.choice(terms))
    funcs = [
        f
        for f in ps.functions_returning(t)
        if all(ps.min_depth(a) <= remaining - 1 for a in f.arg_types)
    ]
    if full:
        pool: list[Primitive] = funcs if funcs else list(terms)
    else:
        pool = list(funcs)
        if terms and level >= d_min:
            pool.extend(terms)
        if not pool:
            pool = list(terms)
    if not pool:
        raise GenerationError(f"no primitive of type {t.value} fits depth budget")
    p = rng.choice(pool)
    if p.is_terminal:
        return mk_node(p)
    children = tuple(
        _build_to_depth(ps, a, level + 1, target, d_min, full, rng) for a in p.arg_types
    )
    return mk_node(p, children)


def random_tree_of_size(
    ps: PrimitiveSet,
    root_type: SemType,
    size: int,
    rng: random.Random,
) -> Optional[ProgramTree]:
    """Well-typed tree with exactly ``size`` nodes, or None when that size is
    unrealizable for the type.

    Realizable budgets always succeed: primitives are drawn through the
    precomputed size masks, so every child split stays realizable.
    """
    if size < 1 or not ps.size_feasible(root_type, size):
        return None
    return ProgramTree.from_template(_build_sized(ps, root_type, size, rng))


def _build_sized(ps: PrimitiveSet, t: SemType, budget: int, rng: random.Random) -> Node:
    # precondition: ps.size_feasible(t, budget)
    if budget == 1:
        return mk_node(rng.choice(ps.terminals_of(t)))
    eligible = [
        f
        for f in ps.functions_returning(t)
        if ps.fn_size_masks(f, budget)[0] >> budget & 1
    ]
    f = rng.choice(eligible)
    suffix = ps.fn_size_masks(f, budget)[1]
    remaining = budget - 1
    children = []
    for i, a in enumerate(f.arg_types):
        arg_mask = ps.type_size_mask(a, remaining)
        rest_mask = suffix[i + 1]
        choices = [
            s
            for s in range(1, remaining + 1)
            if arg_mask >> s & 1 and rest_mask >> (remaining - s) & 1
        ]
        s = rng.choice(choices)
        children.append(_build_sized(ps, a, s, rng))
        remaining -= s
    return mk_node(f, tuple(children))


# ---------------------------------------------------------------------------
# Prefix-text parsing (the serialization used by task files)


class PrefixParseError(ValueError):
    pass


def _tokenize_prefix(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "(),":
            tokens.append(ch)
            i += 1
        elif ch == '"':
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                elif text[j] == '"':
                    break
                else:
                    j += 1
            if j >= n:
                raise PrefixParseError(f"unterminated string literal at {i}")
            tokens.append(text[i : j + 1])
            i = j + 1
        elif ch == "[":
            j = text.find("]", i)
            if j < 0:
                raise PrefixParseError(f"unterminated array literal at {i}")
            tokens.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in "(),\"[" and not text[j].isspace():
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def parse_prefix(text: str, ps: PrimitiveSet) -> ProgramTree:
    """Parse ``SYM(arg,...)`` prefix notation against a primitive set."""
    tokens = _tokenize_prefix(text)
    pos = [0]

    def peek() -> Optional[str]:
        return tokens[pos[0]] if pos[0] < len(tokens) else None

    def take() -> str:
        tok = peek()
        if tok is None:
            raise PrefixParseError("unexpected end of input")
        pos[0] += 1
        return tok

    def expr() -> Node:
        sym = take()
        if sym in "(),":
            raise PrefixParseError(f"expected a symbol, got {sym!r}")
        prim = ps.by_symbol.get(sym)
        if prim is None:
            raise PrefixParseError(f"unknown primitive {sym!r} in {ps.name}")
        if peek() == "(":
            take()
            args = [expr()]
            while peek() == ",":
                take()
                args.append(expr())
            if take() != ")":
                raise PrefixParseError(f"missing ')' after arguments of {sym}")
        else:
            args = []
        if len(args) != prim.arity:
            raise PrefixParseError(f"{sym} expects {prim.arity} arguments, got {len(args)}")
        for i, (a, want) in enumerate(zip(args, prim.arg_types)):
            if a.return_type is not want:
                raise PrefixParseError(
                    f"arg {i} of {sym} has type {a.return_type.value}, wants {want.value}"
                )
        return mk_node(prim, tuple(args))

    root = expr()
    if pos[0] != len(tokens):
        raise PrefixParseError(f"trailing input after expression: {tokens[pos[0]:]}")
    return ProgramTree.from_template(root)
