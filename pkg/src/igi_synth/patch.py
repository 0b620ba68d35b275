"""Patches: ordered edit lists applied against a fixed base tree.

An edit addresses nodes of the *base* tree by id.  Ids persist through
application: a replacement's new node inherits the target id, an inserted
node and all filler nodes get fresh ids (>= base size), a deletion's
promoted subtree keeps its ids while the rest vanish.  An edit whose target
id is not an alive base id at its turn is disabled (recorded and skipped),
never an error; so is an edit whose stored payload no longer fits the live
node, which can happen after patches are recombined.  Application is a pure
function of (base, patch).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

from .dsl import (
    Node,
    Primitive,
    PrimitiveSet,
    ProgramTree,
    SemType,
    format_prefix,
    mk_node,
)


@dataclass(frozen=True)
class Replacement:
    """Swap the target's primitive (basic form, args=None) or replace a leaf
    with a whole terminal-filled call (extended form, args given)."""

    target: int
    primitive: Primitive
    args: Optional[tuple[Node, ...]] = None

    def __post_init__(self) -> None:
        if self.args is not None and len(self.args) != self.primitive.arity:
            raise ValueError("replacement args do not match primitive arity")


@dataclass(frozen=True)
class Insertion:
    """Push a new call above the target; the old subtree moves into ``slot``,
    remaining slots take the filler templates (None marks ``slot``)."""

    target: int
    primitive: Primitive
    slot: int
    fillers: tuple[Optional[Node], ...]

    def __post_init__(self) -> None:
        if not 0 <= self.slot < self.primitive.arity:
            raise ValueError("insertion slot out of range")
        if len(self.fillers) != self.primitive.arity:
            raise ValueError("insertion fillers do not match primitive arity")
        if self.fillers[self.slot] is not None:
            raise ValueError("receiving slot must be empty in fillers")
        if any(f is None for i, f in enumerate(self.fillers) if i != self.slot):
            raise ValueError("non-receiving slots need filler templates")


@dataclass(frozen=True)
class Deletion:
    """Promote one same-typed child over the target."""

    target: int
    child_index: int


Edit = Union[Replacement, Insertion, Deletion]


@dataclass(frozen=True)
class Patch:
    """Edit list plus the base signature it was built against."""

    edits: tuple[Edit, ...]
    base_size: int
    base_root_type: SemType

    @staticmethod
    def empty(base: ProgramTree) -> "Patch":
        return Patch((), base.size, base.return_type)

    def extended(self, edit: Edit) -> "Patch":
        return Patch(self.edits + (edit,), self.base_size, self.base_root_type)

    def __len__(self) -> int:
        return len(self.edits)


class PatchState:
    """Working tree mid-application, with alive base ids and a fresh-id cursor."""

    __slots__ = ("tree", "base_size", "alive", "next_fresh", "disabled", "position")

    def __init__(
        self,
        tree: ProgramTree,
        base_size: int,
        alive: frozenset[int],
        next_fresh: int,
        disabled: tuple[int, ...],
        position: int,
    ):
        self.tree = tree
        self.base_size = base_size
        self.alive = alive
        self.next_fresh = next_fresh
        self.disabled = disabled
        self.position = position


class PatchResult(NamedTuple):
    tree: ProgramTree  # carries persistent ids; renumber before reuse as a base
    disabled: tuple[int, ...]  # positions of skipped edits


def initial_state(base: ProgramTree) -> PatchState:
    ids = base.node_ids()
    if sorted(ids) != list(range(base.size)):
        raise ValueError("patch base must carry canonical preorder ids")
    return PatchState(base, base.size, frozenset(ids), base.size, (), 0)


def apply_patch(base: ProgramTree, patch: Patch) -> PatchResult:
    if patch.base_size != base.size or patch.base_root_type is not base.return_type:
        raise ValueError(
            f"patch built for base ({patch.base_size}, {patch.base_root_type.value}), "
            f"got ({base.size}, {base.return_type.value})"
        )
    state = initial_state(base)
    for edit in patch.edits:
        state = apply_edit(state, edit)
    return PatchResult(state.tree, state.disabled)


def apply_edit(state: PatchState, edit: Edit) -> PatchState:
    """Apply one edit to a working state; returns the successor state.

    Disables the edit when its target is not an alive base id, or when the
    stored payload no longer matches the live node (possible only for
    recombined edit lists; type safety wins over applying a stale edit).
    """
    pos = state.position
    node = None
    if edit.target < state.base_size and edit.target in state.alive:
        node = state.tree.node(edit.target)
    if node is None or not _applicable(edit, node):
        return PatchState(
            state.tree,
            state.base_size,
            state.alive,
            state.next_fresh,
            state.disabled + (pos,),
            pos + 1,
        )

    fresh = [state.next_fresh]
    removed: frozenset[int] = frozenset()

    if isinstance(edit, Replacement):
        if edit.args is None:
            new_node = _with_id(mk_node(edit.primitive, node.children), node.node_id)
        else:
            filled = tuple(_relabel_fresh(a, fresh) for a in edit.args)
            new_node = _with_id(mk_node(edit.primitive, filled), node.node_id)
            removed = _base_ids_under(node, state.base_size) - {node.node_id}
    elif isinstance(edit, Insertion):
        children = tuple(
            node if i == edit.slot else _relabel_fresh(f, fresh)
            for i, f in enumerate(edit.fillers)
        )
        new_node = _with_id(mk_node(edit.primitive, children), fresh[0])
        fresh[0] += 1
    else:  # Deletion
        promoted = node.children[edit.child_index]
        removed = _base_ids_under(node, state.base_size) - _base_ids_under(
            promoted, state.base_size
        )
        new_node = promoted

    new_root = _replace_by_id(state.tree.root, edit.target, new_node)
    return PatchState(
        ProgramTree(new_root),
        state.base_size,
        state.alive - removed,
        fresh[0],
        state.disabled,
        pos + 1,
    )


def _applicable(edit: Edit, node: Node) -> bool:
    if isinstance(edit, Replacement):
        if edit.primitive.return_type is not node.return_type:
            return False
        if edit.args is None:
            return node.primitive.arg_types == edit.primitive.arg_types
        return True
    if isinstance(edit, Insertion):
        return (
            edit.primitive.return_type is node.return_type
            and edit.primitive.arg_types[edit.slot] is node.return_type
        )
    return (
        edit.child_index < len(node.children)
        and node.children[edit.child_index].return_type is node.return_type
    )


def _with_id(node: Node, node_id: int) -> Node:
    return Node(node.primitive, node.children, node_id, node.size, node.depth)


def _relabel_fresh(template: Node, counter: list[int]) -> Node:
    nid = counter[0]
    counter[0] += 1
    children = tuple(_relabel_fresh(c, counter) for c in template.children)
    return Node(template.primitive, children, nid, template.size, template.depth)


def _base_ids_under(node: Node, base_size: int) -> frozenset[int]:
    acc = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if n.node_id < base_size:
            acc.add(n.node_id)
        stack.extend(n.children)
    return frozenset(acc)


def _replace_by_id(root: Node, target_id: int, replacement: Node) -> Node:
    if root.node_id == target_id:
        return replacement

    def rebuild(n: Node) -> Optional[Node]:
        for i, c in enumerate(n.children):
            if c.node_id == target_id:
                kids = n.children[:i] + (replacement,) + n.children[i + 1 :]
                return _with_id(mk_node(n.primitive, kids), n.node_id)
            sub = rebuild(c)
            if sub is not None:
                kids = n.children[:i] + (sub,) + n.children[i + 1 :]
                return _with_id(mk_node(n.primitive, kids), n.node_id)
        return None

    result = rebuild(root)
    if result is None:
        raise KeyError(f"node id {target_id} not in tree")
    return result


# ---------------------------------------------------------------------------
# Random edit generation


def fill_slot(ps: PrimitiveSet, t: SemType, rng: random.Random) -> Optional[Node]:
    """Terminal of type t, or a terminal-filled call when t has no terminal."""
    terms = ps.terminals_of(t)
    if terms:
        return mk_node(rng.choice(terms))
    pool = ps.fill_pool(t)
    if not pool:
        return None
    f = rng.choice(pool)
    children = tuple(mk_node(rng.choice(ps.terminals_of(a))) for a in f.arg_types)
    return mk_node(f, children)


def random_edit(
    tree: ProgramTree,
    ps: PrimitiveSet,
    rng: random.Random,
    retries: int = 20,
) -> Optional[Edit]:
    """Uniform target node, uniform edit kind, payload per the kind's rules.

    Infeasible (node, kind) pairs are redrawn up to ``retries`` times before
    giving up with None.
    """
    nodes = tree.nodes()
    for _ in range(retries):
        node = rng.choice(nodes)
        kind = rng.randrange(3)
        if kind == 0:
            edit = _random_replacement(node, ps, rng)
        elif kind == 1:
            edit = _random_insertion(node, ps, rng)
        else:
            edit = _random_deletion(node, rng)
        if edit is not None:
            return edit
    return None


def _random_replacement(node: Node, ps: PrimitiveSet, rng: random.Random) -> Optional[Edit]:
    t = node.return_type
    if node.children:
        pool = [p for p in ps.same_signature(node.primitive) if p != node.primitive]
        if not pool:
            return None
        return Replacement(node.node_id, rng.choice(pool))
    # leaf target: terminals and whole calls share one uniform pool
    choices: list[Primitive] = [p for p in ps.terminals_of(t) if p != node.primitive]
    choices.extend(
        f
        for f in ps.functions_returning(t)
        if all(ps.slot_fillable(a) for a in f.arg_types)
    )
    if not choices:
        return None
    pick = rng.choice(choices)
    if pick.is_terminal:
        return Replacement(node.node_id, pick)
    args = []
    for a in pick.arg_types:
        filler = fill_slot(ps, a, rng)
        if filler is None:
            return None
        args.append(filler)
    return Replacement(node.node_id, pick, tuple(args))


def _insertion_slots(f: Primitive, t: SemType, ps: PrimitiveSet) -> list[int]:
    """Receiving-slot choices: slots of type t whose sibling slots can be filled."""
    return [
        i
        for i, a in enumerate(f.arg_types)
        if a is t
        and all(ps.slot_fillable(b) for j, b in enumerate(f.arg_types) if j != i)
    ]


def _random_insertion(node: Node, ps: PrimitiveSet, rng: random.Random) -> Optional[Edit]:
    t = node.return_type
    pool = [f for f in ps.functions_returning(t) if _insertion_slots(f, t, ps)]
    if not pool:
        return None
    f = rng.choice(pool)
    slot = rng.choice(_insertion_slots(f, t, ps))
    fillers: list[Optional[Node]] = []
    for i, a in enumerate(f.arg_types):
        if i == slot:
            fillers.append(None)
            continue
        filler = fill_slot(ps, a, rng)
        if filler is None:
            return None
        fillers.append(filler)
    return Insertion(node.node_id, f, slot, tuple(fillers))


def _random_deletion(node: Node, rng: random.Random) -> Optional[Edit]:
    candidates = [
        i for i, c in enumerate(node.children) if c.return_type is node.return_type
    ]
    if not candidates:
        return None
    return Deletion(node.node_id, rng.choice(candidates))


# ---------------------------------------------------------------------------
# Diagnostics


def patches_equivalent(base: ProgramTree, a: Patch, b: Patch) -> bool:
    """True when both patches produce structurally identical programs."""
    return apply_patch(base, a).tree.structurally_equal(apply_patch(base, b).tree)


def format_edit(edit: Edit) -> str:
    if isinstance(edit, Replacement):
        if edit.args is None:
            return f"replace @{edit.target} -> {edit.primitive.symbol}"
        body = ",".join(format_prefix(a) for a in edit.args)
        return f"replace @{edit.target} -> {edit.primitive.symbol}({body})"
    if isinstance(edit, Insertion):
        parts = [
            "*" if i == edit.slot else format_prefix(f)
            for i, f in enumerate(edit.fillers)
        ]
        return f"insert @{edit.target} -> {edit.primitive.symbol}({','.join(parts)})"
    return f"delete @{edit.target} -> promote child {edit.child_index}"


def format_patch(patch: Patch) -> str:
    if not patch.edits:
        return "(empty patch)"
    return "\n".join(f"[{i}] {format_edit(e)}" for i, e in enumerate(patch.edits))
