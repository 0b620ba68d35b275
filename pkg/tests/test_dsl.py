import math
import random

import pytest

from igi_synth import (
    SemType,
    builtin_primitive_set,
    parse_prefix,
    random_tree_of_size,
    random_tree_ramped,
    type_check,
)
from igi_synth.dsl import (
    PrefixParseError,
    constant,
    format_prefix,
    sem_type_of,
    values_equal,
)


def dsl_setups():
    return (
        ("toy", (0,), (SemType.INTEGER, SemType.INTEGER), SemType.INTEGER),
        ("dsl-lm", (0, 1), (SemType.INT_ARRAY, SemType.INTEGER), SemType.INT_ARRAY),
        ("dsl-st", ("", " ", 0), (SemType.STRING, SemType.STRING), SemType.STRING),
    )


# ---------------------------------------------------------------------------
# values and primitives


def test_sem_type_distinguishes_bool_from_int():
    assert sem_type_of(True) is SemType.BOOLEAN
    assert sem_type_of(1) is SemType.INTEGER
    assert not values_equal(1, True)
    assert not values_equal(0, False)
    assert values_equal((1, 2), (1, 2))
    assert not values_equal((1,), 1)


def test_constant_primitives_carry_type_and_symbol():
    assert constant(0).return_type is SemType.INTEGER
    assert constant(True).return_type is SemType.BOOLEAN
    assert constant(True).symbol == "true"
    assert constant("a b").return_type is SemType.STRING
    assert constant((1, 2)).return_type is SemType.INT_ARRAY
    assert constant((1, 2)).symbol == "[1,2]"


def test_builtin_sets_have_documented_function_counts():
    assert len(builtin_primitive_set("toy", (), None).functions) == 4
    assert len(builtin_primitive_set("dsl-lm", (), None).functions) == 38
    assert len(builtin_primitive_set("dsl-st", (), None).functions) == 16


def test_function_restriction_and_unknown_symbols():
    ps = builtin_primitive_set("dsl-st", (), ("CAT",))
    assert [f.symbol for f in ps.functions] == ["CAT"]
    with pytest.raises(ValueError, match="NOSUCH"):
        builtin_primitive_set("dsl-lm", (), ("HEAD", "NOSUCH"))
    with pytest.raises(ValueError):
        builtin_primitive_set("no-such-dsl", (), None)


def test_min_size_and_depth_for_toy():
    ps = builtin_primitive_set("toy", (0,), None).with_inputs((SemType.INTEGER,))
    assert ps.min_size(SemType.INTEGER) == 1  # a terminal
    assert ps.min_size(SemType.BOOLEAN) == 3  # EQ over two terminals
    assert ps.min_depth(SemType.INTEGER) == 1
    assert ps.min_depth(SemType.BOOLEAN) == 2
    assert math.isinf(ps.min_size(SemType.STRING))


def test_size_feasibility_matches_hand_derivation():
    ps = builtin_primitive_set("toy", (0,), None).with_inputs(
        (SemType.INTEGER, SemType.INTEGER)
    )
    feasible = {n for n in range(1, 13) if ps.size_feasible(SemType.INTEGER, n)}
    # terminals: 1; ADD/SUB grow odd sizes; ITE (needs a size-3 EQ) unlocks 6+
    assert feasible == {1, 3, 5, 6, 7, 8, 9, 10, 11, 12}
    assert not ps.size_feasible(SemType.BOOLEAN, 1)
    assert ps.size_feasible(SemType.BOOLEAN, 3)
    assert not ps.size_feasible(SemType.INTEGER, 0)


# ---------------------------------------------------------------------------
# ramped generation


@pytest.mark.parametrize("dsl,consts,sig,root", dsl_setups())
def test_ramped_trees_are_well_typed_and_sized(dsl, consts, sig, root):
    ps = builtin_primitive_set(dsl, consts, None).with_inputs(sig)
    rng = random.Random(101)
    depths = set()
    for _ in range(10_000):
        tree = random_tree_ramped(ps, root, 2, 4, rng)
        assert type_check(tree, ps) == []
        assert tree.root.primitive.return_type is root
        assert tree.node_ids() == tuple(range(tree.size))
        depths.add(tree.depth)
    assert depths.issuperset({2, 3, 4}), depths
    assert max(depths) <= 6  # small overshoot allowed for terminal-less types


def test_ramped_generation_is_deterministic():
    ps = builtin_primitive_set("dsl-lm", (0,), None).with_inputs((SemType.INT_ARRAY,))
    a = [random_tree_ramped(ps, SemType.INT_ARRAY, 2, 4, random.Random(5)) for _ in range(50)]
    b = [random_tree_ramped(ps, SemType.INT_ARRAY, 2, 4, random.Random(5)) for _ in range(50)]
    assert [t.to_prefix() for t in a] == [t.to_prefix() for t in b]


@pytest.mark.parametrize("dsl,consts,sig,root", dsl_setups())
def test_sized_generation_hits_exact_size(dsl, consts, sig, root):
    ps = builtin_primitive_set(dsl, consts, None).with_inputs(sig)
    rng = random.Random(77)
    produced = 0
    for size in range(1, 15):
        for _ in range(50):
            tree = random_tree_of_size(ps, root, size, rng)
            if tree is None:
                assert not ps.size_feasible(root, size)
                continue
            produced += 1
            assert tree.size == size
            assert type_check(tree, ps) == []
    assert produced > 400


def test_sized_generation_rejects_infeasible_sizes():
    ps = builtin_primitive_set("toy", (0,), None).with_inputs((SemType.INTEGER,))
    rng = random.Random(1)
    assert random_tree_of_size(ps, SemType.INTEGER, 2, rng) is None
    assert random_tree_of_size(ps, SemType.INTEGER, 4, rng) is None
    assert random_tree_of_size(ps, SemType.INTEGER, 0, rng) is None


# ---------------------------------------------------------------------------
# tree structure and serialization


def test_replace_subtree_renumbers_canonically():
    ps = builtin_primitive_set("toy", (0,), None).with_inputs(
        (SemType.INTEGER, SemType.INTEGER)
    )
    tree = parse_prefix("ADD(IN0,SUB(IN1,0))", ps)
    donor = parse_prefix("ADD(0,0)", ps)
    out = tree.replace_subtree(2, donor.root)
    assert out.to_prefix() == "ADD(IN0,ADD(0,0))"
    assert out.node_ids() == tuple(range(out.size))


def test_prefix_round_trip_random_trees():
    for dsl, consts, sig, root in dsl_setups():
        ps = builtin_primitive_set(dsl, consts, None).with_inputs(sig)
        rng = random.Random(33)
        for _ in range(300):
            tree = random_tree_ramped(ps, root, 2, 4, rng)
            back = parse_prefix(tree.to_prefix(), ps)
            assert back.structurally_equal(tree)


def test_prefix_round_trip_string_escapes():
    ps = builtin_primitive_set("dsl-st", ('a"b\\c', " "), None).with_inputs(
        (SemType.STRING,)
    )
    tree = parse_prefix(format_prefix(parse_prefix('CAT(IN0,"a\\"b\\\\c")', ps).root), ps)
    assert tree.to_prefix() == 'CAT(IN0,"a\\"b\\\\c")'


def test_parse_diagnostics():
    ps = builtin_primitive_set("toy", (0,), None).with_inputs((SemType.INTEGER,))
    with pytest.raises(PrefixParseError, match="unknown primitive"):
        parse_prefix("NOPE(IN0)", ps)
    with pytest.raises(PrefixParseError, match="argument"):
        parse_prefix("ADD(IN0)", ps)
    with pytest.raises(PrefixParseError, match="type"):
        parse_prefix("ITE(IN0,IN0,IN0)", ps)
    with pytest.raises(PrefixParseError):
        parse_prefix("ADD(IN0,IN0", ps)
    with pytest.raises(PrefixParseError):
        parse_prefix("", ps)


def test_type_check_flags_bad_trees():
    ps = builtin_primitive_set("toy", (0,), None).with_inputs((SemType.INTEGER,))
    good = parse_prefix("ADD(IN0,0)", ps)
    assert type_check(good, ps) == []
    foreign = builtin_primitive_set("dsl-lm", (), None).with_inputs((SemType.INT_ARRAY,))
    bad = parse_prefix("HEAD(IN0)", foreign)
    assert type_check(bad, ps) != []  # HEAD is not a toy primitive
