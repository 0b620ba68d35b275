"""Tasks, similarity measures, and the fitness ordering used by every search.

Fitness of a program is the mean, over the task's examples, of a per-example
similarity between expected and actual output: exact match (0/1) for the toy
and list languages, normalized Levenshtein similarity for the string
language.  Programs are ordered by fitness first, then by smaller size;
every acceptance site in this package keeps the incumbent on a tie.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .dsl import (
    INT64_MAX,
    INT64_MIN,
    NULL,
    PrimitiveSet,
    ProgramTree,
    SemType,
    Value,
    builtin_primitive_set,
    sem_type_of,
    values_equal,
)
from .interpreter import EvalCounter, compile_program


class Example(NamedTuple):
    inputs: tuple[Value, ...]
    output: Value


class Score(NamedTuple):
    """Fitness paired with program size; the search-wide comparison key."""

    fitness: float
    size: int

    @property
    def solved(self) -> bool:
        return self.fitness == 1.0


def compare(a: Score, b: Score) -> int:
    """Three-way ordering: 1 if a is better, -1 if b is better, 0 on a tie.

    Higher fitness wins; equal fitness falls back to smaller size.
    """
    if a.fitness != b.fitness:
        return 1 if a.fitness > b.fitness else -1
    if a.size != b.size:
        return 1 if a.size < b.size else -1
    return 0


def strictly_better(a: Score, b: Score) -> bool:
    return compare(a, b) > 0


def sim_exact(expected: Value, actual: Value) -> float:
    """1.0 on deep equality with matching type tags, else 0.0 (NULL never matches)."""
    return 1.0 if values_equal(expected, actual) else 0.0


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance, two-row dynamic program."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        append = cur.append
        for j, cb in enumerate(b, start=1):
            append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def sim_levenshtein(expected: Value, actual: Value) -> float:
    """1 - distance / max length; 1.0 when both strings are empty.

    Defined for string pairs only: a non-string actual scores 0.0.
    """
    if not isinstance(expected, str) or not isinstance(actual, str):
        return 0.0
    if not expected and not actual:
        return 1.0
    return 1.0 - levenshtein(expected, actual) / max(len(expected), len(actual))


@dataclass(frozen=True, eq=False)
class Task:
    """One synthesis problem: a DSL instance plus input/output examples."""

    name: str
    dsl_name: str
    primitive_set: PrimitiveSet  # includes the input terminals
    input_signature: tuple[SemType, ...]
    examples: tuple[Example, ...]
    output_type: SemType
    constants: tuple[Value, ...] = ()
    allowed_functions: Optional[tuple[str, ...]] = None
    oracle: Optional[ProgramTree] = None

    @property
    def n_examples(self) -> int:
        return len(self.examples)

    @property
    def uses_levenshtein(self) -> bool:
        return self.dsl_name == "dsl-st"

    def similarity(self, expected: Value, actual: Value) -> float:
        if self.uses_levenshtein:
            return sim_levenshtein(expected, actual)
        return sim_exact(expected, actual)


def _check_value(v: Value, t: SemType, where: str) -> Value:
    actual = sem_type_of(v)
    if actual is not t:
        raise ValueError(f"{where}: expected {t.value}, got {actual.value if actual else 'NULL'}")
    if t is SemType.INTEGER and not INT64_MIN <= v <= INT64_MAX:
        raise ValueError(f"{where}: integer out of 64-bit range")
    if t is SemType.INT_ARRAY:
        vs = tuple(int(x) for x in v)
        if any(not INT64_MIN <= x <= INT64_MAX for x in vs):
            raise ValueError(f"{where}: array element out of 64-bit range")
        return vs
    return v


def make_task(
    name: str,
    dsl_name: str,
    input_signature: Sequence[SemType],
    examples: Sequence[tuple[Sequence[Value], Value]],
    constants: Sequence[Value] = (),
    allowed_functions: Optional[Sequence[str]] = None,
    oracle: Optional[ProgramTree] = None,
) -> Task:
    """Validate raw example data and assemble a Task with its primitive set."""
    if not examples:
        raise ValueError(f"task {name!r} has no examples")
    try:
        signature = tuple(SemType(t) for t in input_signature)
    except ValueError:
        bad = [t for t in input_signature if not isinstance(t, SemType)]
        raise ValueError(f"task {name!r}: unknown input type(s) {bad!r}") from None
    allowed = tuple(allowed_functions) if allowed_functions is not None else None
    base = builtin_primitive_set(dsl_name, tuple(constants), allowed)
    ps = base.with_inputs(signature)

    checked: list[Example] = []
    output_type: Optional[SemType] = None
    for k, (inputs, output) in enumerate(examples):
        if len(inputs) != len(signature):
            raise ValueError(
                f"task {name!r} example {k}: {len(inputs)} inputs, signature wants {len(signature)}"
            )
        ins = tuple(
            _check_value(v, t, f"task {name!r} example {k} input {i}")
            for i, (v, t) in enumerate(zip(inputs, signature))
        )
        out_t = sem_type_of(output)
        if out_t is None:
            raise ValueError(f"task {name!r} example {k}: output may not be NULL")
        if output_type is None:
            output_type = out_t
        elif out_t is not output_type:
            raise ValueError(
                f"task {name!r} example {k}: output type {out_t.value} "
                f"conflicts with earlier {output_type.value}"
            )
        out = _check_value(output, out_t, f"task {name!r} example {k} output")
        checked.append(Example(ins, out))

    return Task(
        name=name,
        dsl_name=dsl_name,
        primitive_set=ps,
        input_signature=signature,
        examples=tuple(checked),
        output_type=output_type,
        constants=tuple(constants),
        allowed_functions=allowed,
        oracle=oracle,
    )


def fitness(
    program: ProgramTree,
    task: Task,
    counter: Optional[EvalCounter] = None,
) -> Score:
    """Mean similarity over the task's examples, paired with program size."""
    if counter is not None:
        counter.bump()
    compiled = compile_program(program)
    sim = task.similarity
    total = 0.0
    for ex in task.examples:
        total += sim(ex.output, compiled.run(ex.inputs))
    return Score(total / len(task.examples), program.size)
