"""Benchmark generation, holdout evaluation, and the task file format.

Generated tasks are list-language problems defined by a random oracle
program.  Inputs are drawn from three fixed signatures; an example is kept
only when the oracle's output is usable (non-NULL, integers within the
configured range, arrays nonempty).  A holdout set is a fresh batch of valid
examples whose inputs never appear in training.

Task files are JSON with typed constants and a prefix-notation oracle, e.g.
``ITE(EQ(IN0,IN1),0,ADD(IN0,IN1))``.
"""

from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .dsl import (
    NULL,
    PrimitiveKind,
    ProgramTree,
    SemType,
    Value,
    builtin_primitive_set,
    parse_prefix,
    random_tree_of_size,
    type_check,
)
from .fitness import Example, Task, make_task, sim_exact
from .interpreter import compile_program

INPUT_SIGNATURES: tuple[tuple[SemType, ...], ...] = (
    (SemType.INT_ARRAY,),
    (SemType.INT_ARRAY, SemType.INT_ARRAY),
    (SemType.INT_ARRAY, SemType.INTEGER),
)

ORACLE_OUTPUT_TYPES = (SemType.INTEGER, SemType.INT_ARRAY)


@dataclass
class GenSpec:
    oracle_size_min: int = 10
    oracle_size_max: int = 15
    num_examples: int = 100
    max_list_length: int = 20
    value_min: int = -255
    value_max: int = 255
    example_attempts: int = 5000  # input draws per oracle before discarding it
    oracle_attempts: int = 1000  # oracle draws before giving up

    def validate(self) -> None:
        if not 1 <= self.oracle_size_min <= self.oracle_size_max:
            raise ValueError("bad oracle size range")
        if self.num_examples < 1 or self.max_list_length < 1:
            raise ValueError("num_examples and max_list_length must be >= 1")
        if self.value_min > self.value_max:
            raise ValueError("bad value range")
        if self.example_attempts < 1 or self.oracle_attempts < 1:
            raise ValueError("attempt limits must be >= 1")


def _draw_inputs(
    signature: tuple[SemType, ...], spec: GenSpec, rng: random.Random
) -> tuple[Value, ...]:
    vals: list[Value] = []
    for t in signature:
        if t is SemType.INT_ARRAY:
            length = rng.randint(1, spec.max_list_length)
            vals.append(tuple(rng.randint(spec.value_min, spec.value_max) for _ in range(length)))
        else:
            vals.append(rng.randint(spec.value_min, spec.value_max))
    return tuple(vals)


def _output_ok(out: Value, spec: GenSpec) -> bool:
    if out is NULL:
        return False
    if isinstance(out, bool):
        return True
    if isinstance(out, int):
        return spec.value_min <= out <= spec.value_max
    if isinstance(out, tuple):
        return bool(out) and all(spec.value_min <= v <= spec.value_max for v in out)
    return True


def generate_benchmark(
    name: str,
    spec: Optional[GenSpec] = None,
    rng: Optional[random.Random] = None,
) -> Task:
    """Random oracle plus a full example set; oracles that cannot produce
    enough valid examples are discarded and redrawn."""
    s = spec if spec is not None else GenSpec()
    s.validate()
    rng = rng if rng is not None else random.Random(0)
    base = builtin_primitive_set("dsl-lm")
    for _ in range(s.oracle_attempts):
        signature = INPUT_SIGNATURES[rng.randrange(len(INPUT_SIGNATURES))]
        ps = base.with_inputs(signature)
        out_type = ORACLE_OUTPUT_TYPES[rng.randrange(2)]
        size = rng.randint(s.oracle_size_min, s.oracle_size_max)
        oracle = random_tree_of_size(ps, out_type, size, rng)
        if oracle is None:
            continue
        if not any(n.primitive.kind is PrimitiveKind.INPUT for n in oracle.nodes()):
            continue  # oracle must read at least one input
        compiled = compile_program(oracle)
        examples: list[tuple[tuple[Value, ...], Value]] = []
        seen: set[tuple[Value, ...]] = set()
        for _ in range(s.example_attempts):
            if len(examples) == s.num_examples:
                break
            inputs = _draw_inputs(signature, s, rng)
            if inputs in seen:
                continue
            out = compiled.run(inputs)
            if not _output_ok(out, s):
                continue
            seen.add(inputs)
            examples.append((inputs, out))
        if len(examples) == s.num_examples:
            return make_task(name, "dsl-lm", signature, examples, oracle=oracle)
    raise RuntimeError(
        f"no viable oracle for {name!r} after {s.oracle_attempts} attempts"
    )


def generate_holdout(
    task: Task,
    n: int,
    rng: random.Random,
    spec: Optional[GenSpec] = None,
) -> tuple[Example, ...]:
    """Fresh valid examples whose inputs are disjoint from training inputs."""
    if task.oracle is None:
        raise ValueError(f"task {task.name!r} has no oracle; cannot build a holdout set")
    if n == 0:
        return ()
    s = spec if spec is not None else GenSpec()
    compiled = compile_program(task.oracle)
    seen: set[tuple[Value, ...]] = {ex.inputs for ex in task.examples}
    out: list[Example] = []
    attempts = max(s.example_attempts, 100 * n)
    for _ in range(attempts):
        if len(out) == n:
            break
        inputs = _draw_inputs(task.input_signature, s, rng)
        if inputs in seen:
            continue
        value = compiled.run(inputs)
        if not _output_ok(value, s):
            continue
        seen.add(inputs)
        out.append(Example(inputs, value))
    if len(out) < n:
        raise RuntimeError(
            f"could not draw {n} holdout examples for {task.name!r} ({len(out)} found)"
        )
    return tuple(out)


def check_generalization(program: ProgramTree, holdout: Sequence[Example]) -> float:
    """Fraction of holdout examples reproduced exactly; 1.0 means it generalizes."""
    if not holdout:
        raise ValueError("empty holdout set")
    compiled = compile_program(program)
    hits = sum(sim_exact(ex.output, compiled.run(ex.inputs)) for ex in holdout)
    return hits / len(holdout)


# ---------------------------------------------------------------------------
# Task file format


def _value_to_json(v: Value):
    if isinstance(v, tuple):
        return list(v)
    return v


def _json_to_value(raw, t: SemType, where: str) -> Value:
    if t is SemType.INTEGER:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ValueError(f"{where}: expected an integer, got {raw!r}")
        return raw
    if t is SemType.BOOLEAN:
        if not isinstance(raw, bool):
            raise ValueError(f"{where}: expected a boolean, got {raw!r}")
        return raw
    if t is SemType.STRING:
        if not isinstance(raw, str):
            raise ValueError(f"{where}: expected a string, got {raw!r}")
        return raw
    if not isinstance(raw, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in raw):
        raise ValueError(f"{where}: expected an array of integers, got {raw!r}")
    return tuple(raw)


def _infer_type(raw, where: str) -> SemType:
    if isinstance(raw, bool):
        return SemType.BOOLEAN
    if isinstance(raw, int):
        return SemType.INTEGER
    if isinstance(raw, str):
        return SemType.STRING
    if isinstance(raw, list):
        return SemType.INT_ARRAY
    raise ValueError(f"{where}: {raw!r} is not a representable value")


def _sem_type(name, where: str) -> SemType:
    try:
        return SemType(name)
    except ValueError:
        raise ValueError(
            f"{where}: unknown type name {name!r}; expected one of "
            f"{[t.value for t in SemType]}"
        ) from None


def task_to_dict(task: Task) -> dict:
    return {
        "name": task.name,
        "dsl": task.dsl_name,
        "allowed_functions": list(task.allowed_functions)
        if task.allowed_functions is not None
        else None,
        "constants": [
            {"type": _infer_type(_value_to_json(c), "constant").value, "value": _value_to_json(c)}
            for c in task.constants
        ],
        "input_signature": [t.value for t in task.input_signature],
        "examples": [
            {
                "inputs": [_value_to_json(v) for v in ex.inputs],
                "output": _value_to_json(ex.output),
            }
            for ex in task.examples
        ],
        "oracle": task.oracle.to_prefix() if task.oracle is not None else None,
    }


def task_from_dict(data: dict, where: str = "task") -> Task:
    if not isinstance(data, dict):
        raise ValueError(f"{where}: expected a JSON object")
    for key in ("name", "dsl", "input_signature", "examples"):
        if key not in data:
            raise ValueError(f"{where}: missing field {key!r}")
    name = data["name"]
    dsl_name = data["dsl"]
    signature = tuple(
        _sem_type(t, f"{where}: input_signature[{i}]")
        for i, t in enumerate(data["input_signature"])
    )
    constants: list[Value] = []
    for i, c in enumerate(data.get("constants") or []):
        if not isinstance(c, dict) or "type" not in c or "value" not in c:
            raise ValueError(f"{where}: constants[{i}] needs 'type' and 'value'")
        t = _sem_type(c["type"], f"{where}: constants[{i}]")
        constants.append(_json_to_value(c["value"], t, f"{where}: constants[{i}]"))
    allowed = data.get("allowed_functions")
    if allowed is not None:
        allowed = tuple(allowed)

    examples = []
    for i, ex in enumerate(data["examples"]):
        if not isinstance(ex, dict) or "inputs" not in ex or "output" not in ex:
            raise ValueError(f"{where}: examples[{i}] needs 'inputs' and 'output'")
        raw_inputs = ex["inputs"]
        if not isinstance(raw_inputs, list) or len(raw_inputs) != len(signature):
            raise ValueError(
                f"{where}: examples[{i}] has {len(raw_inputs) if isinstance(raw_inputs, list) else '?'} "
                f"inputs, signature wants {len(signature)}"
            )
        inputs = tuple(
            _json_to_value(v, t, f"{where}: examples[{i}].inputs[{j}]")
            for j, (v, t) in enumerate(zip(raw_inputs, signature))
        )
        out_t = _infer_type(ex["output"], f"{where}: examples[{i}].output")
        output = _json_to_value(ex["output"], out_t, f"{where}: examples[{i}].output")
        examples.append((inputs, output))

    task = make_task(name, dsl_name, signature, examples, constants, allowed)

    oracle_text = data.get("oracle")
    if oracle_text is not None:
        oracle = parse_prefix(oracle_text, task.primitive_set)
        problems = type_check(oracle, task.primitive_set)
        if problems:
            raise ValueError(f"{where}: oracle is ill-typed: {problems[0]}")
        if oracle.return_type is not task.output_type:
            raise ValueError(
                f"{where}: oracle returns {oracle.return_type.value}, "
                f"examples have {task.output_type.value} outputs"
            )
        task = dataclasses.replace(task, oracle=oracle)
    return task


def save_task(task: Task, path) -> None:
    with open(path, "w") as fh:
        json.dump(task_to_dict(task), fh, indent=2)
        fh.write("\n")


def load_task(path) -> Task:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: not valid JSON: {e}") from None
    return task_from_dict(data, where=str(path))
