import dataclasses
import random
from pathlib import Path

import pytest

from igi_synth import SemType, builtin_primitive_set, make_task, parse_prefix

REPO_ROOT = Path(__file__).resolve().parent.parent
TASKS_DIR = REPO_ROOT / "tasks"

# The reference task used throughout: "add the two inputs unless they are
# equal, in which case answer 0", specified by four examples.
TOY_EXAMPLES = [((3, 3), 0), ((2, 5), 7), ((8, 1), 9), ((6, 6), 0)]
TOY_SOLUTION = "ITE(EQ(IN0,IN1),0,ADD(IN0,IN1))"


@pytest.fixture(scope="session")
def tasks_dir() -> Path:
    return TASKS_DIR


@pytest.fixture()
def toy_task():
    task = make_task(
        name="add-or-zero",
        dsl_name="toy",
        input_signature=(SemType.INTEGER, SemType.INTEGER),
        examples=TOY_EXAMPLES,
        constants=[0],
    )
    return dataclasses.replace(
        task, oracle=parse_prefix(TOY_SOLUTION, task.primitive_set)
    )


@pytest.fixture()
def toy_solution(toy_task):
    return parse_prefix(TOY_SOLUTION, toy_task.primitive_set)


@pytest.fixture()
def toy_ps():
    return builtin_primitive_set("toy", (0,), None).with_inputs(
        (SemType.INTEGER, SemType.INTEGER)
    )


@pytest.fixture()
def lm_ps():
    return builtin_primitive_set("dsl-lm", (0, 1), None).with_inputs(
        (SemType.INT_ARRAY, SemType.INTEGER)
    )


@pytest.fixture()
def st_ps():
    return builtin_primitive_set("dsl-st", ("", " ", 0), None).with_inputs(
        (SemType.STRING, SemType.STRING)
    )


def random_env(ps, rng: random.Random, str_len: int = 8) -> tuple:
    """A well-typed input environment for the set's declared inputs."""
    alphabet = "abc 019-"
    values = []
    for p in sorted(ps.terminals, key=lambda p: p.input_index):
        if p.input_index < 0:
            continue
        t = p.return_type
        if t is SemType.INTEGER:
            values.append(rng.randrange(-300, 301))
        elif t is SemType.INT_ARRAY:
            values.append(
                tuple(rng.randrange(-300, 301) for _ in range(rng.randrange(0, 6)))
            )
        elif t is SemType.STRING:
            values.append(
                "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, str_len)))
            )
        elif t is SemType.BOOLEAN:
            values.append(rng.random() < 0.5)
    return tuple(values)
