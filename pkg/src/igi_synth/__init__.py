"""Stochastic program synthesis over typed expression DSLs.

The package synthesizes small functional programs from input/output
examples.  The primary algorithm alternates random perturbation with
chained improvement epochs, where each epoch searches over patches
(sequences of single-node edits) rather than whole programs.  Four
classic single-program searches are included as baselines.
"""

import sys as _sys

# Tree builders and the interpreter recurse over program structure; random
# programs near the depth cap (30) are fine, but parser/type-checker stress
# tests on deliberately deep inputs need more headroom than the default.
if _sys.getrecursionlimit() < 20_000:
    _sys.setrecursionlimit(20_000)

from .baselines import (
    GpParams,
    MhParams,
    SaParams,
    SihcParams,
    mh_acceptance_probability,
    run_gp,
    run_mh,
    run_sa,
    run_sihc,
    sa_acceptance_probability,
)
from .bench import (
    GenSpec,
    check_generalization,
    generate_benchmark,
    generate_holdout,
    load_task,
    save_task,
    task_from_dict,
    task_to_dict,
)
from .dsl import (
    DSL_NAMES,
    NULL,
    PrimitiveSet,
    ProgramTree,
    SemType,
    builtin_primitive_set,
    parse_prefix,
    random_tree_of_size,
    random_tree_ramped,
    type_check,
)
from .fitness import Example, Score, Task, fitness, levenshtein, make_task, sim_levenshtein
from .igi import (
    Budget,
    IgiConfig,
    LgpParams,
    RunResult,
    SbsParams,
    run_igi,
    sample_initial_patch_length,
    write_trace_csv,
)
from .interpreter import EvalCounter, compile_program, evaluate
from .patch import (
    Deletion,
    Insertion,
    Patch,
    Replacement,
    apply_patch,
    format_patch,
    random_edit,
)

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "Deletion",
    "DSL_NAMES",
    "EvalCounter",
    "Example",
    "GenSpec",
    "GpParams",
    "IgiConfig",
    "Insertion",
    "LgpParams",
    "MhParams",
    "NULL",
    "Patch",
    "PrimitiveSet",
    "ProgramTree",
    "Replacement",
    "RunResult",
    "SaParams",
    "SbsParams",
    "Score",
    "SemType",
    "SihcParams",
    "Task",
    "apply_patch",
    "builtin_primitive_set",
    "check_generalization",
    "compile_program",
    "evaluate",
    "fitness",
    "format_patch",
    "generate_benchmark",
    "generate_holdout",
    "levenshtein",
    "load_task",
    "make_task",
    "mh_acceptance_probability",
    "parse_prefix",
    "random_edit",
    "random_tree_of_size",
    "random_tree_ramped",
    "run_gp",
    "run_igi",
    "run_mh",
    "run_sa",
    "run_sihc",
    "sa_acceptance_probability",
    "sample_initial_patch_length",
    "save_task",
    "sim_levenshtein",
    "task_from_dict",
    "task_to_dict",
    "type_check",
    "write_trace_csv",
]
