"""Command-line interface.

Verbs:
  run        synthesize one task with one algorithm; write result + trace
  gen-bench  generate random list-manipulation benchmark tasks
  holdout    score a result's program on freshly generated examples
  summarize  aggregate a directory of result files into summary tables
  sweep      grid-search algorithm parameters over a task set
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bench import (
    GenSpec,
    check_generalization,
    generate_benchmark,
    generate_holdout,
    load_task,
    save_task,
)
from .dsl import parse_prefix
from .harness import (
    ALGORITHM_NAMES,
    Job,
    atomic_write_text,
    execute_job,
    load_results,
    run_sweep,
    summarize,
    write_summary,
)
from .igi import Budget

import random


def _default_seed() -> int:
    raw = os.environ.get("IGI_SYNTH_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"IGI_SYNTH_SEED must be an integer, got {raw!r}")


def _parse_params(pairs: list[str]) -> dict[str, str]:
    params: dict[str, str] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"--param expects name=value, got {pair!r}")
        key, value = pair.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def _parse_grid(pairs: list[str]) -> dict[str, list[str]]:
    grid: dict[str, list[str]] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"--grid expects name=v1,v2,..., got {pair!r}")
        key, values = pair.split("=", 1)
        items = [v.strip() for v in values.split(",") if v.strip()]
        if not items:
            raise SystemExit(f"--grid {key}: no values given")
        grid[key.strip()] = items
    return grid


def _cmd_run(args) -> int:
    if args.timeout is None and args.max_evals is None:
        raise SystemExit("run: give --timeout and/or --max-evals")
    job = Job(
        algorithm=args.algo,
        task_file=args.task,
        seed=args.seed,
        out_dir=args.out,
        timeout_s=args.timeout,
        max_evals=args.max_evals,
        params=_parse_params(args.param),
    )
    try:
        record = execute_job(job)
    except (ValueError, FileNotFoundError) as e:
        raise SystemExit(f"run: {e}")
    print(
        f"task={record['task']} algo={record['algorithm']} seed={record['seed']} "
        f"solved={record['solved']} fitness={record['best_fitness']:.6f} "
        f"size={record['best_size']} evals={record['evaluations']} "
        f"time={record['wall_time_s']:.2f}s"
    )
    print(f"result: {Path(args.out) / (job.result_stem() + '.json')}")
    return 0


def _cmd_gen_bench(args) -> int:
    spec = GenSpec(
        num_examples=args.examples,
        oracle_size_min=args.size_min,
        oracle_size_max=args.size_max,
    )
    try:
        spec.validate()
    except ValueError as e:
        raise SystemExit(f"gen-bench: {e}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    master = random.Random(args.seed)
    task_seeds = [master.randrange(2**63) for _ in range(args.count)]
    for i in range(args.count):
        name = f"{args.prefix}{i:03d}"
        rng = random.Random(task_seeds[i])
        try:
            task = generate_benchmark(name, spec=spec, rng=rng)
        except RuntimeError as e:
            raise SystemExit(f"gen-bench: {name}: {e}")
        path = out / f"{name}.json"
        save_task(task, path)
        print(f"{path}  oracle={task.oracle.to_prefix()}")
    return 0


def _cmd_holdout(args) -> int:
    try:
        task = load_task(args.task)
    except (ValueError, FileNotFoundError) as e:
        raise SystemExit(f"holdout: {e}")
    try:
        record = json.loads(Path(args.result).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SystemExit(f"holdout: cannot read result file: {e}")
    try:
        program = parse_prefix(record["best_program"], task.primitive_set)
    except (KeyError, ValueError) as e:
        raise SystemExit(f"holdout: bad result file: {e}")
    rng = random.Random(args.seed)
    try:
        examples = generate_holdout(task, args.count, rng)
    except (ValueError, RuntimeError) as e:
        raise SystemExit(f"holdout: {e}")
    score = check_generalization(program, examples)
    report = {
        "task": task.name,
        "result_file": str(args.result),
        "holdout_examples": len(examples),
        "holdout_seed": args.seed,
        "generalization": score,
    }
    if args.out:
        atomic_write_text(Path(args.out), json.dumps(report, indent=2) + "\n")
    print(f"task={task.name} holdout={len(examples)} generalization={score:.6f}")
    return 0


def _cmd_summarize(args) -> int:
    try:
        records = load_results(args.results)
        path = write_summary(records, args.out)
    except ValueError as e:
        raise SystemExit(f"summarize: {e}")
    stats = summarize(records)
    for algo in sorted(stats):
        s = stats[algo]
        print(
            f"{algo}: solved={s['total_solved']} fastest={s['fastest_solved']} "
            f"smallest={s['smallest_solved']}"
        )
    print(f"summary: {path}")
    return 0


def _cmd_sweep(args) -> int:
    if args.timeout is None and args.max_evals is None:
        raise SystemExit("sweep: give --timeout and/or --max-evals")
    grid = _parse_grid(args.grid)
    try:
        report = run_sweep(
            algorithm=args.algo,
            task_files=args.task,
            grid=grid,
            reps=args.reps,
            out_dir=args.out,
            base_seed=args.seed,
            timeout_s=args.timeout,
            max_evals=args.max_evals,
            workers=args.jobs,
        )
    except (ValueError, FileNotFoundError) as e:
        raise SystemExit(f"sweep: {e}")
    tie = " (tie, first in grid order)" if report["tie"] else ""
    print(f"selected: {report['selected']}{tie}")
    print(f"report: {Path(args.out) / 'sweep.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igi-synth",
        description="Stochastic program synthesis over typed expression DSLs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    seed_default = _default_seed()

    p = sub.add_parser("run", help="run one synthesis job")
    p.add_argument("--algo", required=True, choices=ALGORITHM_NAMES)
    p.add_argument("--task", required=True, help="task JSON file")
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--timeout", type=float, default=None, help="wall-clock budget in seconds")
    p.add_argument("--max-evals", type=int, default=None, help="fitness evaluation budget")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument(
        "--param",
        action="append",
        metavar="NAME=VALUE",
        help="algorithm parameter override (repeatable)",
    )
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("gen-bench", help="generate benchmark tasks")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default="tasks", help="output directory")
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--prefix", default="bench-", help="task name prefix")
    p.add_argument("--examples", type=int, default=100)
    p.add_argument("--size-min", type=int, default=5)
    p.add_argument("--size-max", type=int, default=8)
    p.set_defaults(func=_cmd_gen_bench)

    p = sub.add_parser("holdout", help="score a solved run on fresh examples")
    p.add_argument("--task", required=True, help="task JSON file (must carry an oracle)")
    p.add_argument("--result", required=True, help="result JSON from `run`")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--out", default=None, help="optional report JSON path")
    p.set_defaults(func=_cmd_holdout)

    p = sub.add_parser("summarize", help="aggregate result files")
    p.add_argument("--results", required=True, help="directory of result JSON files")
    p.add_argument("--out", default="summary", help="output directory")
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("sweep", help="parameter grid search")
    p.add_argument("--algo", required=True, choices=ALGORITHM_NAMES)
    p.add_argument("--task", required=True, action="append", help="task JSON (repeatable)")
    p.add_argument(
        "--grid",
        action="append",
        metavar="NAME=V1,V2",
        help="parameter values to sweep (repeatable)",
    )
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--max-evals", type=int, default=None)
    p.add_argument("--out", default="sweep", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
