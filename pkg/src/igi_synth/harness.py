"""Campaign plumbing shared by the CLI: algorithm registry, config building
from key=value overrides, result/trace files, summary statistics, sweeps.

Result JSON and trace CSV files are written atomically (temp file + rename)
so parallel workers never leave torn files.  A result file echoes the full
resolved configuration and seed, which is enough to reproduce the run.
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Callable, Optional

from .baselines import (
    GpParams,
    MhParams,
    SaParams,
    SihcParams,
    run_gp,
    run_mh,
    run_sa,
    run_sihc,
)
from .bench import load_task
from .fitness import Task
from .igi import Budget, IgiConfig, LgpParams, RunResult, SbsParams, run_igi, write_trace_csv

ALGORITHM_NAMES = ("igi-sbs", "igi-lgp", "mh", "gp", "sihc", "sa")

_BASELINE_PARAMS = {"mh": MhParams, "gp": GpParams, "sihc": SihcParams, "sa": SaParams}
_BASELINE_RUNNERS = {"mh": run_mh, "gp": run_gp, "sihc": run_sihc, "sa": run_sa}


def _coerce(raw: str, like) -> object:
    """Parse a string override to the type of the field's default value."""
    if isinstance(like, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def _apply_params(obj, params: dict[str, str], consumed: set[str]) -> None:
    names = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    for key, raw in params.items():
        if key in names and not dataclasses.is_dataclass(names[key]):
            setattr(obj, key, _coerce(raw, names[key]) if isinstance(raw, str) else raw)
            consumed.add(key)


def build_config(algorithm: str, params: Optional[dict] = None) -> object:
    """Instantiate the algorithm's config with key=value overrides applied."""
    params = dict(params or {})
    consumed: set[str] = set()
    if algorithm in ("igi-sbs", "igi-lgp"):
        inner = SbsParams() if algorithm == "igi-sbs" else LgpParams()
        cfg = IgiConfig(inner=inner)
        _apply_params(inner, params, consumed)
        _apply_params(cfg, params, consumed)
    elif algorithm in _BASELINE_PARAMS:
        cfg = _BASELINE_PARAMS[algorithm]()
        _apply_params(cfg, params, consumed)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHM_NAMES}")
    unknown = set(params) - consumed
    if unknown:
        raise ValueError(f"unknown parameters for {algorithm}: {sorted(unknown)}")
    return cfg


def config_echo(algorithm: str, cfg) -> dict:
    """Flat parameter dict (inner search fields included) for result files."""
    if isinstance(cfg, IgiConfig):
        flat = dataclasses.asdict(cfg.inner)
        flat.update(
            {
                f.name: getattr(cfg, f.name)
                for f in dataclasses.fields(cfg)
                if f.name != "inner"
            }
        )
        return flat
    return dataclasses.asdict(cfg)


def run_synthesis(
    algorithm: str,
    task: Task,
    seed: int,
    budget: Budget,
    params: Optional[dict] = None,
    observer=None,
) -> tuple[RunResult, dict]:
    """Run one algorithm on one task; returns the result and the config echo."""
    cfg = build_config(algorithm, params)
    if algorithm in ("igi-sbs", "igi-lgp"):
        result = run_igi(task, cfg, seed=seed, budget=budget, observer=observer)
    else:
        result = _BASELINE_RUNNERS[algorithm](
            task, cfg, seed=seed, budget=budget, observer=observer
        )
    return result, config_echo(algorithm, cfg)


# ---------------------------------------------------------------------------
# Result files


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", name)


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


@dataclass
class Job:
    """One synthesis run to execute, serializable for worker processes."""

    algorithm: str
    task_file: str
    seed: int
    out_dir: str
    timeout_s: Optional[float] = None
    max_evals: Optional[int] = None
    params: Optional[dict] = None

    def result_stem(self) -> str:
        task_stem = _safe_name(Path(self.task_file).stem)
        return f"{task_stem}__{self.algorithm}__s{self.seed}"


def execute_job(job: Job) -> dict:
    task = load_task(job.task_file)
    budget = Budget(max_seconds=job.timeout_s, max_evals=job.max_evals)
    result, echo = run_synthesis(job.algorithm, task, job.seed, budget, job.params)
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = job.result_stem()
    trace_name = f"{stem}__trace.csv"

    tmp_trace = out_dir / f"{trace_name}.tmp{os.getpid()}"
    write_trace_csv(tmp_trace, result.trace)
    os.replace(tmp_trace, out_dir / trace_name)

    record = {
        "algorithm": job.algorithm,
        "task": task.name,
        "task_file": str(job.task_file),
        "seed": job.seed,
        "budget": {"timeout_s": job.timeout_s, "max_evals": job.max_evals},
        "config": echo,
        "solved": result.solved,
        "best_fitness": result.best_score.fitness,
        "best_size": result.best_score.size,
        "best_program": result.best_program.to_prefix(),
        "evaluations": result.evaluations,
        "wall_time_s": result.wall_time_s,
        "trace_file": trace_name,
    }
    atomic_write_text(out_dir / f"{stem}.json", json.dumps(record, indent=2) + "\n")
    return record


def execute_jobs(jobs: list[Job], workers: int = 1) -> list[dict]:
    """Run jobs serially or in parallel worker processes; order preserved."""
    if workers <= 1 or len(jobs) <= 1:
        return [execute_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(execute_job, jobs))


# ---------------------------------------------------------------------------
# Summaries


SUMMARY_FIELDS = (
    "total_solved",
    "fastest_solved",
    "smallest_solved",
    "avg_time_s",
    "median_time_s",
    "avg_size",
    "median_size",
)


def load_results(results_dir) -> list[dict]:
    paths = sorted(Path(results_dir).glob("*.json"))
    records = []
    for p in paths:
        try:
            rec = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise ValueError(f"{p}: not valid JSON: {e}") from None
        if isinstance(rec, dict) and "algorithm" in rec and "task" in rec:
            records.append(rec)
    if not records:
        raise ValueError(f"no result files under {results_dir}")
    return records


def summarize(records: list[dict]) -> dict[str, dict]:
    """Per-algorithm campaign statistics over a shared task set.

    Tied minima for fastest/smallest credit every algorithm that attains
    them.  Time and size averages cover solved runs only.
    """
    by_algo: dict[str, dict[str, dict]] = {}
    for rec in records:
        algo, task = rec["algorithm"], rec["task"]
        seen = by_algo.setdefault(algo, {})
        if task in seen:
            raise ValueError(f"duplicate result for algorithm {algo!r} on task {task!r}")
        seen[task] = rec

    task_sets = {algo: frozenset(recs) for algo, recs in by_algo.items()}
    reference = next(iter(task_sets.values()))
    for algo, tasks in task_sets.items():
        if tasks != reference:
            raise ValueError(
                "result files do not share one task set: "
                f"{algo} differs ({sorted(tasks ^ reference)})"
            )

    stats: dict[str, dict] = {}
    for algo, recs in by_algo.items():
        solved = [r for r in recs.values() if r["solved"]]
        times = [r["wall_time_s"] for r in solved]
        sizes = [r["best_size"] for r in solved]
        stats[algo] = {
            "total_solved": len(solved),
            "fastest_solved": 0,
            "smallest_solved": 0,
            "avg_time_s": statistics.mean(times) if times else None,
            "median_time_s": statistics.median(times) if times else None,
            "avg_size": statistics.mean(sizes) if sizes else None,
            "median_size": statistics.median(sizes) if sizes else None,
        }

    for task in reference:
        solvers = [algo for algo in by_algo if by_algo[algo][task]["solved"]]
        if not solvers:
            continue
        best_time = min(by_algo[a][task]["wall_time_s"] for a in solvers)
        best_size = min(by_algo[a][task]["best_size"] for a in solvers)
        for a in solvers:
            if by_algo[a][task]["wall_time_s"] == best_time:
                stats[a]["fastest_solved"] += 1
            if by_algo[a][task]["best_size"] == best_size:
                stats[a]["smallest_solved"] += 1
    return stats


def solve_curves(records: list[dict]) -> dict[str, dict[str, list[tuple]]]:
    """Cumulative solved counts per algorithm, by time and by evaluations."""
    curves: dict[str, dict[str, list[tuple]]] = {}
    by_algo: dict[str, list[dict]] = {}
    for rec in records:
        by_algo.setdefault(rec["algorithm"], []).append(rec)
    for algo, recs in by_algo.items():
        solved = [r for r in recs if r["solved"]]
        times = sorted(r["wall_time_s"] for r in solved)
        evals = sorted(r["evaluations"] for r in solved)
        curves[algo] = {
            "time": [(t, i + 1) for i, t in enumerate(times)],
            "evals": [(e, i + 1) for i, e in enumerate(evals)],
        }
    return curves


def write_summary(records: list[dict], out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats = summarize(records)
    lines = ["algorithm," + ",".join(SUMMARY_FIELDS)]
    for algo in sorted(stats):
        row = [algo]
        for f in SUMMARY_FIELDS:
            v = stats[algo][f]
            row.append("" if v is None else (f"{v:.6f}" if isinstance(v, float) else str(v)))
        lines.append(",".join(row))
    summary_path = out / "summary.csv"
    atomic_write_text(summary_path, "\n".join(lines) + "\n")

    for algo, series in solve_curves(records).items():
        for kind, rows in series.items():
            col = "time_s" if kind == "time" else "evaluations"
            body = [f"{col},solved"]
            body.extend(
                f"{x:.6f},{k}" if kind == "time" else f"{x},{k}" for x, k in rows
            )
            atomic_write_text(
                out / f"solve_curve_{kind}__{_safe_name(algo)}.csv", "\n".join(body) + "\n"
            )
    return summary_path


# ---------------------------------------------------------------------------
# Parameter sweeps


def sweep_grid(grid: dict[str, list[str]]) -> list[dict[str, str]]:
    """Cartesian product in grid order (first key varies slowest)."""
    if not grid:
        return [{}]
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in product(*(grid[k] for k in keys))]


def run_sweep(
    algorithm: str,
    task_files: list[str],
    grid: dict[str, list[str]],
    reps: int,
    out_dir,
    base_seed: int = 0,
    timeout_s: Optional[float] = None,
    max_evals: Optional[int] = None,
    workers: int = 1,
) -> dict:
    """Grid search: rank combos per task by mean best fitness over reps,
    select the combo with the lowest average rank (grid order breaks ties)."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    combos = sweep_grid(grid)
    for combo in combos:
        build_config(algorithm, combo)  # fail fast on bad names/values
    out = Path(out_dir)
    runs_dir = out / "runs"
    jobs: list[Job] = []
    index: list[tuple[int, str, int]] = []  # (combo idx, task file, rep)
    for ci, combo in enumerate(combos):
        for tf in task_files:
            for rep in range(reps):
                job_dir = runs_dir / f"combo{ci:03d}" / f"rep{rep}"
                jobs.append(
                    Job(
                        algorithm=algorithm,
                        task_file=str(tf),
                        seed=base_seed + rep,
                        out_dir=str(job_dir),
                        timeout_s=timeout_s,
                        max_evals=max_evals,
                        params=combo,
                    )
                )
                index.append((ci, str(tf), rep))

    records = execute_jobs(jobs, workers)

    mean_fitness: dict[tuple[int, str], float] = {}
    for ci, _combo in enumerate(combos):
        for tf in task_files:
            fits = [
                rec["best_fitness"]
                for rec, (cj, tj, _r) in zip(records, index)
                if cj == ci and tj == str(tf)
            ]
            mean_fitness[(ci, str(tf))] = statistics.mean(fits)

    # competition ranking per task: rank = 1 + number of strictly better combos
    avg_rank: list[float] = []
    for ci in range(len(combos)):
        ranks = []
        for tf in task_files:
            mine = mean_fitness[(ci, str(tf))]
            better = sum(
                1 for cj in range(len(combos)) if mean_fitness[(cj, str(tf))] > mine
            )
            ranks.append(1 + better)
        avg_rank.append(statistics.mean(ranks))

    best_rank = min(avg_rank)
    winner = avg_rank.index(best_rank)  # first in grid order on ties
    tied = avg_rank.count(best_rank) > 1

    report = {
        "algorithm": algorithm,
        "grid": grid,
        "reps": reps,
        "base_seed": base_seed,
        "tasks": [str(t) for t in task_files],
        "selected": combos[winner],
        "selected_index": winner,
        "tie": tied,
        "ranking": [
            {
                "params": combos[ci],
                "avg_rank": avg_rank[ci],
                "mean_fitness": {
                    str(tf): mean_fitness[(ci, str(tf))] for tf in task_files
                },
            }
            for ci in sorted(range(len(combos)), key=lambda c: (avg_rank[c], c))
        ],
    }
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "sweep.json", json.dumps(report, indent=2) + "\n")
    return report
