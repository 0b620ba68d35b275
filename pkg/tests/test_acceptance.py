"""Acceptance suite: eleven end-to-end checks, one per shipped guarantee.

Each test prints a single ``CRITERION nn: PASS/FAIL`` line.  The two
experiment-scale checks (solve counts and generalization) share one module-
scoped campaign — thirty generated list-manipulation tasks, six algorithms,
120 s per run — and together take a few CPU-hours; everything else finishes
in well under five minutes.  Deselect the slow pair with ``-m "not campaign"``
during development.
"""

import json
import math
import random
import time

import pytest

from igi_synth import (
    Budget,
    GenSpec,
    IgiConfig,
    LgpParams,
    SbsParams,
    check_generalization,
    fitness,
    generate_benchmark,
    generate_holdout,
    mh_acceptance_probability,
    parse_prefix,
    run_igi,
    sa_acceptance_probability,
    sample_initial_patch_length,
    sim_levenshtein,
    type_check,
)
from igi_synth.dsl import builtin_primitive_set, random_tree_ramped
from igi_synth.harness import ALGORITHM_NAMES, Job, execute_job
from igi_synth.interpreter import compile_program
from igi_synth.patch import Patch, apply_edit, apply_patch, initial_state, random_edit
from igi_synth.bench import save_task

from conformance_cases import ALL_CASES, LM_CASES, ST_CASES
from conftest import TOY_EXAMPLES, TOY_SOLUTION


def _report(n: int, ok: bool, detail: str) -> None:
    print(f"CRITERION {n:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {n}: {detail}"


def _values_equal(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    return type(a) is type(b) and a == b


# ---------------------------------------------------------------------------
# 1. interpreter conformance


def test_criterion_01_interpreter_conformance():
    start = time.perf_counter()
    failures = []
    covered = {"dsl-lm": set(), "dsl-st": set(), "toy": set()}
    for dsl, symbol, args, expected in ALL_CASES:
        ps = builtin_primitive_set(dsl)
        fn = ps.by_symbol[symbol]
        ps_in = ps.with_inputs(fn.arg_types)
        call = f"{symbol}({','.join(f'IN{i}' for i in range(len(args)))})"
        out = compile_program(parse_prefix(call, ps_in)).run(tuple(args))
        if not _values_equal(out, expected):
            failures.append((dsl, symbol, args, expected, out))
        covered[dsl].add(symbol)
    elapsed = time.perf_counter() - start
    lm = {f.symbol for f in builtin_primitive_set("dsl-lm").functions}
    st = {f.symbol for f in builtin_primitive_set("dsl-st").functions}
    ok = (
        not failures
        and len(lm) == 38
        and len(st) == 16
        and covered["dsl-lm"] == lm
        and covered["dsl-st"] == st
        and elapsed < 1.0
    )
    _report(
        1,
        ok,
        f"{len(ALL_CASES)} hand-derived rows ({len(LM_CASES)} list, {len(ST_CASES)} string), "
        f"{len(failures)} failures, 38+16 functions covered, {elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# 2. reference-task reproduction


def test_criterion_02_reference_task(toy_task):
    program = parse_prefix(TOY_SOLUTION, toy_task.primitive_set)
    score = fitness(program, toy_task)
    solved = 0
    for seed in range(10):
        result = run_igi(toy_task, IgiConfig(), seed=seed, budget=Budget(max_seconds=10.0))
        if result.solved and result.wall_time_s <= 10.0:
            solved += 1
    ok = score.fitness == 1.0 and solved >= 9
    _report(
        2,
        ok,
        f"hand-written program fitness {score.fitness}, "
        f"beam search solved {solved}/10 seeds within 10s",
    )


# ---------------------------------------------------------------------------
# 3. edit type-safety


def test_criterion_03_edit_type_safety():
    start = time.perf_counter()
    setups = [
        ("toy", (0, 1), ("Integer", "Integer"), "Integer"),
        ("dsl-lm", (0, 1), ("IntArray", "Integer"), "IntArray"),
        ("dsl-st", ("", " ", 0), ("String", "String"), "String"),
    ]
    total, violations = 0, 0
    rng = random.Random(303)
    per_dsl = 100_000 // len(setups) + 1
    for dsl, consts, sig, root in setups:
        from igi_synth.dsl import SemType

        ps = builtin_primitive_set(dsl, constants=consts).with_inputs(
            tuple(SemType(s) for s in sig)
        )
        rt = SemType(root)
        while_count = 0
        while while_count < per_dsl:
            tree = random_tree_ramped(ps, rt, 2, 5, rng)
            for _ in range(10):
                if while_count >= per_dsl:
                    break
                edit = random_edit(tree, ps, rng)
                if edit is None:
                    continue
                patched = apply_patch(
                    tree, Patch((edit,), tree.size, tree.root.return_type)
                ).tree
                total += 1
                while_count += 1
                if type_check(patched, ps):
                    violations += 1
    elapsed = time.perf_counter() - start
    ok = total >= 100_000 and violations == 0 and elapsed < 120.0
    _report(3, ok, f"{total} random edits, {violations} type violations, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 4. patch determinism and the conflict law


def test_criterion_04_patch_determinism_and_conflicts():
    from igi_synth.dsl import SemType

    setups = [
        ("toy", (0, 1), ("Integer", "Integer"), "Integer"),
        ("dsl-lm", (0, 1), ("IntArray", "Integer"), "IntArray"),
        ("dsl-st", ("", " ", 0), ("String", "String"), "String"),
    ]
    rng = random.Random(404)
    pairs, violations = 0, 0
    per_dsl = 10_000 // len(setups) + 1
    for dsl, consts, sig, root in setups:
        ps = builtin_primitive_set(dsl, constants=consts).with_inputs(
            tuple(SemType(s) for s in sig)
        )
        rt = SemType(root)
        for _ in range(per_dsl):
            tree = random_tree_ramped(ps, rt, 2, 5, rng)
            state = initial_state(tree)
            edits, expect_disabled = [], set()
            for _ in range(rng.randrange(1, 5)):
                e = random_edit(state.tree, ps, rng)
                if e is None:
                    continue
                if not (e.target < tree.size and e.target in state.alive):
                    expect_disabled.add(len(edits))
                state = apply_edit(state, e)
                edits.append(e)
            patch = Patch(tuple(edits), tree.size, rt)
            first = apply_patch(tree, patch)
            second = apply_patch(tree, patch)
            pairs += 1
            if not (
                first.tree.structurally_equal(second.tree)
                and first.disabled == second.disabled
                and set(first.disabled) == expect_disabled
                and first.tree.structurally_equal(state.tree)
            ):
                violations += 1
    ok = pairs >= 10_000 and violations == 0
    _report(4, ok, f"{pairs} (base, patch) pairs replayed, {violations} violations")


# ---------------------------------------------------------------------------
# 5. edit-distance similarity vs an independent oracle


def _dp_edit_distance(a: str, b: str) -> int:
    rows = len(a) + 1
    cols = len(b) + 1
    d = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        d[i][0] = i
    for j in range(cols):
        d[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            sub = d[i - 1][j - 1] + (a[i - 1] != b[j - 1])
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, sub)
    return d[-1][-1]


def test_criterion_05_levenshtein_oracle():
    rng = random.Random(505)
    alphabet = "abcdefg 0123"
    worst = 0.0
    for _ in range(1000):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
        dist = _dp_edit_distance(a, b)
        expected = 1.0 if not a and not b else 1.0 - dist / max(len(a), len(b))
        worst = max(worst, abs(sim_levenshtein(a, b) - expected))
    kitten = sim_levenshtein("kitten", "sitting")
    ok = worst <= 1e-12 and abs(kitten - 4 / 7) <= 1e-12
    _report(
        5,
        ok,
        f"1000 random pairs, max deviation {worst:.1e}, "
        f"sim(kitten,sitting)={kitten:.6f} (want {4 / 7:.6f})",
    )


# ---------------------------------------------------------------------------
# 6. initial patch-length distribution


def test_criterion_06_initial_patch_lengths():
    rng = random.Random(606)
    n = 10_000
    mean = sum(sample_initial_patch_length(rng) for _ in range(n)) / n
    ok = abs(mean - 2.0) <= 0.1
    _report(6, ok, f"mean initial patch length {mean:.4f} over {n} draws (want 2.0 +/- 0.1)")


# ---------------------------------------------------------------------------
# 7. epoch monotonicity


class _Recorder:
    def __init__(self):
        self.events = []

    def __call__(self, kind, data):
        self.events.append((kind, data))

    def chains(self):
        chains, current = [], None
        for kind, data in self.events:
            if kind == "chain_start":
                current = [data["score"]]
            elif kind == "epoch_improved":
                current.append(data["score"])
            elif kind == "chain_end":
                chains.append(current)
                current = None
        return chains


def test_criterion_07_epoch_monotonicity():
    from igi_synth.fitness import strictly_better

    spec = GenSpec(oracle_size_min=5, oracle_size_max=8, num_examples=20)
    tasks = [generate_benchmark(f"mono-{i}", spec, random.Random(700 + i)) for i in range(10)]
    configs = [
        IgiConfig(inner=SbsParams(beam_width=8, successors=3, max_patch_len=2)),
        IgiConfig(inner=LgpParams(population=20, generations=2)),
    ]
    runs, epochs, violations = 0, 0, 0
    for t_i, task in enumerate(tasks):
        for seed in range(5):
            for c_i, cfg in enumerate(configs):
                rec = _Recorder()
                result = run_igi(
                    task, cfg, seed=1000 * c_i + 10 * t_i + seed,
                    budget=Budget(max_evals=2500), observer=rec,
                )
                runs += 1
                for chain in rec.chains():
                    for prev, cur in zip(chain, chain[1:]):
                        epochs += 1
                        if not strictly_better(cur, prev):
                            violations += 1
                fits = [p.best_fitness for p in result.trace]
                if fits != sorted(fits):
                    violations += 1
    ok = runs == 100 and epochs > 0 and violations == 0
    _report(
        7,
        ok,
        f"{runs} runs, {epochs} improving epoch pairs checked, {violations} violations",
    )


# ---------------------------------------------------------------------------
# 10. run-level determinism


def test_criterion_10_run_determinism(tmp_path, tasks_dir):
    diffs = []
    for algo in ALGORITHM_NAMES:
        payloads = []
        for side in ("a", "b"):
            out = tmp_path / algo / side
            job = Job(
                algorithm=algo,
                task_file=str(tasks_dir / "add-or-zero.json"),
                seed=42,
                out_dir=str(out),
                timeout_s=None,
                max_evals=2000,
            )
            execute_job(job)
            path = next(out.glob("*.json"))
            data = json.loads(path.read_text())
            data.pop("wall_time_s")
            payloads.append(json.dumps(data, sort_keys=True).encode())
        if payloads[0] != payloads[1]:
            diffs.append(algo)
    ok = not diffs
    _report(
        10,
        ok,
        f"six algorithms re-run with identical seeds: "
        f"{'all byte-identical modulo wall time' if ok else 'differ: ' + ','.join(diffs)}",
    )


# ---------------------------------------------------------------------------
# 11. acceptance-probability formulas


def test_criterion_11_acceptance_formulas():
    mh = mh_acceptance_probability(2.0, 3.0, 0.7)  # cost rises by 1, beta 0.7
    sa = sa_acceptance_probability(0.4, 0.5, 0.05)  # fitness drops 0.1 at T=0.05
    mh_err = abs(mh - math.exp(-0.7))
    sa_err = abs(sa - math.exp(-2.0))
    ok = mh_err <= 1e-12 and sa_err <= 1e-12
    _report(
        11,
        ok,
        f"MH acceptance {mh:.12f} (err {mh_err:.1e}), SA acceptance {sa:.12f} (err {sa_err:.1e})",
    )


# ---------------------------------------------------------------------------
# 8 + 9. the scaled experiment campaign (slow; shared fixture)

CAMPAIGN_TASKS = 30
CAMPAIGN_TIMEOUT_S = 120.0
CAMPAIGN_MASTER_SEED = 8080


@pytest.fixture(scope="module")
def campaign(tmp_path_factory):
    root = tmp_path_factory.mktemp("campaign")
    spec = GenSpec(oracle_size_min=5, oracle_size_max=8, num_examples=100)
    master = random.Random(CAMPAIGN_MASTER_SEED)
    task_seeds = [master.randrange(2**63) for _ in range(CAMPAIGN_TASKS)]
    tasks, task_files = [], []
    for i, ts in enumerate(task_seeds):
        task = generate_benchmark(f"camp-{i:03d}", spec, random.Random(ts))
        path = root / f"camp-{i:03d}.json"
        save_task(task, path)
        tasks.append(task)
        task_files.append(path)
    records = {algo: [] for algo in ALGORITHM_NAMES}
    started = time.perf_counter()
    for algo in ALGORITHM_NAMES:
        for i, path in enumerate(task_files):
            job = Job(
                algorithm=algo,
                task_file=str(path),
                seed=1000 + i,
                out_dir=str(root / "results" / algo),
                timeout_s=CAMPAIGN_TIMEOUT_S,
                max_evals=None,
            )
            records[algo].append(execute_job(job))
    return {
        "tasks": tasks,
        "records": records,
        "wall_s": time.perf_counter() - started,
    }


@pytest.mark.campaign
def test_criterion_08_scaled_solve_counts(campaign):
    counts = {
        algo: sum(r["solved"] for r in recs)
        for algo, recs in campaign["records"].items()
    }
    sbs, lgp = counts["igi-sbs"], counts["igi-lgp"]
    baselines = {a: counts[a] for a in ("mh", "gp", "sihc", "sa")}
    hours = campaign["wall_s"] / 3600.0
    ok = (
        all(sbs >= c for c in baselines.values())
        and all(lgp >= c for c in baselines.values())
        and sbs >= 0.6 * CAMPAIGN_TASKS
        and hours <= 6.0
    )
    detail = ", ".join(f"{a}={counts[a]}" for a in ALGORITHM_NAMES)
    _report(8, ok, f"solved of {CAMPAIGN_TASKS}: {detail}; campaign took {hours:.2f} CPU-hours")


@pytest.mark.campaign
def test_criterion_09_generalization(campaign):
    percentages = {}
    for algo, recs in campaign["records"].items():
        solved = [(i, r) for i, r in enumerate(recs) if r["solved"]]
        if not solved:
            percentages[algo] = None
            continue
        generalizable = 0
        for i, record in solved:
            task = campaign["tasks"][i]
            holdout = generate_holdout(task, 100, random.Random(9000 + i))
            program = parse_prefix(record["best_program"], task.primitive_set)
            if check_generalization(program, holdout) == 1.0:
                generalizable += 1
        percentages[algo] = 100.0 * generalizable / len(solved)
    sbs = percentages["igi-sbs"]
    ok = sbs is not None and sbs >= 80.0
    detail = ", ".join(
        f"{a}={'n/a' if p is None else f'{p:.1f}%'}" for a, p in percentages.items()
    )
    _report(9, ok, f"programs reproducing all 100 holdout examples: {detail}")
