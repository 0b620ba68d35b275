"""Iterative genetic improvement: repair-loop search over patches.

One run alternates two phases.  An improvement chain applies inner-search
epochs (beam-of-patches or linear-GP-of-patches) against the current
program, adopting each strictly better result, until an epoch fails to
improve.  A perturbation then replaces a random subtree with the best of M
random replacements and the chain restarts from there; the better of the
pre- and post-perturbation programs is kept.  The run stops on budget
exhaustion or the moment any candidate reaches fitness 1.
"""

from __future__ import annotations

import csv
import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

from .dsl import ProgramTree, random_tree_of_size, random_tree_ramped
from .fitness import Score, Task, fitness, strictly_better
from .interpreter import EvalCounter
from .patch import (
    Patch,
    PatchState,
    apply_edit,
    apply_patch,
    initial_state,
    random_edit,
)


@dataclass
class SbsParams:
    """Beam-of-patches inner search."""

    beam_width: int = 50  # parallel patches kept between levels
    successors: int = 5  # one-edit extensions tried per patch per level
    max_patch_len: int = 3  # levels per epoch
    tournament_size: int = 2

    def validate(self) -> None:
        if min(self.beam_width, self.successors, self.max_patch_len) < 1:
            raise ValueError("beam parameters must be >= 1")
        if self.tournament_size < 1:
            raise ValueError("tournament size must be >= 1")

    @property
    def default_init_samples(self) -> int:
        return self.beam_width * self.successors * self.max_patch_len


@dataclass
class LgpParams:
    """Variable-length genome (edit list) inner search."""

    population: int = 100
    generations: int = 5
    tournament_size: int = 2
    crossover_prob: float = 1.0
    mutation_prob: float = 1.0

    def validate(self) -> None:
        if min(self.population, self.generations) < 1:
            raise ValueError("population and generations must be >= 1")
        if self.tournament_size < 1:
            raise ValueError("tournament size must be >= 1")
        if not (0.0 <= self.crossover_prob <= 1.0 and 0.0 <= self.mutation_prob <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")

    @property
    def default_init_samples(self) -> int:
        return self.population * self.generations


InnerParams = Union[SbsParams, LgpParams]


@dataclass
class IgiConfig:
    inner: InnerParams = field(default_factory=SbsParams)
    init_samples: int = 0  # 0 means: derive from the inner search's budget
    perturb_candidates: int = 200
    min_perturb_size: int = 4
    depth_min: int = 2
    depth_max: int = 4

    def validate(self) -> None:
        self.inner.validate()
        if self.init_samples < 0:
            raise ValueError("init_samples must be >= 0")
        if self.perturb_candidates < 1 or self.min_perturb_size < 1:
            raise ValueError("perturbation parameters must be >= 1")
        if not (1 <= self.depth_min <= self.depth_max):
            raise ValueError("bad init depth range")

    @property
    def resolved_init_samples(self) -> int:
        return self.init_samples if self.init_samples > 0 else self.inner.default_init_samples


@dataclass(frozen=True)
class Budget:
    """Wall-clock and/or evaluation-count limit; first to trigger stops the run."""

    max_seconds: Optional[float] = None
    max_evals: Optional[int] = None

    def validate(self) -> None:
        if self.max_seconds is None and self.max_evals is None:
            raise ValueError("budget needs a timeout or an evaluation limit")
        if self.max_seconds is not None and self.max_seconds < 0:
            raise ValueError("timeout must be >= 0")
        if self.max_evals is not None and self.max_evals < 0:
            raise ValueError("evaluation limit must be >= 0")


class TracePoint(NamedTuple):
    time_s: float
    evaluations: int
    best_fitness: float
    best_size: int
    event: str


@dataclass
class RunResult:
    best_program: ProgramTree
    best_score: Score
    solved: bool
    wall_time_s: float
    evaluations: int
    trace: tuple[TracePoint, ...]


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "evaluations", "best_fitness", "best_size", "event"])
        for p in trace:
            w.writerow([f"{p.time_s:.6f}", p.evaluations, repr(p.best_fitness), p.best_size, p.event])


class Candidate(NamedTuple):
    tree: ProgramTree
    score: Score


class _StopRun(Exception):
    def __init__(self, reason: str):
        self.reason = reason


Observer = Callable[[str, dict], None]


class RunState:
    """Per-run bookkeeping: tally, global best, trace, stopping conditions."""

    def __init__(
        self,
        task: Task,
        budget: Budget,
        observer: Optional[Observer] = None,
    ):
        budget.validate()
        self.task = task
        self.counter = EvalCounter()
        self.observer = observer
        self.best: Optional[Candidate] = None
        self.trace: list[TracePoint] = []
        self.t0 = time.monotonic()
        self.deadline = None if budget.max_seconds is None else self.t0 + budget.max_seconds
        self.max_evals = budget.max_evals

    def elapsed(self) -> float:
        return time.monotonic() - self.t0

    def check_budget(self) -> None:
        if self.max_evals is not None and self.counter.count >= self.max_evals:
            raise _StopRun("evals")
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise _StopRun("timeout")

    def score(self, tree: ProgramTree, init_phase: bool = False) -> tuple[Score, bool]:
        """Evaluate a candidate; returns (score, became-global-best).

        Initialization ignores the budget so a run always has a best program;
        a solution stops the run immediately in any phase.
        """
        if not init_phase:
            self.check_budget()
        s = fitness(tree, self.task, self.counter)
        if self.observer is not None:
            self.observer("score", {"tree": tree, "score": s})
        became = self.best is None or strictly_better(s, self.best.score)
        if became:
            self.best = Candidate(tree.renumbered(), s)
        if s.fitness == 1.0:
            raise _StopRun("solved")
        return s, became

    def trace_event(self, event: str) -> None:
        assert self.best is not None
        self.trace.append(
            TracePoint(
                self.elapsed(),
                self.counter.count,
                self.best.score.fitness,
                self.best.score.size,
                event,
            )
        )

    def result(self) -> RunResult:
        assert self.best is not None, "no candidate was ever evaluated"
        return RunResult(
            best_program=self.best.tree,
            best_score=self.best.score,
            solved=self.best.score.fitness == 1.0,
            wall_time_s=self.elapsed(),
            evaluations=self.counter.count,
            trace=tuple(self.trace),
        )

    def notify(self, kind: str, **data) -> None:
        if self.observer is not None:
            self.observer(kind, data)


# ---------------------------------------------------------------------------
# Initialization and perturbation


def _sample_init(
    state: RunState, cfg: IgiConfig, rng: random.Random, init_phase: bool
) -> Candidate:
    """Best of K ramped random trees; first encountered wins ties."""
    ps = state.task.primitive_set
    best: Optional[Candidate] = None
    for _ in range(cfg.resolved_init_samples):
        tree = random_tree_ramped(ps, state.task.output_type, cfg.depth_min, cfg.depth_max, rng)
        s, _ = state.score(tree, init_phase=init_phase)
        if best is None or strictly_better(s, best.score):
            best = Candidate(tree, s)
    assert best is not None
    return best


def _perturb(state: RunState, cfg: IgiConfig, rng: random.Random, current: Candidate) -> Candidate:
    """Replace a random subtree (size >= min_perturb_size) with the best of M
    random replacements; falls back to fresh initialization when no eligible
    subtree exists or the root itself is drawn."""
    ps = state.task.primitive_set
    base = current.tree
    eligible = [n for n in base.nodes() if n.size >= cfg.min_perturb_size]
    if not eligible:
        return _sample_init(state, cfg, rng, init_phase=False)
    nu = rng.choice(eligible)
    if nu.node_id == base.root.node_id:
        return _sample_init(state, cfg, rng, init_phase=False)
    max_size = nu.size
    best: Optional[Candidate] = None
    for _ in range(cfg.perturb_candidates):
        replacement = None
        for _ in range(100):
            size = rng.randint(1, max_size)
            replacement = random_tree_of_size(ps, nu.return_type, size, rng)
            if replacement is not None:
                break
        if replacement is None:
            continue
        spliced = base.replace_subtree(nu.node_id, replacement.root)
        s, _ = state.score(spliced)
        if best is None or strictly_better(s, best.score):
            best = Candidate(spliced, s)
    return best if best is not None else current


# ---------------------------------------------------------------------------
# Beam-of-patches epoch


def _tournament(pool: list, size: int, rng: random.Random):
    """Best of `size` uniform draws with replacement; earlier draw wins ties.

    Pool entries are (score, payload...) tuples."""
    winner = pool[rng.randrange(len(pool))]
    for _ in range(size - 1):
        challenger = pool[rng.randrange(len(pool))]
        if strictly_better(challenger[0], winner[0]):
            winner = challenger
    return winner


def _sbs_epoch(
    state: RunState, p: SbsParams, rng: random.Random, current: Candidate
) -> Optional[Candidate]:
    """One beam epoch: extend patches one edit per level, keep the best
    beam_width by tournament.  Returns a strictly better program or None.

    The first candidate to beat `current` returns at once unless it also set
    a new global best, in which case the epoch runs to the last level and
    returns its best find.
    """
    base = current.tree
    ps = state.task.primitive_set
    beam: list[tuple[Patch, PatchState]] = [
        (Patch.empty(base), initial_state(base)) for _ in range(p.beam_width)
    ]
    epoch_best: Optional[Candidate] = None
    run_to_end = False
    triggered = False

    for _level in range(p.max_patch_len):
        scored: list[tuple[Score, Patch, PatchState]] = []
        for patch, pstate in beam:
            for _ in range(p.successors):
                edit = random_edit(pstate.tree, ps, rng)
                if edit is None:
                    continue
                nstate = apply_edit(pstate, edit)
                s, became_global = state.score(nstate.tree)
                scored.append((s, patch.extended(edit), nstate))
                cand = Candidate(nstate.tree, s)
                if epoch_best is None or strictly_better(s, epoch_best.score):
                    epoch_best = cand
                if not triggered and strictly_better(s, current.score):
                    triggered = True
                    if not became_global:
                        return Candidate(cand.tree.renumbered(), s)
                    run_to_end = True
        if not scored:
            break
        beam = [
            (w[1], w[2])
            for w in (_tournament(scored, p.tournament_size, rng) for _ in range(p.beam_width))
        ]

    if (
        run_to_end
        and epoch_best is not None
        and strictly_better(epoch_best.score, current.score)
    ):
        return Candidate(epoch_best.tree.renumbered(), epoch_best.score)
    return None


# ---------------------------------------------------------------------------
# Linear-GP-over-patches epoch


def sample_initial_patch_length(rng: random.Random) -> int:
    """1 + Poisson(1), the genome length distribution for fresh patches."""
    limit = math.exp(-1.0)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return 1 + k
        k += 1


def _random_patch(
    base: ProgramTree, length: int, ps, rng: random.Random
) -> tuple[Patch, PatchState]:
    """Sequentially grown random patch; each edit is drawn against the tree
    produced by the edits before it."""
    patch = Patch.empty(base)
    pstate = initial_state(base)
    for _ in range(length):
        edit = random_edit(pstate.tree, ps, rng)
        if edit is None:
            break
        patch = patch.extended(edit)
        pstate = apply_edit(pstate, edit)
    return patch, pstate


def _one_point_crossover(
    a: Patch, b: Patch, rng: random.Random
) -> tuple[Patch, Patch]:
    """Single shared fraction alpha picks both cut points: floor(alpha * len)."""
    alpha = rng.random()
    while alpha == 0.0:
        alpha = rng.random()
    ca = int(alpha * len(a.edits))
    cb = int(alpha * len(b.edits))
    o1 = Patch(a.edits[:ca] + b.edits[cb:], a.base_size, a.base_root_type)
    o2 = Patch(b.edits[:cb] + a.edits[ca:], b.base_size, b.base_root_type)
    return o1, o2


def _mutate_patch(patch: Patch, base: ProgramTree, ps, rng: random.Random) -> Patch:
    """Remove, regenerate, or insert one edit (equiprobable kinds).

    New edits are drawn against the tree the surrounding prefix produces, the
    same context they would see during application.
    """
    edits = patch.edits
    if not edits:
        edit = random_edit(base, ps, rng)
        return patch if edit is None else patch.extended(edit)
    idx = rng.randrange(len(edits))
    op = rng.randrange(3)
    if op == 0:
        return Patch(edits[:idx] + edits[idx + 1 :], patch.base_size, patch.base_root_type)
    prefix_len = idx if op == 1 else idx + 1
    pstate = initial_state(base)
    for e in edits[:prefix_len]:
        pstate = apply_edit(pstate, e)
    edit = random_edit(pstate.tree, ps, rng)
    if edit is None:
        return patch
    if op == 1:
        new_edits = edits[:idx] + (edit,) + edits[idx + 1 :]
    else:
        new_edits = edits[: idx + 1] + (edit,) + edits[idx + 1 :]
    return Patch(new_edits, patch.base_size, patch.base_root_type)


def _lgp_epoch(
    state: RunState, p: LgpParams, rng: random.Random, current: Candidate
) -> Optional[Candidate]:
    """One generational epoch over a population of patches.

    Early-exit rule matches the beam epoch: the first candidate beating
    `current` returns immediately unless it is a new global best, in which
    case all generations run and the epoch's best find is returned.
    """
    base = current.tree
    ps = state.task.primitive_set
    epoch_best: Optional[Candidate] = None
    run_to_end = False
    triggered = False
    early: list[Candidate] = []

    def evaluate(patch: Patch) -> Optional[tuple[Score, Patch]]:
        nonlocal epoch_best, run_to_end, triggered
        tree = apply_patch(base, patch).tree
        s, became_global = state.score(tree)
        cand = Candidate(tree, s)
        if epoch_best is None or strictly_better(s, epoch_best.score):
            epoch_best = cand
        if not triggered and strictly_better(s, current.score):
            triggered = True
            if not became_global:
                early.append(Candidate(tree.renumbered(), s))
                return None
            run_to_end = True
        return s, patch

    pop: list[tuple[Score, Patch]] = []
    for _ in range(p.population):
        length = sample_initial_patch_length(rng)
        patch, _pstate = _random_patch(base, length, ps, rng)
        entry = evaluate(patch)
        if entry is None:
            return early[0]
        pop.append(entry)

    for _gen in range(p.generations):
        offspring_patches: list[Patch] = []
        while len(offspring_patches) < p.population:
            pa = _tournament(pop, p.tournament_size, rng)[1]
            pb = _tournament(pop, p.tournament_size, rng)[1]
            if rng.random() < p.crossover_prob:
                o1, o2 = _one_point_crossover(pa, pb, rng)
            else:
                o1, o2 = pa, pb
            for o in (o1, o2):
                if rng.random() < p.mutation_prob:
                    o = _mutate_patch(o, base, ps, rng)
                offspring_patches.append(o)
        next_pop: list[tuple[Score, Patch]] = []
        for patch in offspring_patches[: p.population]:
            entry = evaluate(patch)
            if entry is None:
                return early[0]
            next_pop.append(entry)
        pop = next_pop

    if (
        run_to_end
        and epoch_best is not None
        and strictly_better(epoch_best.score, current.score)
    ):
        return Candidate(epoch_best.tree.renumbered(), epoch_best.score)
    return None


# ---------------------------------------------------------------------------
# The outer loop


def _improvement_chain(
    state: RunState, cfg: IgiConfig, rng: random.Random, start: Candidate
) -> Candidate:
    """Run inner epochs until one fails to improve; returns the last program."""
    current = start
    state.notify("chain_start", score=current.score)
    while True:
        if isinstance(cfg.inner, SbsParams):
            nxt = _sbs_epoch(state, cfg.inner, rng, current)
        else:
            nxt = _lgp_epoch(state, cfg.inner, rng, current)
        if nxt is None:
            state.notify("chain_end", score=current.score)
            return current
        current = nxt
        state.trace_event("epoch")
        state.notify("epoch_improved", score=current.score)


def run_igi(
    task: Task,
    config: Optional[IgiConfig] = None,
    seed: int = 0,
    budget: Budget = Budget(max_evals=100_000),
    observer: Optional[Observer] = None,
) -> RunResult:
    """Full synthesis run; returns the best program ever evaluated."""
    cfg = config if config is not None else IgiConfig()
    cfg.validate()
    rng = random.Random(seed)
    state = RunState(task, budget, observer)
    try:
        current = _sample_init(state, cfg, rng, init_phase=True)
        state.trace_event("init")
        current = _improvement_chain(state, cfg, rng, current)
        while True:
            state.check_budget()
            perturbed = _perturb(state, cfg, rng, current)
            state.trace_event("perturb")
            improved = _improvement_chain(state, cfg, rng, perturbed)
            if strictly_better(improved.score, current.score):
                current = improved
            state.trace_event("accept")
            state.notify("accept", score=current.score)
    except _StopRun:
        pass
    if state.best is not None and not state.trace:
        state.trace_event("init")
    return state.result()
