"""Baseline synthesizers: Metropolis-Hastings subtree sampling, steady-state
genetic programming, stochastic iterated hill climbing, simulated annealing.

All four share the run bookkeeping of the improvement search (same RunResult
shape, same trace schema) and the same fitness ordering.  Acceptance-rule
probabilities are exposed as plain functions so their values can be checked
directly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from .dsl import Node, ProgramTree, mk_node, random_tree_of_size, random_tree_ramped
from .fitness import Task, strictly_better
from .igi import Budget, Candidate, Observer, RunResult, RunState, _StopRun
from .patch import apply_edit, initial_state, random_edit

PROPOSAL_NODE_DRAWS = 20  # node redraws before an MH step becomes a no-op


def mh_acceptance_probability(cost_current: float, cost_proposed: float, beta: float) -> float:
    """min{1, exp(beta * (C(p) - C(p')))} on summed per-example error."""
    arg = beta * (cost_current - cost_proposed)
    return 1.0 if arg >= 0.0 else math.exp(arg)


def sa_acceptance_probability(
    fitness_proposed: float, fitness_current: float, temperature: float
) -> float:
    """min{1, exp((fit(p') - fit(p)) / T)}."""
    arg = (fitness_proposed - fitness_current) / temperature
    return 1.0 if arg >= 0.0 else math.exp(arg)


def _pick(pop: list[Candidate], size: int, rng: random.Random) -> Candidate:
    """Tournament over candidates, draws with replacement, first draw keeps ties.

    Compares raw fitness only: folding size into the order would turn every
    tie into parsimony pressure and collapse a steady-state population onto
    single-leaf trees, which crossover can never regrow.
    """
    winner = pop[rng.randrange(len(pop))]
    for _ in range(size - 1):
        challenger = pop[rng.randrange(len(pop))]
        if challenger.score.fitness > winner.score.fitness:
            winner = challenger
    return winner


def _mutate_once(
    tree: ProgramTree, ps, rng: random.Random, max_depth: int
) -> Optional[ProgramTree]:
    """One random typed edit; None when generation fails or the depth cap trips."""
    edit = random_edit(tree, ps, rng)
    if edit is None:
        return None
    variant = apply_edit(initial_state(tree), edit).tree.renumbered()
    if variant.depth > max_depth:
        return None
    return variant


# ---------------------------------------------------------------------------
# Metropolis-Hastings over exact-size programs


@dataclass
class MhParams:
    size_switch_prob: float = 0.006  # chance per step to move the target size k
    beta: float = 0.7
    max_depth: int = 30

    def validate(self) -> None:
        if not 0.0 <= self.size_switch_prob <= 1.0:
            raise ValueError("size_switch_prob must lie in [0, 1]")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


def run_mh(
    task: Task,
    params: Optional[MhParams] = None,
    seed: int = 0,
    budget: Budget = Budget(max_evals=100_000),
    observer: Optional[Observer] = None,
) -> RunResult:
    p = params if params is not None else MhParams()
    p.validate()
    rng = random.Random(seed)
    state = RunState(task, budget, observer)
    ps = task.primitive_set
    n = task.n_examples

    k = 1
    tree = random_tree_of_size(ps, task.output_type, k, rng)
    while tree is None:  # smallest well-typed program may exceed one node
        k += 1
        tree = random_tree_of_size(ps, task.output_type, k, rng)
    k = tree.size

    try:
        s, _ = state.score(tree, init_phase=True)
        cur = Candidate(tree, s)
        state.trace_event("init")
        while True:
            state.check_budget()  # no-op steps evaluate nothing
            if rng.random() < p.size_switch_prob:
                k = max(1, k + (1 if rng.random() < 0.5 else -1))
            prop = _mh_proposal(cur.tree, k, ps, rng, p.max_depth)
            if prop is None:
                continue  # no legal adjusted-size replacement: no-op step
            s, became = state.score(prop)
            if became:
                state.trace_event("improve")
            cost_cur = n * (1.0 - cur.score.fitness)
            cost_new = n * (1.0 - s.fitness)
            if rng.random() < mh_acceptance_probability(cost_cur, cost_new, p.beta):
                cur = Candidate(prop, s)
                state.notify("mh_accept", size=prop.size, target_size=k)
    except _StopRun:
        pass
    return state.result()


def _mh_proposal(
    tree: ProgramTree, k: int, ps, rng: random.Random, max_depth: int
) -> Optional[ProgramTree]:
    """Replace one random subtree, sized so the whole program has k nodes."""
    nodes = tree.nodes()
    for _ in range(PROPOSAL_NODE_DRAWS):
        node = nodes[rng.randrange(len(nodes))]
        new_size = k - (tree.size - node.size)
        if new_size < 1:
            continue
        sub = random_tree_of_size(ps, node.return_type, new_size, rng)
        if sub is None:
            continue
        cand = tree.replace_subtree(node.node_id, sub.root)
        if cand.depth > max_depth:
            continue
        return cand
    return None


# ---------------------------------------------------------------------------
# Steady-state genetic programming


@dataclass
class GpParams:
    population: int = 20_000
    crossover_prob: float = 0.9
    point_mutation_prob: float = 0.1  # per node
    tournament_size: int = 2
    depth_min: int = 2
    depth_max: int = 4
    max_depth: int = 30

    def validate(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not (0.0 <= self.crossover_prob <= 1.0 and 0.0 <= self.point_mutation_prob <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.tournament_size < 1 or self.max_depth < 1:
            raise ValueError("tournament size and max_depth must be >= 1")
        if not (1 <= self.depth_min <= self.depth_max):
            raise ValueError("bad init depth range")


def run_gp(
    task: Task,
    params: Optional[GpParams] = None,
    seed: int = 0,
    budget: Budget = Budget(max_evals=100_000),
    observer: Optional[Observer] = None,
) -> RunResult:
    p = params if params is not None else GpParams()
    p.validate()
    rng = random.Random(seed)
    state = RunState(task, budget, observer)
    ps = task.primitive_set

    try:
        pop: list[Candidate] = []
        for i in range(p.population):
            tree = random_tree_ramped(ps, task.output_type, p.depth_min, p.depth_max, rng)
            s, became = state.score(tree, init_phase=(i == 0))
            if became and i > 0:
                state.trace_event("improve")
            pop.append(Candidate(tree, s))
        state.trace_event("init")
        while True:
            if rng.random() < p.crossover_prob:
                pa = _pick(pop, p.tournament_size, rng)
                pb = _pick(pop, p.tournament_size, rng)
                child = _subtree_crossover(pa.tree, pb.tree, rng, p.max_depth)
            else:
                child = _pick(pop, p.tournament_size, rng).tree
            child = _point_mutation(child, ps, rng, p.point_mutation_prob)
            s, became = state.score(child)
            if became:
                state.trace_event("improve")
            i = rng.randrange(len(pop))
            j = rng.randrange(len(pop))
            loser = i if pop[j].score.fitness > pop[i].score.fitness else j
            pop[loser] = Candidate(child, s)
    except _StopRun:
        pass
    return state.result()


def _subtree_crossover(
    a: ProgramTree, b: ProgramTree, rng: random.Random, max_depth: int
) -> ProgramTree:
    """Swap a random subtree of `a` for a same-typed random subtree of `b`.

    No same-typed donor, or a child over the depth cap, falls back to `a`.
    """
    nodes_a = a.nodes()
    site = nodes_a[rng.randrange(len(nodes_a))]
    donors = [n for n in b.nodes() if n.return_type is site.return_type]
    if not donors:
        return a
    donor = donors[rng.randrange(len(donors))]
    child = a.replace_subtree(site.node_id, donor)
    if child.depth > max_depth:
        return a
    return child


def _point_mutation(
    tree: ProgramTree, ps, rng: random.Random, prob: float
) -> ProgramTree:
    """Independently relabel nodes with same-signature primitives."""

    def rebuild(n: Node) -> Node:
        children = tuple(rebuild(c) for c in n.children)
        prim = n.primitive
        if rng.random() < prob:
            pool = [q for q in ps.same_signature(prim) if q != prim]
            if pool:
                prim = rng.choice(pool)
        return mk_node(prim, children)

    return ProgramTree.from_template(rebuild(tree.root))


# ---------------------------------------------------------------------------
# Stochastic iterated hill climbing


@dataclass
class SihcParams:
    max_tries: int = 500  # consecutive non-improving mutations before a restart
    depth_min: int = 2
    depth_max: int = 4
    max_depth: int = 30

    def validate(self) -> None:
        if self.max_tries < 1 or self.max_depth < 1:
            raise ValueError("max_tries and max_depth must be >= 1")
        if not (1 <= self.depth_min <= self.depth_max):
            raise ValueError("bad init depth range")


def run_sihc(
    task: Task,
    params: Optional[SihcParams] = None,
    seed: int = 0,
    budget: Budget = Budget(max_evals=100_000),
    observer: Optional[Observer] = None,
) -> RunResult:
    p = params if params is not None else SihcParams()
    p.validate()
    rng = random.Random(seed)
    state = RunState(task, budget, observer)
    ps = task.primitive_set

    def fresh(first: bool) -> Candidate:
        tree = random_tree_ramped(ps, task.output_type, p.depth_min, p.depth_max, rng)
        s, _ = state.score(tree, init_phase=first)
        return Candidate(tree, s)

    try:
        cur = fresh(True)
        state.trace_event("init")
        fails = 0
        while True:
            state.check_budget()  # rejected variants evaluate nothing
            variant = _mutate_once(cur.tree, ps, rng, p.max_depth)
            if variant is None:
                fails += 1  # failed generation or depth cap: still a tried mutation
            else:
                s, became = state.score(variant)
                if became:
                    state.trace_event("improve")
                if strictly_better(s, cur.score):
                    cur = Candidate(variant, s)
                    fails = 0
                else:
                    fails += 1
            if fails >= p.max_tries:
                cur = fresh(False)
                fails = 0
                state.trace_event("restart")
    except _StopRun:
        pass
    return state.result()


# ---------------------------------------------------------------------------
# Simulated annealing


@dataclass
class SaParams:
    t_start: float = 1.5
    t_final: float = 0.001
    cooling_interval: int = 500  # steps between temperature decays
    planned_steps: int = 5_000_000  # schedule length when no eval limit is set
    depth_min: int = 2
    depth_max: int = 4
    max_depth: int = 30

    def validate(self) -> None:
        if not 0 < self.t_final <= self.t_start:
            raise ValueError("need 0 < t_final <= t_start")
        if self.cooling_interval < 1 or self.planned_steps < 1:
            raise ValueError("cooling_interval and planned_steps must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not (1 <= self.depth_min <= self.depth_max):
            raise ValueError("bad init depth range")


def sa_cooling_rate(params: SaParams, budget: Budget) -> float:
    """Per-interval decay factor; geometric schedule hitting t_final at the
    end of the planned step count (the eval limit when one is set)."""
    steps = budget.max_evals if budget.max_evals is not None else params.planned_steps
    coolings = max(1, steps // params.cooling_interval)
    return (params.t_final / params.t_start) ** (1.0 / coolings)


def run_sa(
    task: Task,
    params: Optional[SaParams] = None,
    seed: int = 0,
    budget: Budget = Budget(max_evals=100_000),
    observer: Optional[Observer] = None,
) -> RunResult:
    p = params if params is not None else SaParams()
    p.validate()
    rng = random.Random(seed)
    state = RunState(task, budget, observer)
    ps = task.primitive_set
    rate = sa_cooling_rate(p, budget)

    try:
        tree = random_tree_ramped(ps, task.output_type, p.depth_min, p.depth_max, rng)
        s, _ = state.score(tree, init_phase=True)
        cur = Candidate(tree, s)
        state.trace_event("init")
        temperature = p.t_start
        step = 0
        while True:
            state.check_budget()  # rejected variants evaluate nothing
            step += 1
            variant = _mutate_once(cur.tree, ps, rng, p.max_depth)
            if variant is not None:
                s, became = state.score(variant)
                if became:
                    state.trace_event("improve")
                if rng.random() < sa_acceptance_probability(
                    s.fitness, cur.score.fitness, temperature
                ):
                    cur = Candidate(variant, s)
            if step % p.cooling_interval == 0:
                temperature = max(p.t_final, temperature * rate)
    except _StopRun:
        pass
    return state.result()
