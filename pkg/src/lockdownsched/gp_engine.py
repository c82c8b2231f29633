"""Steady-state evolution of slot-printing program trees.

Each parallel independent run (PIR) keeps a fixed-size population.  One
offspring is produced per iteration: tournament-of-4 parent selection
(ties prefer the smaller tree), subtree crossover against a second
tournament winner 80% of the time, subtree mutation otherwise, and a
kill-tournament-of-2 picks the slot to reuse (ties kill the bigger tree,
the incumbent best is never killed).  Every strict improvement of the best
fitness is emitted as a solution record, so a run's trajectory can be
archived and replayed.

Programs whose raw output vector contains a non-finite value are assigned
negative-infinite fitness instead of raising; the bounding used for real
candidates stays strict.

An optional warm-up phase scores individuals purely by printed vector
length until the whole population prints at least ``seed_len`` values,
which makes long allocation vectors appear quickly when wanted.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, fields

import numpy as np

from . import gp_tree
from ._simcore import (
    bound_array,
    build_context,
    counts_for_slots,
    decode_slots,
)
from .dataset import Dataset
from .full_infection import PnTable, build_pn_table
from .gp_tree import (
    GpNode,
    compile_postfix,
    crossover,
    make_vm_buffers,
    mutate,
    ramped_population,
    run_vm,
)
from .simulator import MODEL_FULL, MODEL_PARTIAL, fitness_value

TOURNAMENT_SIZE = 4
KILL_TOURNAMENT_SIZE = 2


@dataclass(frozen=True)
class GpConfig:
    """Knobs for one evolution run; validated on construction."""

    model: str = MODEL_PARTIAL
    s: int | None = 4
    q: int | None = None
    w_c: float = 0.65
    population: int = 500
    budget: int = 20_000
    crossover_rate: float = 0.8
    tree_cap: int = gp_tree.TREE_CAP
    init_min_depth: int = 2
    init_max_depth: int = 6
    mutation_depth: int = 4
    seed_len: int | None = None
    target_fitness: float | None = None
    target_nd: int | None = None
    pn_iterations: int = 100_000
    pn_seed: int = 0

    def __post_init__(self):
        if self.model not in (MODEL_PARTIAL, MODEL_FULL):
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == MODEL_PARTIAL:
            if self.s is None or self.s < 2:
                raise ValueError("partial model needs group size s >= 2")
        else:
            if self.q is None or self.q < 1:
                raise ValueError("full model needs trial count q >= 1")
        if self.population < 4:
            raise ValueError("population must be at least 4")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover rate outside [0, 1]")
        if not 0.0 <= self.w_c <= 1.0:
            raise ValueError("w_c outside [0, 1]")
        if self.tree_cap < 1 or self.mutation_depth < 0:
            raise ValueError("bad size limits")
        if self.seed_len is not None and self.seed_len < 1:
            raise ValueError("seed_len must be positive when set")


def config_from_file(path) -> GpConfig:
    """Read ``key = value`` lines into a GpConfig; '#' starts a comment."""
    known = {f.name: f for f in fields(GpConfig)}
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if not sep or key not in known:
                raise ValueError(f"line {lineno}: unknown setting {key!r}")
            if raw.lower() == "none":
                values[key] = None
            elif key == "model":
                values[key] = raw
            elif key in ("w_c", "crossover_rate", "target_fitness"):
                values[key] = float(raw)
            else:
                values[key] = int(raw)
    return GpConfig(**values)


@dataclass(frozen=True)
class SolutionRecord:
    """One emitted improvement: the bounded vector plus its evaluation."""

    vector: tuple
    fitness: float
    n_h: int
    n_d: int
    pir_id: int
    seed: int
    plan_digest: str

    def sort_key(self):
        # total order: best fitness first, then fewer deaths, then stable
        # tie-breaks so merge order never changes the ranked result
        return (
            -self.fitness,
            self.n_d,
            self.n_h,
            self.pir_id,
            self.plan_digest,
            self.vector,
        )


@dataclass(frozen=True)
class Archive:
    """Merged PIR output: ranked records and the (N_D, N_H) Pareto front."""

    records: tuple
    pareto: tuple


def plan_digest(ds: Dataset, slots) -> str:
    h = hashlib.sha256(ds.digest().encode())
    h.update(np.asarray(slots, dtype=np.int64).tobytes())
    return h.hexdigest()


def pareto_front(records) -> tuple:
    """Records whose (N_D, N_H) is not dominated by any other record's."""
    points = {(r.n_d, r.n_h) for r in records}
    front = []
    for rec in records:
        nd, nh = rec.n_d, rec.n_h
        dominated = any(
            (d <= nd and h <= nh) and (d < nd or h < nh) for d, h in points
        )
        if not dominated:
            front.append(rec)
    best_per_point = {}
    for rec in sorted(front, key=SolutionRecord.sort_key):
        best_per_point.setdefault((rec.n_d, rec.n_h), rec)
    return tuple(best_per_point[p] for p in sorted(best_per_point))


class _Evaluator:
    """Tree -> (fitness, n_h, n_d) through the compiled pipeline."""

    def __init__(self, ds, config, table):
        self.config = config
        self.ctx = build_context(
            ds,
            config.model,
            s=config.s if config.model == MODEL_PARTIAL else None,
            table=table,
        )
        self.rbuf, self.stack = make_vm_buffers()

    def raw_vector(self, tree: GpNode) -> np.ndarray:
        codes, payloads = compile_postfix(tree)
        p_z = run_vm(codes, payloads, self.rbuf, self.stack)
        return self.rbuf[1 : p_z + 1]

    def vector_length(self, tree: GpNode) -> int:
        return self.raw_vector(tree).shape[0]

    def bounded_vector(self, tree: GpNode) -> np.ndarray | None:
        raw = self.raw_vector(tree)
        if not np.isfinite(raw).all():
            return None
        return bound_array(raw)

    def evaluate(self, tree: GpNode) -> tuple:
        bounded = self.bounded_vector(tree)
        if bounded is None:
            return (-math.inf, -1, -1)
        slots = decode_slots(self.ctx, bounded)
        n_h, n_d = counts_for_slots(self.ctx, slots)
        return (fitness_value(n_h, n_d, self.config.w_c), n_h, n_d)

    def record(self, tree: GpNode, fitness, n_h, n_d, ds, pir_id, seed):
        bounded = self.bounded_vector(tree)
        slots = decode_slots(self.ctx, bounded)
        return SolutionRecord(
            vector=tuple(float(v) for v in bounded),
            fitness=fitness,
            n_h=int(n_h),
            n_d=int(n_d),
            pir_id=pir_id,
            seed=seed,
            plan_digest=plan_digest(ds, slots),
        )


def _tournament(rng, scores, sizes, k: int) -> int:
    """Index of the winner: best score, ties won by the smaller tree."""
    best = rng.randrange(len(scores))
    for _ in range(k - 1):
        j = rng.randrange(len(scores))
        if (scores[j], -sizes[j]) > (scores[best], -sizes[best]):
            best = j
    return best


def _kill_tournament(rng, scores, sizes, protect: int) -> int:
    """Slot to overwrite: worst score, ties kill the bigger tree."""
    while True:
        i = rng.randrange(len(scores))
        j = rng.randrange(len(scores))
        loser = i if (scores[i], -sizes[i]) <= (scores[j], -sizes[j]) else j
        if loser == protect:
            loser = j if loser == i else i
        if loser != protect:
            return loser


def _target_met(config: GpConfig, fitness: float, n_d: int) -> bool:
    if config.target_fitness is not None and fitness >= config.target_fitness:
        return True
    if config.target_nd is not None and 0 <= n_d <= config.target_nd:
        return True
    return False


def evolve_pir(
    ds: Dataset,
    config: GpConfig,
    seed: int,
    sink=None,
    *,
    pir_id: int = 0,
    table: PnTable | None = None,
    evaluator: _Evaluator | None = None,
) -> SolutionRecord:
    """Run one independent evolution; returns the best record found.

    ``sink``, when given, receives every strict improvement (the first
    finite-fitness best included) in the order they appear.
    """
    if evaluator is None:
        if config.model == MODEL_FULL and table is None:
            table = build_pn_table(
                config.q, config.pn_iterations, seed=config.pn_seed
            )
        evaluator = _Evaluator(ds, config, table)
    rng = random.Random(seed)

    population = ramped_population(
        rng, config.population, config.init_min_depth, config.init_max_depth
    )
    sizes = [t.size for t in population]
    seeding = config.seed_len is not None

    def emit(idx) -> SolutionRecord:
        rec = evaluator.record(
            population[idx], fitness[idx], n_h[idx], n_d[idx], ds, pir_id, seed
        )
        if sink is not None:
            sink(rec)
        return rec

    if seeding:
        lengths = [evaluator.vector_length(t) for t in population]
        scores = lengths
        fitness = n_h = n_d = None
        best_rec = None
        best_idx = max(
            range(len(population)), key=lambda i: (scores[i], -sizes[i])
        )
    else:
        evals = [evaluator.evaluate(t) for t in population]
        fitness = [e[0] for e in evals]
        n_h = [e[1] for e in evals]
        n_d = [e[2] for e in evals]
        scores = fitness
        best_idx = max(
            range(len(population)), key=lambda i: (fitness[i], -sizes[i])
        )
        best_rec = None
        if math.isfinite(fitness[best_idx]):
            best_rec = emit(best_idx)

    spent = 0
    while spent < config.budget:
        if (
            not seeding
            and best_rec is not None
            and _target_met(config, fitness[best_idx], n_d[best_idx])
        ):
            break
        parent = _tournament(rng, scores, sizes, TOURNAMENT_SIZE)
        if rng.random() < config.crossover_rate:
            partner = _tournament(rng, scores, sizes, TOURNAMENT_SIZE)
            child = crossover(
                population[parent], population[partner], rng, config.tree_cap
            )
        else:
            child = mutate(
                population[parent],
                rng,
                config.tree_cap,
                config.mutation_depth,
            )
        spent += 1
        victim = _kill_tournament(rng, scores, sizes, best_idx)
        population[victim] = child
        sizes[victim] = child.size

        if seeding:
            scores[victim] = evaluator.vector_length(child)
            if (scores[victim], -sizes[victim]) > (scores[best_idx], -sizes[best_idx]):
                best_idx = victim
            if min(scores) >= config.seed_len:
                # warm-up done: rescore the whole population for real
                seeding = False
                evals = [evaluator.evaluate(t) for t in population]
                fitness = [e[0] for e in evals]
                n_h = [e[1] for e in evals]
                n_d = [e[2] for e in evals]
                scores = fitness
                best_idx = max(
                    range(len(population)),
                    key=lambda i: (fitness[i], -sizes[i]),
                )
                if math.isfinite(fitness[best_idx]):
                    best_rec = emit(best_idx)
            continue

        f, h, d = evaluator.evaluate(child)
        was_best = fitness[best_idx]
        fitness[victim] = f
        n_h[victim] = h
        n_d[victim] = d
        if f > was_best and math.isfinite(f):
            best_idx = victim
            best_rec = emit(victim)

    if best_rec is None:
        # degenerate: nothing finite appeared; rescore to report honestly
        if seeding:
            evals = [evaluator.evaluate(t) for t in population]
            fitness = [e[0] for e in evals]
            n_h = [e[1] for e in evals]
            n_d = [e[2] for e in evals]
            best_idx = max(
                range(len(population)), key=lambda i: (fitness[i], -sizes[i])
            )
            if math.isfinite(fitness[best_idx]):
                return emit(best_idx)
        raise RuntimeError("evolution produced no finite-fitness individual")
    return best_rec


def run_pirs(
    ds: Dataset,
    config: GpConfig,
    seeds,
    *,
    table: PnTable | None = None,
) -> Archive:
    """Run several PIRs and merge their improvement streams.

    The ranked list is sorted by a total key so that the merge order of the
    runs can never change the result; the Pareto front minimises deaths and
    hospitalisations jointly.  Later PIRs are skipped once a run has already
    met the configured early-stop target.
    """
    if config.model == MODEL_FULL and table is None:
        table = build_pn_table(config.q, config.pn_iterations, seed=config.pn_seed)
    evaluator = _Evaluator(ds, config, table)
    records = []
    for pir_id, seed in enumerate(seeds):
        best = evolve_pir(
            ds,
            config,
            seed,
            records.append,
            pir_id=pir_id,
            table=table,
            evaluator=evaluator,
        )
        if _target_met(config, best.fitness, best.n_d):
            break
    ranked = tuple(sorted(records, key=SolutionRecord.sort_key))
    return Archive(records=ranked, pareto=pareto_front(ranked))
