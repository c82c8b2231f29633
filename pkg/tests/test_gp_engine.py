"""Evolution loop behaviour: determinism, emission rules, archive merging."""

import math
import random

import pytest

from lockdownsched.allocation import AllocationPlan, decode
from lockdownsched.dataset import generate_dataset, mark_apriori_infection
from lockdownsched.full_infection import build_pn_table
from lockdownsched.gp_engine import (
    Archive,
    GpConfig,
    SolutionRecord,
    config_from_file,
    evolve_pir,
    pareto_front,
    plan_digest,
    run_pirs,
)
from lockdownsched.simulator import MODEL_FULL, MODEL_PARTIAL, fitness, simulate


@pytest.fixture(scope="module")
def small_ds():
    ds = generate_dataset(seed=99)
    return ds.with_taxonomy({20: 0.01, 40: 0.03, 50: 0.02})


@pytest.fixture(scope="module")
def small_full_ds():
    ds = generate_dataset(seed=99)
    return mark_apriori_infection(ds, 0.053, 0.021, seed=99)


@pytest.fixture(scope="module")
def tiny_table():
    return build_pn_table(5, 20_000, seed=0)


def quick_config(**over):
    base = dict(model=MODEL_PARTIAL, s=4, population=30, budget=300)
    base.update(over)
    return GpConfig(**base)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            GpConfig(population=3)
        with pytest.raises(ValueError):
            GpConfig(budget=0)
        with pytest.raises(ValueError):
            GpConfig(model="nope")
        with pytest.raises(ValueError):
            GpConfig(model=MODEL_PARTIAL, s=1)
        with pytest.raises(ValueError):
            GpConfig(model=MODEL_FULL, q=None)
        with pytest.raises(ValueError):
            GpConfig(crossover_rate=1.5)

    def test_from_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# evolution settings\n"
            "model = partial\n"
            "s = 6\n"
            "population = 40\n"
            "budget = 1000\n"
            "crossover_rate = 0.7\n"
            "seed_len = none\n"
            "target_fitness = -2.0\n"
        )
        cfg = config_from_file(path)
        assert cfg.s == 6
        assert cfg.population == 40
        assert cfg.crossover_rate == 0.7
        assert cfg.seed_len is None
        assert cfg.target_fitness == -2.0

    def test_from_file_rejects_unknown_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("mystery = 1\n")
        with pytest.raises(ValueError):
            config_from_file(path)


class TestEvolvePir:
    def test_deterministic(self, small_ds):
        cfg = quick_config()
        a = evolve_pir(small_ds, cfg, seed=5)
        b = evolve_pir(small_ds, cfg, seed=5)
        assert a == b

    def test_seed_changes_run(self, small_ds):
        cfg = quick_config()
        a = evolve_pir(small_ds, cfg, seed=5)
        b = evolve_pir(small_ds, cfg, seed=6)
        assert a != b

    def test_sink_gets_strict_improvements_only(self, small_ds):
        got = []
        best = evolve_pir(small_ds, quick_config(), seed=7, sink=got.append)
        assert got, "at least the first finite best is emitted"
        fits = [r.fitness for r in got]
        assert fits == sorted(fits)
        assert len(set(fits)) == len(fits)
        assert got[-1] == best

    def test_record_reproducible_by_simulation(self, small_ds):
        best = evolve_pir(small_ds, quick_config(), seed=11)
        plan = decode(best.vector, small_ds)
        outcome = simulate(small_ds, plan, MODEL_PARTIAL, s=4)
        assert outcome.counts() == (best.n_h, best.n_d)
        assert fitness(outcome) == best.fitness
        assert best.plan_digest == plan_digest(small_ds, plan.slots)

    def test_improves_over_initial(self, small_ds):
        got = []
        evolve_pir(small_ds, quick_config(budget=2000), seed=3, sink=got.append)
        assert len(got) >= 2
        assert got[-1].fitness > got[0].fitness

    def test_target_fitness_stops_early(self, small_ds):
        # a target below any real fitness stops the run at the first best
        got = []
        evolve_pir(
            small_ds,
            quick_config(budget=100_000, target_fitness=-1e9),
            seed=3,
            sink=got.append,
        )
        assert len(got) == 1

    def test_full_model_runs(self, small_full_ds, tiny_table):
        cfg = GpConfig(model=MODEL_FULL, q=5, population=20, budget=150)
        best = evolve_pir(small_full_ds, cfg, seed=2, table=tiny_table)
        plan = decode(best.vector, small_full_ds)
        outcome = simulate(small_full_ds, plan, MODEL_FULL, table=tiny_table)
        assert outcome.counts() == (best.n_h, best.n_d)

    def test_seeding_phase_reaches_length(self, small_ds):
        cfg = quick_config(budget=4000, seed_len=12)
        best = evolve_pir(small_ds, cfg, seed=1)
        assert len(best.vector) >= 12
        assert math.isfinite(best.fitness)


class TestArchive:
    def test_run_pirs_merges_and_ranks(self, small_ds):
        arch = run_pirs(small_ds, quick_config(), seeds=[1, 2, 3])
        assert isinstance(arch, Archive)
        fits = [r.fitness for r in arch.records]
        assert fits == sorted(fits, reverse=True)
        assert {r.pir_id for r in arch.records} == {0, 1, 2}
        assert {r.seed for r in arch.records} == {1, 2, 3}

    def test_merge_order_invariance(self, small_ds):
        cfg = quick_config()
        collected = {}
        for pir_id, seed in enumerate([1, 2, 3]):
            recs = []
            evolve_pir(small_ds, cfg, seed, recs.append, pir_id=pir_id)
            collected[pir_id] = recs
        merged_a = sorted(
            collected[0] + collected[1] + collected[2],
            key=SolutionRecord.sort_key,
        )
        merged_b = sorted(
            collected[2] + collected[0] + collected[1],
            key=SolutionRecord.sort_key,
        )
        assert merged_a == merged_b
        arch = run_pirs(small_ds, cfg, seeds=[1, 2, 3])
        assert list(arch.records) == merged_a

    def test_equal_fitness_records_both_retained(self):
        a = SolutionRecord((0.5,), -1.0, 1, 1, 0, 1, "aa")
        b = SolutionRecord((0.7,), -1.0, 1, 1, 1, 2, "bb")
        merged = sorted([a, b], key=SolutionRecord.sort_key)
        assert len(merged) == 2

    def test_pareto_non_domination(self, small_ds):
        arch = run_pirs(small_ds, quick_config(budget=800), seeds=[1, 2])
        assert arch.pareto
        for rec in arch.pareto:
            for other in arch.records:
                strictly_better = (
                    other.n_d <= rec.n_d
                    and other.n_h <= rec.n_h
                    and (other.n_d < rec.n_d or other.n_h < rec.n_h)
                )
                assert not strictly_better

    def test_pareto_points_unique_and_sorted(self):
        recs = [
            SolutionRecord((0.1,), -2.0, 2, 1, 0, 1, "a"),
            SolutionRecord((0.2,), -2.0, 2, 1, 1, 1, "b"),
            SolutionRecord((0.3,), -3.0, 1, 3, 0, 1, "c"),
            SolutionRecord((0.4,), -9.0, 9, 9, 0, 1, "d"),
        ]
        front = pareto_front(recs)
        points = [(r.n_d, r.n_h) for r in front]
        assert points == [(1, 2), (3, 1)]
        assert front[0].plan_digest == "a"

    def test_early_stop_skips_later_pirs(self, small_ds):
        cfg = quick_config(budget=100_000, target_fitness=-1e9)
        arch = run_pirs(small_ds, cfg, seeds=[5, 6, 7])
        assert {r.pir_id for r in arch.records} == {0}


class TestPlanDigest:
    def test_digest_covers_dataset_and_slots(self, small_ds):
        plan = AllocationPlan(tuple([0] * small_ds.n_requests()))
        d1 = plan_digest(small_ds, plan.slots)
        other = small_ds.with_taxonomy({20: 0.5})
        assert plan_digest(other, plan.slots) != d1
        slots2 = (1,) + plan.slots[1:]
        assert plan_digest(small_ds, slots2) != d1
