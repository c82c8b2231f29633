import numpy as np
import pytest

from lockdownsched.full_infection import (
    InfectionStatus,
    PnTable,
    Status,
    analytic_pn,
    build_pn_table,
    cell_of,
    cell_probabilities,
    load_or_build_pn_table,
    transmit,
)


def test_cell_mapping_boundaries():
    assert cell_of(1) == 0
    assert cell_of(2) == 1
    assert cell_of(599) == 299
    assert cell_of(600) == 300
    assert cell_of(601) == 300
    assert cell_of(629) == 300
    assert cell_of(630) == 301
    assert cell_of(2100) == 350
    assert cell_of(2101) == 350
    assert cell_of(7199) == 399


def test_cell_distribution_structure():
    p = cell_probabilities()
    counts = (p * 7200).round().astype(int)
    assert counts.sum() == 7200
    assert counts[0] == 1
    assert all(counts[1:300] == 2)
    assert all(counts[300:350] == 30)
    assert all(counts[350:400] == 102)


def test_analytic_oracle_reference_points():
    # per-trial co-location chance is about 0.0109, so with one infected and
    # forty trials the meeting probability sits near 0.356
    assert analytic_pn(1, 40) == pytest.approx(0.3557, abs=2e-3)
    assert analytic_pn(9, 30) == pytest.approx(0.947, abs=5e-3)
    assert analytic_pn(1, 5) < analytic_pn(1, 40)


def test_build_table_deterministic_and_monotone():
    t1 = build_pn_table(5, iterations=20_000, seed=11)
    t2 = build_pn_table(5, iterations=20_000, seed=11)
    assert t1 == t2
    probs = np.array(t1.probs)
    assert len(probs) == 20
    assert (np.diff(probs) >= 0).all()
    assert (probs <= 1).all() and (probs >= 0).all()
    t3 = build_pn_table(5, iterations=20_000, seed=12)
    assert t3 != t1


def test_build_table_close_to_oracle_small_run():
    table = build_pn_table(10, iterations=30_000, seed=3)
    for n in (1, 5, 20):
        assert table.p_for(n) == pytest.approx(analytic_pn(n, 10), abs=0.02)


def test_p_for_out_of_range():
    table = PnTable(5, 1, 0, tuple(0.05 * i for i in range(1, 21)))
    assert table.p_for(21) == 1.0
    assert table.p_for(40) == 1.0
    assert table.p_for(0) == 0.0
    with pytest.raises(ValueError):
        build_pn_table(0, iterations=10, seed=1)


def test_table_cache_round_trip(tmp_path):
    path = tmp_path / "pn.json"
    table = build_pn_table(5, iterations=5_000, seed=7)
    table.save(path)
    assert PnTable.load(path) == table
    assert load_or_build_pn_table(5, 5_000, 7, path) == table
    rebuilt = load_or_build_pn_table(5, 5_000, 8, path)
    assert rebuilt.seed == 8
    assert PnTable.load(path) == rebuilt


def infected(pid, days=0):
    return (pid, InfectionStatus(Status.I, days))


def susceptible(pid):
    return (pid, InfectionStatus(Status.S))


def immune(pid):
    return (pid, InfectionStatus(Status.R))


def table_with(probs_by_n):
    probs = [0.0] * 20
    for n, p in probs_by_n.items():
        probs[n - 1] = p
    return PnTable(5, 1, 0, tuple(probs))


def test_transmit_truncation_keeps_lone_susceptible_safe():
    table = table_with({9: 0.947})
    enc = [infected(i) for i in range(9)] + [susceptible(100)]
    assert transmit(enc, table) == set()


def test_transmit_no_action_cases():
    table = table_with({1: 0.9, 2: 0.9})
    assert transmit([susceptible(1)], table) == set()
    assert transmit([susceptible(1), susceptible(2)], table) == set()
    assert transmit([infected(1), infected(2)], table) == set()
    assert transmit([immune(1), immune(2)], table) == set()
    assert transmit([infected(1), immune(2)], table) == set()
    assert transmit([susceptible(1), immune(2)], table) == set()


def test_transmit_above_table_range_infects_everyone():
    table = table_with({})
    enc = [infected(i) for i in range(25)] + [susceptible(100 + i) for i in range(4)]
    assert transmit(enc, table) == {100, 101, 102, 103}


def test_transmit_floor_and_id_order():
    table = table_with({2: 0.66})
    enc = [infected(0), infected(1), susceptible(12), susceptible(4), susceptible(9)]
    # floor(0.66 * 3) = 1, lowest id first
    assert transmit(enc, table) == {4}
    table = table_with({2: 0.67})
    assert transmit(enc, table) == {4, 9}


def test_transmit_never_touches_immune():
    table = table_with({1: 1.0})
    enc = [infected(0), immune(1), susceptible(2)]
    assert transmit(enc, table) == {2}
