import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lockdownsched.allocation import (
    AllocationPlan,
    bound_value,
    bound_vector,
    decode,
    read_plan_csv,
    round_robin,
    validate_plan,
    write_plan_csv,
)
from lockdownsched.dataset import WINDOWS, parse_dataset

TEXT = """
1 20 9.5 0 MF1:AD2 | NF1 | PC1:MS2
2 40 6.0 1 PF2 | MF1:NR1 | AF1
3 70 4.5 0 MP1 | | NS1
"""


@pytest.fixture()
def ds():
    return parse_dataset(TEXT)


def test_bound_value_examples():
    assert bound_value(-21.27625) == pytest.approx(0.27625)
    assert bound_value(29.00000) == pytest.approx(0.0001)
    assert bound_value(0.5) == 0.5
    assert bound_value(-0.25) == 0.25
    assert bound_value(0.0) == 0.0001
    with pytest.raises(ValueError):
        bound_value(math.inf)
    with pytest.raises(ValueError):
        bound_value(math.nan)


@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_bound_value_always_open_interval(x):
    v = bound_value(x)
    assert 0.0 < v < 1.0


def test_bound_vector_limits():
    assert bound_vector([1.5, -2.25]) == (0.5, 0.25)
    with pytest.raises(ValueError):
        bound_vector([])
    with pytest.raises(ValueError):
        bound_vector([0.5] * 10_001)


def test_decode_window_examples(ds):
    # request order: person 1 day 0 = MF1, AD2; the A value 0.2763 sits in
    # the third eighth of the day
    plan = decode([0.9, 0.2763, 0.5], ds)
    assert plan.slots[0] == 1
    assert plan.slots[1] == 2


def test_decode_cycles_vector(ds):
    plan = decode([0.1, 0.6], ds)
    # 11 requests consume v1,v2,v1,... so equal windows repeat slots
    assert len(plan.slots) == 11
    # person 1 MF1 (v=0.1 -> 0) then AD2 (v=0.6 -> 4), NF1 (v=0.1 -> 5)
    assert plan.slots[0] == 0
    assert plan.slots[1] == 4
    assert plan.slots[2] == 5


def test_decode_always_valid(ds):
    for vec in ([0.0001], [0.9999], [0.5, 0.001, 0.999]):
        validate_plan(decode(vec, ds), ds)


@given(st.lists(st.floats(min_value=0.0001, max_value=0.9999), min_size=1, max_size=7))
def test_decode_valid_for_any_bounded_vector(vec):
    ds = parse_dataset(TEXT)
    validate_plan(decode(vec, ds), ds)


def test_round_robin_comp1(ds):
    plan = round_robin(ds, "comp1")
    # MF1 AD2 NF1 PC1 MS2 / PF2 MF1 NR1 AF1 / MP1 NS1
    assert plan.slots == (0, 0, 5, 2, 0, 2, 0, 5, 0, 0, 5)[: len(plan.slots)]
    assert set(plan.slots) == {0, 2, 5}


def test_round_robin_comp2_alternates_per_day(ds):
    plan = round_robin(ds, "comp2")
    m = plan.as_map(ds)
    # Monday M-class order: person 1 MF1, person 1 AD2, person 2 PF2(P),
    # person 3 MP1 -> M-class sees MF1, AD2, MP1 -> 0, 1, 0
    assert m[(1, 0, 0)] == 0
    assert m[(1, 0, 1)] == 1
    assert m[(3, 0, 0)] == 0
    # afternoons alternate 2, 4
    assert m[(2, 0, 0)] == 2
    # Tuesday counters restart
    assert m[(2, 1, 0)] == 0


def test_round_robin_comp3_cycles(ds):
    plan = round_robin(ds, "comp3")
    m = plan.as_map(ds)
    # Monday M-class: MF1, AD2, MP1 -> 0, 1, 0 (two thirds to the first slot)
    assert (m[(1, 0, 0)], m[(1, 0, 1)], m[(3, 0, 0)]) == (0, 1, 0)
    # night requests cycle 5, 6, 7 across days independently
    assert m[(1, 1, 0)] == 5


def test_round_robin_three_m_requests_split():
    ds3 = parse_dataset("1 20 9.0 0 MF1:MF2:MC1 | |\n")
    plan = round_robin(ds3, "comp3")
    assert plan.slots == (0, 1, 0)
    plan2 = round_robin(ds3, "comp2")
    assert plan2.slots == (0, 1, 0)


def test_round_robin_unknown_variant(ds):
    with pytest.raises(ValueError):
        round_robin(ds, "comp4")


def test_validate_rejects_bad_plans(ds):
    with pytest.raises(ValueError):
        validate_plan(AllocationPlan((0,) * (ds.n_requests() - 1)), ds)
    bad = list(round_robin(ds, "comp1").slots)
    bad[2] = 0  # NF1 forced into the morning
    with pytest.raises(ValueError):
        validate_plan(AllocationPlan(tuple(bad)), ds)


def test_plan_csv_round_trip(tmp_path, ds):
    plan = round_robin(ds, "comp3")
    path = tmp_path / "plan.csv"
    write_plan_csv(plan, ds, path)
    assert read_plan_csv(ds, path) == plan
    text = path.read_text()
    assert "SUPERMARKET 1, 8-10 HOURS" in text
    assert "DOCTOR'S SURGERY 2" in text


def test_plan_csv_rejects_mismatched_dataset(tmp_path, ds):
    plan = round_robin(ds, "comp1")
    path = tmp_path / "plan.csv"
    write_plan_csv(plan, ds, path)
    other = parse_dataset("1 20 9.5 0 MF1 | |\n")
    with pytest.raises(ValueError):
        read_plan_csv(other, path)


def test_windows_match_slot_layout():
    assert WINDOWS["M"] == (0, 2)
    assert WINDOWS["P"] == (2, 3)
    assert WINDOWS["N"] == (5, 3)
    assert WINDOWS["A"] == (0, 8)
