"""Compiled simulation kernels over flat arrays.

The plain-Python engine in simulator.py is the readable reference; these
kernels replay the exact same arithmetic, in the exact same order, over
preassembled numpy arrays so that a full three-day run costs microseconds
instead of milliseconds.  Evolution evaluates hundreds of thousands of
plans, so this is the hot path.  Falls back to pure Python when numba is
unavailable (slow but identical).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba present in normal installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


from .dataset import (
    AGE_GROUPS,
    IMMUNE,
    INFECTED,
    N_DAYS,
    N_ESTABLISHMENTS,
    N_SLOTS,
    Dataset,
    request_index,
)
from .partial_infection import g_factor

N_CELLS = N_DAYS * N_SLOTS * N_ESTABLISHMENTS
N_TRAJ_ROWS = N_DAYS * (N_SLOTS // 2)
N_GROUPS = len(AGE_GROUPS)


@njit(cache=True)
def _bound_kernel(raw):
    out = np.empty_like(raw)
    for i in range(raw.shape[0]):
        x = raw[i]
        if x < 0.0:
            x = -x
        v = x % 1.0
        if v <= 0.0:
            v = 0.0001
        out[i] = v
    return out


@njit(cache=True)
def _decode_kernel(vector, window_base, window_width):
    nr = window_base.shape[0]
    out = np.empty(nr, np.int64)
    length = vector.shape[0]
    pos = 0
    for r in range(nr):
        v = vector[pos]
        pos += 1
        if pos == length:
            pos = 0
        w = window_width[r]
        k = int(v * w)
        if k > w - 1:
            k = w - 1
        out[r] = window_base[r] + k
    return out


@njit(cache=True)
def _sort_requests(req_person, req_day, req_slot, req_est):
    """Stable counting sort of requests into (day, slot, establishment) cells.

    Returns (bounds, order): cell c holds requests order[bounds[c]:bounds[c+1]]
    in canonical request order.
    """
    nr = req_person.shape[0]
    bounds = np.zeros(N_CELLS + 1, np.int64)
    keys = np.empty(nr, np.int64)
    for r in range(nr):
        k = (req_day[r] * N_SLOTS + req_slot[r]) * N_ESTABLISHMENTS + req_est[r]
        keys[r] = k
        bounds[k + 1] += 1
    for c in range(N_CELLS):
        bounds[c + 1] += bounds[c]
    order = np.empty(nr, np.int64)
    fill = bounds[:N_CELLS].copy()
    for r in range(nr):
        k = keys[r]
        order[fill[k]] = r
        fill[k] += 1
    return bounds, order


@njit(cache=True)
def _partial_kernel(
    req_person,
    req_day,
    req_slot,
    req_est,
    levels0,
    health,
    age_idx,
    person_id,
    group_counts,
    gcoef,
    iso_high,
    iso_low,
    out_thr,
    immune_above,
    recover_above,
):
    n = levels0.shape[0]
    bounds, order = _sort_requests(req_person, req_day, req_slot, req_est)

    levels = levels0.copy()
    isolated = np.zeros(n, np.bool_)
    iso_day = np.full(n, -1, np.int64)
    seen = np.full(n, -1, np.int64)
    member = np.empty(n, np.int64)
    ranked = np.empty(n, np.float64)
    occupancy = np.zeros((N_DAYS, N_SLOTS, N_ESTABLISHMENTS), np.int64)
    trajectory = np.zeros((N_TRAJ_ROWS, N_GROUPS), np.float64)
    traj_row = 0

    for day in range(N_DAYS):
        for slot in range(N_SLOTS):
            for est in range(N_ESTABLISHMENTS):
                cell = (day * N_SLOTS + slot) * N_ESTABLISHMENTS + est
                lo = bounds[cell]
                hi = bounds[cell + 1]
                if hi == lo:
                    continue
                m = 0
                for t in range(lo, hi):
                    pi = req_person[order[t]]
                    if isolated[pi] or seen[pi] == cell:
                        continue
                    seen[pi] = cell
                    member[m] = pi
                    m += 1
                occupancy[day, slot, est] = m
                if m < 2:
                    continue
                n_inf = 0
                all_full = True
                for t in range(m):
                    lv = levels[member[t]]
                    if lv > 0.0:
                        n_inf += 1
                    if lv < 1.0:
                        all_full = False
                if n_inf == 0 or all_full:
                    continue
                if n_inf == m:
                    owner = 0
                    for t in range(1, m):
                        a = member[t]
                        b = member[owner]
                        if levels[a] < levels[b] or (
                            levels[a] == levels[b] and person_id[a] < person_id[b]
                        ):
                            owner = t
                    s_max = 1.0 - levels[member[owner]]
                    cnt = 0
                    for t in range(m):
                        if t == owner:
                            continue
                        ranked[cnt] = levels[member[t]]
                        cnt += 1
                else:
                    s_max = 1.0
                    cnt = 0
                    for t in range(m):
                        lv = levels[member[t]]
                        if lv > 0.0:
                            ranked[cnt] = lv
                            cnt += 1
                # stable insertion sort, descending, to mirror sorted(...)
                for a in range(1, cnt):
                    v = ranked[a]
                    b = a - 1
                    while b >= 0 and ranked[b] < v:
                        ranked[b + 1] = ranked[b]
                        b -= 1
                    ranked[b + 1] = v
                pressure = 0.0
                for j in range(cnt):
                    pressure += s_max * ranked[j] * gcoef[j]
                if pressure == 0.0:
                    continue
                for t in range(m):
                    pi = member[t]
                    levels[pi] = pressure * (1.0 - levels[pi]) + levels[pi]
            if slot % 2 == 1:
                for g in range(N_GROUPS):
                    trajectory[traj_row, g] = 0.0
                for pi in range(n):
                    trajectory[traj_row, age_idx[pi]] += levels[pi]
                for g in range(N_GROUPS):
                    if group_counts[g] > 0:
                        trajectory[traj_row, g] /= group_counts[g]
                traj_row += 1
        for pi in range(n):
            if isolated[pi]:
                continue
            lv = levels[pi]
            g = age_idx[pi]
            if lv > iso_high[g] or (
                lv > iso_low[g] and lv <= iso_high[g] and health[pi] <= 7.0
            ):
                isolated[pi] = True
                iso_day[pi] = day

    class_code = np.zeros(n, np.int8)
    n_h = 0
    n_d = 0
    for pi in range(n):
        g = age_idx[pi]
        if levels[pi] > out_thr[g]:
            if health[pi] > immune_above[g]:
                class_code[pi] = 1
            elif health[pi] > recover_above[g]:
                class_code[pi] = 2
                n_h += 1
            else:
                class_code[pi] = 3
                n_d += 1
    return levels, iso_day, class_code, occupancy, trajectory, n_h, n_d


@njit(cache=True)
def _full_kernel(
    req_person,
    req_day,
    req_slot,
    req_est,
    status0,
    health,
    age_idx,
    person_id,
    probs,
    day1_health,
    day2_health,
    immune_above,
    recover_above,
):
    n = status0.shape[0]
    bounds, order = _sort_requests(req_person, req_day, req_slot, req_est)

    status = status0.copy()
    days = np.zeros(n, np.int64)
    isolated = np.zeros(n, np.bool_)
    iso_day = np.full(n, -1, np.int64)
    seen = np.full(n, -1, np.int64)
    member = np.empty(n, np.int64)
    sus = np.empty(n, np.int64)
    occupancy = np.zeros((N_DAYS, N_SLOTS, N_ESTABLISHMENTS), np.int64)
    max_n = probs.shape[0]

    for day in range(N_DAYS):
        for slot in range(N_SLOTS):
            for est in range(N_ESTABLISHMENTS):
                cell = (day * N_SLOTS + slot) * N_ESTABLISHMENTS + est
                lo = bounds[cell]
                hi = bounds[cell + 1]
                if hi == lo:
                    continue
                m = 0
                for t in range(lo, hi):
                    pi = req_person[order[t]]
                    if isolated[pi] or seen[pi] == cell:
                        continue
                    seen[pi] = cell
                    member[m] = pi
                    m += 1
                occupancy[day, slot, est] = m
                if m < 2:
                    continue
                n_inf = 0
                ns = 0
                for t in range(m):
                    st = status[member[t]]
                    if st == 1:
                        n_inf += 1
                    elif st == 0:
                        sus[ns] = member[t]
                        ns += 1
                if n_inf == 0 or ns == 0:
                    continue
                if n_inf > max_n:
                    p = 1.0
                else:
                    p = probs[n_inf - 1]
                k = int(p * ns)
                if k <= 0:
                    continue
                # infect the k susceptibles with the lowest person ids
                for a in range(1, ns):
                    v = sus[a]
                    b = a - 1
                    while b >= 0 and person_id[sus[b]] > person_id[v]:
                        sus[b + 1] = sus[b]
                        b -= 1
                    sus[b + 1] = v
                for t in range(k):
                    status[sus[t]] = 1
                    days[sus[t]] = 0
        for pi in range(n):
            # the infection clock keeps counting even in isolation
            if status[pi] == 1:
                days[pi] += 1
            if isolated[pi] or status[pi] != 1:
                continue
            g = age_idx[pi]
            if (days[pi] > 1 and health[pi] < day1_health[g]) or (
                days[pi] > 2 and health[pi] < day2_health[g]
            ):
                isolated[pi] = True
                iso_day[pi] = day

    class_code = np.zeros(n, np.int8)
    n_h = 0
    n_d = 0
    for pi in range(n):
        if status[pi] != 1:
            continue
        g = age_idx[pi]
        if health[pi] > immune_above[g]:
            class_code[pi] = 1
        elif health[pi] > recover_above[g]:
            class_code[pi] = 2
            n_h += 1
        else:
            class_code[pi] = 3
            n_d += 1
    return status, days, iso_day, class_code, occupancy, n_h, n_d


class SimContext:
    """Precompiled arrays for repeated simulation of one dataset + model."""

    __slots__ = (
        "ds",
        "model",
        "s",
        "table",
        "n_persons",
        "n_requests",
        "req_person",
        "req_day",
        "req_est",
        "window_base",
        "window_width",
        "person_id",
        "age_idx",
        "health",
        "group_counts",
        "levels0",
        "status0",
        "gcoef",
        "probs",
        "rule_arrays",
    )


def build_context(ds: Dataset, model: str, *, s=None, table=None) -> SimContext:
    from .simulator import FULL_RULES, MODEL_FULL, MODEL_PARTIAL, PARTIAL_RULES

    ri = request_index(ds)
    ctx = SimContext()
    ctx.ds = ds
    ctx.model = model
    ctx.s = s
    ctx.table = table
    ctx.n_persons = ri.n_persons
    ctx.n_requests = ri.n_requests
    ctx.req_person = ri.person.astype(np.int64)
    ctx.req_day = ri.day.astype(np.int64)
    ctx.req_est = ri.establishment.astype(np.int64)
    ctx.window_base = ri.window_base.astype(np.int64)
    ctx.window_width = ri.window_width.astype(np.int64)
    ctx.person_id = ri.person_id.astype(np.int64)
    age_index = {age: i for i, age in enumerate(AGE_GROUPS)}
    ctx.age_idx = np.array(
        [age_index[p.age_group] for p in ds.persons], dtype=np.int64
    )
    ctx.health = ri.health.astype(np.float64)
    ctx.group_counts = np.bincount(ctx.age_idx, minlength=N_GROUPS).astype(np.int64)

    if model == MODEL_PARTIAL:
        if s is None or s < 2:
            raise ValueError("fractional model needs s >= 2")
        ctx.levels0 = np.array(
            [float(ds.taxonomy_infection.get(p.age_group, 0.0)) for p in ds.persons],
            dtype=np.float64,
        )
        ctx.status0 = None
        # same Python expression as the reference, so the bits agree
        ctx.gcoef = np.array(
            [g_factor(s, j) for j in range(1, ctx.n_persons + 2)], dtype=np.float64
        )
        ctx.probs = None
        rules = [PARTIAL_RULES[a] for a in AGE_GROUPS]
        ctx.rule_arrays = (
            np.array([r.iso_high for r in rules]),
            np.array([r.iso_low for r in rules]),
            np.array([r.out_threshold for r in rules]),
            np.array(
                [np.inf if r.immune_above is None else r.immune_above for r in rules]
            ),
            np.array([r.recover_above for r in rules]),
        )
    elif model == MODEL_FULL:
        if table is None:
            raise ValueError("standard model needs a meeting-probability table")
        status0 = np.zeros(ctx.n_persons, dtype=np.int8)
        for i, p in enumerate(ds.persons):
            if p.immunity_flag == INFECTED:
                status0[i] = 1
            elif p.immunity_flag == IMMUNE:
                status0[i] = 2
        ctx.status0 = status0
        ctx.levels0 = None
        ctx.gcoef = None
        ctx.probs = np.array(table.probs, dtype=np.float64)
        rules = [FULL_RULES[a] for a in AGE_GROUPS]
        ctx.rule_arrays = (
            np.array([r.day1_health for r in rules]),
            np.array([r.day2_health for r in rules]),
            np.array(
                [np.inf if r.immune_above is None else r.immune_above for r in rules]
            ),
            np.array([r.recover_above for r in rules]),
        )
    else:
        raise ValueError(f"unknown model {model!r}")
    return ctx


def decode_slots(ctx: SimContext, bounded_vector) -> np.ndarray:
    vec = np.ascontiguousarray(bounded_vector, dtype=np.float64)
    return _decode_kernel(vec, ctx.window_base, ctx.window_width)


def bound_array(raw_vector) -> np.ndarray:
    vec = np.ascontiguousarray(raw_vector, dtype=np.float64)
    return _bound_kernel(vec)


def run_slots(ctx: SimContext, slots: np.ndarray):
    """Raw kernel outputs for a slot assignment (one entry per request)."""
    req_slot = np.ascontiguousarray(slots, dtype=np.int64)
    if ctx.model == "partial":
        return _partial_kernel(
            ctx.req_person,
            ctx.req_day,
            req_slot,
            ctx.req_est,
            ctx.levels0,
            ctx.health,
            ctx.age_idx,
            ctx.person_id,
            ctx.group_counts,
            ctx.gcoef,
            *ctx.rule_arrays,
        )
    return _full_kernel(
        ctx.req_person,
        ctx.req_day,
        req_slot,
        ctx.req_est,
        ctx.status0,
        ctx.health,
        ctx.age_idx,
        ctx.person_id,
        ctx.probs,
        *ctx.rule_arrays,
    )


def counts_for_slots(ctx: SimContext, slots: np.ndarray) -> tuple:
    """(N_H, N_D) fast path used by the evolutionary loop."""
    out = run_slots(ctx, slots)
    return int(out[-2]), int(out[-1])


def simulate_outcome(ds: Dataset, plan, model: str, *, s=None, table=None):
    """Kernel-backed equivalent of simulator.simulate(engine="reference")."""
    from .full_infection import Status
    from .simulator import MODEL_PARTIAL, OUTCOME_LABELS, SimOutcome

    ctx = build_context(ds, model, s=s, table=table)
    slots = np.asarray(plan.slots, dtype=np.int64)

    def iso_sets(iso_day):
        by_day = [set() for _ in range(N_DAYS)]
        for pi, d in enumerate(iso_day):
            if d >= 0:
                by_day[d].add(ds.persons[pi].id)
        return tuple(frozenset(day) for day in by_day)

    if model == MODEL_PARTIAL:
        levels, iso_day, codes, occupancy, trajectory, n_h, n_d = run_slots(ctx, slots)
        return SimOutcome(
            model=model,
            n_hospitalized=int(n_h),
            n_dead=int(n_d),
            isolated_by_day=iso_sets(iso_day),
            classifications=tuple(OUTCOME_LABELS[c] for c in codes),
            final_levels=tuple(float(v) for v in levels),
            final_status=None,
            trajectory=tuple(tuple(float(v) for v in row) for row in trajectory),
            occupancy=tuple(
                tuple(tuple(int(v) for v in slot_row) for slot_row in day)
                for day in occupancy
            ),
        )

    status, days, iso_day, codes, occupancy, n_h, n_d = run_slots(ctx, slots)
    status_names = {0: Status.S.name, 1: Status.I.name, 2: Status.R.name}
    return SimOutcome(
        model=model,
        n_hospitalized=int(n_h),
        n_dead=int(n_d),
        isolated_by_day=iso_sets(iso_day),
        classifications=tuple(OUTCOME_LABELS[c] for c in codes),
        final_levels=None,
        final_status=tuple(
            (status_names[int(st)], int(d)) for st, d in zip(status, days)
        ),
        trajectory=None,
        occupancy=tuple(
            tuple(tuple(int(v) for v in slot_row) for slot_row in day)
            for day in occupancy
        ),
    )
