"""Whole-person infection model driven by a Monte Carlo co-location table.

A 7200-second stay in a venue of 400 cells (300 quick 2 s passages, 50 slow
30 s stops, 50 lingering 102 s stops) is sampled q times for one susceptible
and 20 infected visitors.  p_n is the chance the susceptible shared a cell
with at least one of the first n infected in at least one of the q trials.
Transmission per encounter then truncates p_n times the susceptible count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

import numpy as np

MAX_TABLE_N = 20
RAW_RANGE = 7200


class Status(IntEnum):
    S = 0
    I = 1
    R = 2


@dataclass(frozen=True, slots=True)
class InfectionStatus:
    status: Status
    days_infected: int = 0


def cell_of(i: int) -> int:
    """Map a raw draw in [1, 7200] to a dwell-weighted cell number."""
    if i <= 600:
        return i // 2
    if i <= 2100:
        return 300 + (i - 600) // 30
    return 350 + (i - 2100) // 102


@lru_cache(maxsize=1)
def cell_probabilities() -> np.ndarray:
    """Exact cell distribution implied by cell_of over the 7200 raw values."""
    counts = np.zeros(max(cell_of(i) for i in range(1, RAW_RANGE + 1)) + 1)
    for i in range(1, RAW_RANGE + 1):
        counts[cell_of(i)] += 1
    return counts / RAW_RANGE


def analytic_pn(n: int, q: int) -> float:
    """Closed-form meeting probability, the oracle for the sampled table."""
    p = cell_probabilities()
    miss_one_trial = float(np.sum(p * (1.0 - p) ** n))
    return 1.0 - miss_one_trial ** q


@dataclass(frozen=True)
class PnTable:
    q: int
    iterations: int
    seed: int
    probs: tuple  # p_1 .. p_20

    def p_for(self, n: int) -> float:
        if n < 1:
            return 0.0
        if n > MAX_TABLE_N:
            return 1.0
        return self.probs[n - 1]

    def save(self, path) -> None:
        payload = {"q": self.q, "iterations": self.iterations, "seed": self.seed,
                   "probs": list(self.probs)}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PnTable":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(payload["q"], payload["iterations"], payload["seed"],
                   tuple(payload["probs"]))


def build_pn_table(q: int, iterations: int = 100_000, seed: int = 0) -> PnTable:
    """Estimate p_1..p_20 by simulating the 21-person venue visits."""
    if q < 1:
        raise ValueError("q must be at least 1")
    rng = np.random.default_rng(seed)
    met_counts = np.zeros(MAX_TABLE_N, dtype=np.int64)
    batch = max(1, min(iterations, 4_000_000 // (q * (MAX_TABLE_N + 1))))
    done = 0
    while done < iterations:
        m = min(batch, iterations - done)
        raw = rng.integers(1, RAW_RANGE + 1, size=(m, q, MAX_TABLE_N + 1), dtype=np.int32)
        cells = np.where(
            raw <= 600, raw // 2,
            np.where(raw <= 2100, 300 + (raw - 600) // 30, 350 + (raw - 2100) // 102),
        )
        # met[iter, trial, k]: infected k shared a cell with the susceptible
        met = cells[:, :, 1:] == cells[:, :, :1]
        met_any_trial = met.any(axis=1)
        # once any of the first n met, all larger n count the iteration too
        met_first_n = np.logical_or.accumulate(met_any_trial, axis=1)
        met_counts += met_first_n.sum(axis=0)
        done += m
    return PnTable(q, iterations, seed, tuple(met_counts / iterations))


def load_or_build_pn_table(q: int, iterations: int, seed: int, cache_path) -> PnTable:
    """Reuse a cached table when its (q, iterations, seed) key matches."""
    try:
        table = PnTable.load(cache_path)
        if (table.q, table.iterations, table.seed) == (q, iterations, seed):
            return table
    except (OSError, ValueError, KeyError):
        pass
    table = build_pn_table(q, iterations, seed)
    table.save(cache_path)
    return table


def transmit(encounter, table: PnTable) -> set:
    """Ids of susceptibles infected by one encounter.

    encounter: sequence of (person id, InfectionStatus).  Nothing happens in
    gatherings of fewer than two, or without both sides present.
    """
    if len(encounter) < 2:
        return set()
    infected = [pid for pid, st in encounter if st.status == Status.I]
    susceptible = sorted(pid for pid, st in encounter if st.status == Status.S)
    if not infected or not susceptible:
        return set()
    p = table.p_for(len(infected))
    k = int(p * len(susceptible))
    return set(susceptible[:k])
