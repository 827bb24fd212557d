"""Protocol execution engine and verification oracles."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np

from .core import (
    DEFAULT_SHUFFLE_CAP,
    Dataset,
    EnumerationCapExceeded,
    InvariantViolation,
    Message,
    RateRecord,
    Shuffle,
    batch,
    count_shuffles,
    enumerate_shuffles,
    make_dataset,
    random_shuffle,
)
from .schemes import HalfMap, MemoryShare, Scheme

log = logging.getLogger(__name__)

DEFAULT_MAX_PAIRS = 100_000


# -- invariant checks --------------------------------------------------------

def check_budget(states) -> None:
    for st in states:
        used = st.stored_bits()
        if used > st.budget_bits:
            raise InvariantViolation("budget", f"worker {st.worker_id} stores {used} > {st.budget_bits} bits")


def check_processing(states, shuffle: Shuffle, data: Dataset) -> None:
    """Each worker can read its whole batch, bit-exact, from its own storage."""
    for k, st in enumerate(states):
        held = st.processing
        if tuple(sorted(held)) != batch(shuffle, k):
            raise InvariantViolation("processing", f"worker {k} holds batch {sorted(held)}")
        for p, vec in held.items():
            if not np.array_equal(vec, data.point(p)):
                raise InvariantViolation("processing", f"worker {k} has a corrupted copy of point {p}")


def verify_structural_invariance(states, half_map: HalfMap, shuffle: Shuffle, data: Dataset) -> bool:
    """True iff every point sits in full at its processor and as one of two
    complementary, ground-truth-exact halves at each other worker."""
    d = data.dim_bits
    if half_map.processor != shuffle.assignment or half_map.dim_bits != d:
        return False
    for p in range(data.n_points):
        ranges = sorted(half_map.halves[p].values())
        if ranges != [(0, d // 2), (d // 2, d)]:
            return False
    for k, st in enumerate(states):
        if tuple(sorted(st.processing)) != batch(shuffle, k):
            return False
        for p, vec in st.processing.items():
            if not np.array_equal(vec, data.point(p)):
                return False
        expected = {p for p in range(data.n_points) if shuffle.assignment[p] != k}
        if {f.point_id for f in st.excess} != expected:
            return False
        for frag, vec in st.excess.items():
            if (frag.dim_lo, frag.dim_hi) != half_map.half_of(frag.point_id, k):
                return False
            if not np.array_equal(vec, data.point(frag.point_id)[frag.dim_lo : frag.dim_hi]):
                return False
    return True


def check_structure(scheme: Scheme, states, layout, shuffle: Shuffle, data: Dataset) -> None:
    """Structural check wherever a half map is in play, including inside
    memory-sharing slices."""
    if isinstance(scheme, MemoryShare):
        cut = scheme.split_at(data.dim_bits)
        check_structure(scheme.inner_a, [s.low for s in states], layout[0], shuffle, data.slice_dims(0, cut))
        check_structure(
            scheme.inner_b, [s.high for s in states], layout[1], shuffle, data.slice_dims(cut, data.dim_bits)
        )
    elif isinstance(layout, HalfMap):
        if not verify_structural_invariance(states, layout, shuffle, data):
            raise InvariantViolation("structural-invariance", f"after shuffle {shuffle}")


# -- one transition ----------------------------------------------------------

def transition(scheme: Scheme, data: Dataset, states, layout, s_t: Shuffle, s_t1: Shuffle):
    """Deliver, decode at every worker, update every worker, and check it all.

    Returns ``(message, new_states, new_layout)``.
    """
    msg = scheme.deliver(data, states, layout, s_t, s_t1)
    expected_layout = scheme.advance_layout(layout, s_t, s_t1)
    new_states = []
    for k, st in enumerate(states):
        got = scheme.decode(st, layout, msg, s_t, s_t1)
        want = batch(s_t1, k)
        if tuple(sorted(got)) != want:
            raise InvariantViolation("decodability", f"worker {k} decoded ids {sorted(got)}, wants {want}")
        for p in want:
            if not np.array_equal(got[p], data.point(p)):
                raise InvariantViolation("decodability", f"worker {k} decoded point {p} wrong")
        new, lay = scheme.update(st, layout, msg, s_t, s_t1)
        if not _same_layout(lay, expected_layout):
            raise InvariantViolation("layout", f"worker {k} disagrees on the new layout")
        new_states.append(new)
    check_budget(new_states)
    check_processing(new_states, s_t1, data)
    check_structure(scheme, new_states, expected_layout, s_t1, data)
    return msg, new_states, expected_layout


def _same_layout(a, b) -> bool:
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(_same_layout(x, y) for x, y in zip(a, b))
    return a == b


# -- chains ------------------------------------------------------------------

@dataclass
class SimulationRun:
    scheme: Scheme
    dataset: Dataset
    shuffle: Shuffle
    states: list
    layout: Any
    history: list[RateRecord] = field(default_factory=list)

    @classmethod
    def start(cls, scheme: Scheme, data: Dataset, s0: Shuffle) -> SimulationRun:
        states, layout = scheme.place(data, s0)
        check_budget(states)
        check_processing(states, s0, data)
        check_structure(scheme, states, layout, s0, data)
        return cls(scheme, data, s0, list(states), layout)

    def storage_bits(self) -> list[int]:
        return [st.stored_bits() for st in self.states]


def step(run: SimulationRun, next_shuffle: Shuffle) -> RateRecord:
    msg, states, layout = transition(run.scheme, run.dataset, run.states, run.layout, run.shuffle, next_shuffle)
    record = RateRecord.from_message(len(run.history) + 1, msg)
    run.states, run.layout, run.shuffle = states, layout, next_shuffle
    run.history.append(record)
    return record


def start_chain(scheme: Scheme, n: int, d: int, seed: int) -> tuple[SimulationRun, np.random.Generator]:
    if scheme.n_points != n:
        raise ValueError(f"{scheme} is built for N={scheme.n_points}, not {n}")
    scheme.check_dims(d)
    data = make_dataset(n, d, seed)
    rng = np.random.default_rng([seed, 1])
    run = SimulationRun.start(scheme, data, random_shuffle(n, scheme.k_workers, rng))
    return run, rng


def run_chain(scheme: Scheme, n: int, d: int, seed: int, iterations: int) -> list[RateRecord]:
    """Step ``iterations`` uniformly random shuffles; every step is checked."""
    run, rng = start_chain(scheme, n, d, seed)
    for _ in range(iterations):
        step(run, random_shuffle(n, scheme.k_workers, rng))
    return run.history


# -- exhaustive worst case ---------------------------------------------------

@dataclass
class WorstCaseReport:
    max_rate_points: Fraction
    argmax_pair: Optional[tuple[Shuffle, Shuffle]]
    pairs_checked: int
    all_decoded: bool
    failing_pair: Optional[tuple[Shuffle, Shuffle]] = None
    failure: Optional[str] = None
    rates: Optional[dict[tuple[Shuffle, Shuffle], Fraction]] = None


def pair_rate(scheme: Scheme, data: Dataset, s_t: Shuffle, s_t1: Shuffle) -> Fraction:
    """Rate of a single fully checked transition from a fresh placement at ``s_t``."""
    states, layout = scheme.place(data, s_t)
    msg, _, _ = transition(scheme, data, states, layout, s_t, s_t1)
    return msg.rate_points


def worst_case_search(
    scheme: Scheme,
    n: int,
    d: int,
    seed: int = 0,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    keep_rates: bool = False,
) -> WorstCaseReport:
    """Maximum rate over every ordered pair of shuffles.

    Placement is rebuilt at each ``s_t``. Ties go to the lexicographically
    smallest pair; the search stops at the first pair that fails a check.
    """
    if scheme.n_points != n:
        raise ValueError(f"{scheme} is built for N={scheme.n_points}, not {n}")
    scheme.check_dims(d)
    k = scheme.k_workers
    count = count_shuffles(n, k)
    if count * count > max_pairs:
        raise EnumerationCapExceeded(count * count, max_pairs)
    shuffles = enumerate_shuffles(n, k, cap=max(count, DEFAULT_SHUFFLE_CAP))
    data = make_dataset(n, d, seed)
    rates: dict | None = {} if keep_rates else None
    best = Fraction(-1)
    argmax = None
    checked = 0
    for s_t in shuffles:
        states, layout = scheme.place(data, s_t)
        for s_t1 in shuffles:
            try:
                msg, _, _ = transition(scheme, data, states, layout, s_t, s_t1)
            except InvariantViolation as exc:
                log.warning("pair %s -> %s failed: %s", s_t, s_t1, exc)
                return WorstCaseReport(
                    max(best, Fraction(0)), argmax, checked + 1, False, (s_t, s_t1), str(exc), rates
                )
            checked += 1
            rate = msg.rate_points
            if rates is not None:
                rates[(s_t, s_t1)] = rate
            if rate > best:
                best, argmax = rate, (s_t, s_t1)
    return WorstCaseReport(best, argmax, checked, True, rates=rates)
