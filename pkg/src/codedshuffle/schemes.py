"""Placement, delivery, decoding and storage-update rules.

Each scheme is a frozen dataclass exposing the same five operations:

* ``place(data, s0)`` -> ``(states, layout)``
* ``deliver(data, states, layout, s_t, s_t1)`` -> ``Message``
* ``decode(state, layout, msg, s_t, s_t1)`` -> ``{point_id: bits}``
* ``update(state, layout, msg, s_t, s_t1)`` -> ``(state, layout)``
* ``message_bits(d, s_t, s_t1)`` -> broadcast length, known to every party

``layout`` is ambient structural state that every party can track from the
shuffle history alone: a ``HalfMap`` for ``K3TwoThirds``, a pair of inner
layouts for ``MemoryShare``, ``None`` otherwise. ``decode`` and ``update``
only ever see one worker's state.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from .core import (
    Dataset,
    DivisibilityError,
    Fragment,
    InvariantViolation,
    Message,
    ProtocolStateError,
    Shuffle,
    WorkerState,
    batch,
    concat,
    xor_fold,
)

Batch = dict[int, np.ndarray]


# -- shared helpers ----------------------------------------------------------

def _check_consistent(states: Sequence[Any], s_t: Shuffle) -> None:
    if len(states) != s_t.k_workers:
        raise ProtocolStateError(f"{len(states)} states for K={s_t.k_workers}")
    for k, st in enumerate(states):
        if st.worker_id != k:
            raise ProtocolStateError(f"state {k} belongs to worker {st.worker_id}")
        if tuple(sorted(st.processing)) != batch(s_t, k):
            raise ProtocolStateError(
                f"worker {k} processes {sorted(st.processing)}, shuffle says {batch(s_t, k)}"
            )


def _check_transition(s_t: Shuffle, s_t1: Shuffle, k: int, n: int) -> None:
    for s in (s_t, s_t1):
        if s.k_workers != k or s.n_points != n:
            raise ValueError(f"shuffle {s} does not match K={k}, N={n}")


def _points(data: Dataset, ids: Sequence[int]) -> np.ndarray:
    return concat([data.point(p) for p in ids])


def _split_points(vec: np.ndarray, ids: Sequence[int], width: int) -> Batch:
    if len(vec) < width * len(ids):
        raise InvariantViolation("message-length", f"{len(vec)} bits cannot hold {len(ids)} points")
    return {p: vec[i * width : (i + 1) * width].copy() for i, p in enumerate(ids)}


def _batch_only_state(data: Dataset, s: Shuffle, k: int, budget: int) -> WorkerState:
    return WorkerState(k, data.dim_bits, {p: data.point(p) for p in batch(s, k)}, {}, budget)


def _integral_budget(storage: Fraction, d: int) -> int:
    bits = storage * d
    if bits.denominator != 1:
        raise DivisibilityError(f"storage {storage} points x d={d} is not a whole number of bits")
    return int(bits)


class Scheme:
    """Common surface; concrete schemes override the protocol methods."""

    name = "scheme"
    k_workers: int
    n_points: int

    @property
    def storage_points(self) -> Fraction:
        raise NotImplementedError

    def check_dims(self, d: int) -> None:
        if d < 1:
            raise DivisibilityError(f"{self.name} needs d >= 1, got {d}")

    def budget_bits(self, d: int) -> int:
        return _integral_budget(self.storage_points, d)

    def _check_data(self, data: Dataset) -> None:
        if data.n_points != self.n_points:
            raise ValueError(f"{self.name} built for N={self.n_points}, dataset has {data.n_points}")
        self.check_dims(data.dim_bits)

    def advance_layout(self, layout: Any, s_t: Shuffle, s_t1: Shuffle) -> Any:
        return layout

    def __str__(self) -> str:
        return f"{self.name}(N={self.n_points}, S={self.storage_points})"


# -- S = N -------------------------------------------------------------------

@dataclass(frozen=True)
class FullStorage(Scheme):
    """Every worker stores the whole dataset; nothing is ever sent."""

    k_workers: int
    n_points: int
    name = "FullStorage"

    def __post_init__(self):
        if self.k_workers < 1 or self.n_points % self.k_workers:
            raise ValueError(f"K={self.k_workers} must divide N={self.n_points}")

    @property
    def storage_points(self) -> Fraction:
        return Fraction(self.n_points)

    def _state(self, lookup, d: int, s: Shuffle, k: int) -> WorkerState:
        mine = batch(s, k)
        others = [p for p in range(self.n_points) if s.assignment[p] != k]
        return WorkerState(
            k,
            d,
            {p: lookup(p) for p in mine},
            {Fragment(p, 0, d, k): lookup(p) for p in others},
            self.budget_bits(d),
        )

    def place(self, data: Dataset, s0: Shuffle):
        self._check_data(data)
        _check_transition(s0, s0, self.k_workers, self.n_points)
        return [self._state(data.point, data.dim_bits, s0, k) for k in range(self.k_workers)], None

    def message_bits(self, d: int, s_t: Shuffle, s_t1: Shuffle) -> int:
        return 0

    def deliver(self, data, states, layout, s_t, s_t1) -> Message:
        _check_transition(s_t, s_t1, self.k_workers, self.n_points)
        _check_consistent(states, s_t)
        return Message(np.zeros(0, dtype=np.uint8), data.dim_bits, (s_t, s_t1))

    def decode(self, state, layout, msg, s_t, s_t1) -> Batch:
        d = state.dim_bits
        return {p: state.fragment(p, 0, d).copy() for p in batch(s_t1, state.worker_id)}

    def update(self, state, layout, msg, s_t, s_t1):
        d = state.dim_bits
        new = self._state(lambda p: state.fragment(p, 0, d), d, s_t1, state.worker_id)
        return new, layout


# -- K = 2, S = N/2 ----------------------------------------------------------

@dataclass(frozen=True)
class K2Min(Scheme):
    """Two workers, each storing only its batch.

    The broadcast XORs the points each worker gives up against the points
    the other worker gives up, paired in ascending id order. When the
    batches simply swap this is the plain ``A_1 xor A_2``; overlap of ``b``
    points cuts the message by ``b`` points.
    """

    n_points: int
    k_workers = 2
    name = "K2Min"

    def __post_init__(self):
        if self.n_points % 2:
            raise ValueError(f"K=2 must divide N={self.n_points}")

    @property
    def storage_points(self) -> Fraction:
        return Fraction(self.n_points, 2)

    def place(self, data: Dataset, s0: Shuffle):
        self._check_data(data)
        _check_transition(s0, s0, 2, self.n_points)
        budget = self.budget_bits(data.dim_bits)
        return [_batch_only_state(data, s0, k, budget) for k in range(2)], None

    @staticmethod
    def _leaving(s_t: Shuffle, s_t1: Shuffle, k: int) -> list[int]:
        return [p for p in batch(s_t, k) if s_t1.assignment[p] != k]

    def message_bits(self, d: int, s_t: Shuffle, s_t1: Shuffle) -> int:
        return len(self._leaving(s_t, s_t1, 0)) * d

    def deliver(self, data, states, layout, s_t, s_t1) -> Message:
        _check_transition(s_t, s_t1, 2, self.n_points)
        _check_consistent(states, s_t)
        operands = [_points(data, self._leaving(s_t, s_t1, k)) for k in range(2)]
        return Message(xor_fold(operands), data.dim_bits, (s_t, s_t1))

    def decode(self, state, layout, msg, s_t, s_t1) -> Batch:
        k, d = state.worker_id, state.dim_bits
        if msg.length_bits != self.message_bits(d, s_t, s_t1):
            raise InvariantViolation("message-length", f"got {msg.length_bits} bits")
        mine = self._leaving(s_t, s_t1, k)
        arriving = self._leaving(s_t, s_t1, 1 - k)
        own = concat([state.fragment(p, 0, d) for p in mine])
        out = _split_points(xor_fold([msg.payload, own]), arriving, d)
        for p in batch(s_t1, k):
            if p not in out:
                out[p] = state.fragment(p, 0, d).copy()
        return out

    def update(self, state, layout, msg, s_t, s_t1):
        new_batch = self.decode(state, layout, msg, s_t, s_t1)
        return WorkerState(state.worker_id, state.dim_bits, new_batch, {}, state.budget_bits), layout


# -- K = 3, S = N/3 ----------------------------------------------------------

@dataclass(frozen=True)
class K3Min(Scheme):
    """Three workers, each storing only its batch.

    Sends ``A_1 xor A_2`` followed by ``A_2 xor A_3`` (batches serialized in
    ascending id); any worker can peel off the whole dataset from its own
    batch. The length does not depend on the shuffle.
    """

    n_points: int
    k_workers = 3
    name = "K3Min"

    def __post_init__(self):
        if self.n_points % 3:
            raise ValueError(f"K=3 must divide N={self.n_points}")

    @property
    def storage_points(self) -> Fraction:
        return Fraction(self.n_points, 3)

    def place(self, data: Dataset, s0: Shuffle):
        self._check_data(data)
        _check_transition(s0, s0, 3, self.n_points)
        budget = self.budget_bits(data.dim_bits)
        return [_batch_only_state(data, s0, k, budget) for k in range(3)], None

    def message_bits(self, d: int, s_t: Shuffle, s_t1: Shuffle) -> int:
        return 2 * (self.n_points // 3) * d

    def deliver(self, data, states, layout, s_t, s_t1) -> Message:
        _check_transition(s_t, s_t1, 3, self.n_points)
        _check_consistent(states, s_t)
        a = [_points(data, batch(s_t, k)) for k in range(3)]
        payload = concat([xor_fold([a[0], a[1]]), xor_fold([a[1], a[2]])])
        return Message(payload, data.dim_bits, (s_t, s_t1))

    def decode(self, state, layout, msg, s_t, s_t1) -> Batch:
        k, d = state.worker_id, state.dim_bits
        half = self.message_bits(d, s_t, s_t1) // 2
        if msg.length_bits != 2 * half:
            raise InvariantViolation("message-length", f"got {msg.length_bits} bits")
        first, second = msg.payload[:half], msg.payload[half:]
        ids = [batch(s_t, j) for j in range(3)]
        a: list[np.ndarray | None] = [None, None, None]
        a[k] = concat([state.fragment(p, 0, d) for p in ids[k]])
        if k == 0:
            a[1] = xor_fold([first, a[0]])
            a[2] = xor_fold([second, a[1]])
        elif k == 1:
            a[0] = xor_fold([first, a[1]])
            a[2] = xor_fold([second, a[1]])
        else:
            a[1] = xor_fold([second, a[2]])
            a[0] = xor_fold([first, a[1]])
        everything: Batch = {}
        for j in range(3):
            everything.update(_split_points(a[j], ids[j], d))
        return {p: everything[p] for p in batch(s_t1, k)}

    def update(self, state, layout, msg, s_t, s_t1):
        new_batch = self.decode(state, layout, msg, s_t, s_t1)
        return WorkerState(state.worker_id, state.dim_bits, new_batch, {}, state.budget_bits), layout


# -- K = 3, S = 2N/3 ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HalfMap:
    """Which half of each point every non-processing worker holds.

    ``halves[p]`` maps each of the two workers not processing point ``p``
    to the dimension range it stores; the two ranges are disjoint, d/2 wide
    and cover ``[0, d)``.
    """

    dim_bits: int
    processor: tuple[int, ...]
    halves: tuple[Mapping[int, tuple[int, int]], ...]

    def __post_init__(self):
        d = self.dim_bits
        if d % 2 or len(self.processor) != len(self.halves):
            raise InvariantViolation("half-map", "malformed")
        for p, (q, h) in enumerate(zip(self.processor, self.halves)):
            if sorted(h) != [w for w in range(3) if w != q]:
                raise InvariantViolation("half-map", f"point {p}: holders {sorted(h)} with processor {q}")
            ranges = sorted(h.values())
            if ranges != [(0, d // 2), (d // 2, d)]:
                raise InvariantViolation("half-map", f"point {p}: ranges {ranges} do not split [0, {d})")

    def half_of(self, pid: int, worker: int) -> tuple[int, int]:
        return self.halves[pid][worker]

    def __eq__(self, other):
        if not isinstance(other, HalfMap):
            return NotImplemented
        return (
            self.dim_bits == other.dim_bits
            and self.processor == other.processor
            and [dict(h) for h in self.halves] == [dict(h) for h in other.halves]
        )


def initial_half_map(s0: Shuffle, d: int) -> HalfMap:
    """For a point processed by q the other two workers, in ascending
    order, get the low and the high half."""
    halves = []
    for q in s0.assignment:
        lo_w, hi_w = [w for w in range(3) if w != q]
        halves.append({lo_w: (0, d // 2), hi_w: (d // 2, d)})
    return HalfMap(d, s0.assignment, tuple(halves))


def advance_half_map(hm: HalfMap, s_t: Shuffle, s_t1: Shuffle) -> HalfMap:
    """Relabel halves after a shuffle.

    For a point moving from q to p (p != q), the third worker r keeps its
    half and q keeps the range p used to hold. Points that stay put are
    untouched.
    """
    if hm.processor != s_t.assignment:
        raise ProtocolStateError("half map does not follow the current shuffle")
    halves = []
    for pid, (q, p) in enumerate(zip(s_t.assignment, s_t1.assignment)):
        old = hm.halves[pid]
        if p == q:
            halves.append(dict(old))
        else:
            r = 3 - p - q
            halves.append({q: old[p], r: old[r]})
    return HalfMap(hm.dim_bits, s_t1.assignment, tuple(halves))


@dataclass(frozen=True)
class K3TwoThirds(Scheme):
    """Three workers with room for twice their batch.

    Each worker holds its batch plus one half of every other point. A
    single XOR of the three "missing halves" lets every worker finish its
    new points, and the relabelling in ``advance_half_map`` keeps that
    layout intact after every shuffle.
    """

    n_points: int
    k_workers = 3
    name = "K3TwoThirds"

    def __post_init__(self):
        if self.n_points % 3:
            raise ValueError(f"K=3 must divide N={self.n_points}")

    @property
    def storage_points(self) -> Fraction:
        return Fraction(2 * self.n_points, 3)

    def check_dims(self, d: int) -> None:
        if d < 2 or d % 2:
            raise DivisibilityError(f"K3TwoThirds needs an even d, got {d}")

    def _state(self, lookup, d: int, s: Shuffle, hm: HalfMap, k: int, budget: int) -> WorkerState:
        processing = {p: lookup(p, 0, d) for p in batch(s, k)}
        excess = {}
        for p in range(self.n_points):
            if s.assignment[p] != k:
                lo, hi = hm.half_of(p, k)
                excess[Fragment(p, lo, hi, k)] = lookup(p, lo, hi)
        return WorkerState(k, d, processing, excess, budget)

    def place(self, data: Dataset, s0: Shuffle):
        self._check_data(data)
        _check_transition(s0, s0, 3, self.n_points)
        d = data.dim_bits
        hm = initial_half_map(s0, d)
        budget = self.budget_bits(d)
        lookup = lambda p, lo, hi: data.point(p)[lo:hi]
        return [self._state(lookup, d, s0, hm, k, budget) for k in range(3)], hm

    @staticmethod
    def _arrivals(s_t: Shuffle, s_t1: Shuffle, k: int) -> list[int]:
        return [p for p in batch(s_t1, k) if s_t.assignment[p] != k]

    @staticmethod
    def _missing_range(hm: HalfMap, s_t: Shuffle, pid: int, k: int) -> tuple[int, int]:
        # k already holds one half; the other sits with the third worker
        r = 3 - k - s_t.assignment[pid]
        return hm.half_of(pid, r)

    def message_bits(self, d: int, s_t: Shuffle, s_t1: Shuffle) -> int:
        return max(len(self._arrivals(s_t, s_t1, k)) for k in range(3)) * (d // 2)

    def advance_layout(self, layout, s_t, s_t1):
        return advance_half_map(layout, s_t, s_t1)

    def deliver(self, data, states, layout, s_t, s_t1) -> Message:
        _check_transition(s_t, s_t1, 3, self.n_points)
        _check_consistent(states, s_t)
        if layout.processor != s_t.assignment:
            raise ProtocolStateError("half map does not follow the current shuffle")
        operands = []
        for k in range(3):
            parts = []
            for p in self._arrivals(s_t, s_t1, k):
                lo, hi = self._missing_range(layout, s_t, p, k)
                parts.append(data.point(p)[lo:hi])
            operands.append(concat(parts))
        return Message(xor_fold(operands), data.dim_bits, (s_t, s_t1))

    def decode(self, state, layout, msg, s_t, s_t1) -> Batch:
        k, d = state.worker_id, state.dim_bits
        if msg.length_bits != self.message_bits(d, s_t, s_t1):
            raise InvariantViolation("message-length", f"got {msg.length_bits} bits")
        foreign = []
        for j in range(3):
            if j == k:
                continue
            foreign.append(concat([
                state.fragment(p, *self._missing_range(layout, s_t, p, j))
                for p in self._arrivals(s_t, s_t1, j)
            ]))
        mine = xor_fold([msg.payload, *foreign])
        arrivals = self._arrivals(s_t, s_t1, k)
        received = _split_points(mine, arrivals, d // 2)
        out: Batch = {}
        for p in batch(s_t1, k):
            if p not in received:
                out[p] = state.fragment(p, 0, d).copy()
                continue
            full = np.empty(d, dtype=np.uint8)
            lo, hi = self._missing_range(layout, s_t, p, k)
            full[lo:hi] = received[p]
            olo, ohi = layout.half_of(p, k)
            full[olo:ohi] = state.fragment(p, olo, ohi)
            out[p] = full
        return out

    def update(self, state, layout, msg, s_t, s_t1):
        new_batch = self.decode(state, layout, msg, s_t, s_t1)
        new_layout = self.advance_layout(layout, s_t, s_t1)

        def lookup(p, lo, hi):
            if p in new_batch:
                return new_batch[p][lo:hi]
            return state.fragment(p, lo, hi).copy()

        new = self._state(lookup, state.dim_bits, s_t1, new_layout, state.worker_id, state.budget_bits)
        return new, new_layout


# -- memory sharing ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SplitState:
    """Storage of one worker under memory sharing: one inner state per
    dimension slice. ``low`` covers dims ``[0, split)``."""

    worker_id: int
    split: int
    low: Any
    high: Any

    @property
    def dim_bits(self) -> int:
        return self.low.dim_bits + self.high.dim_bits

    @property
    def budget_bits(self) -> int:
        return self.low.budget_bits + self.high.budget_bits

    def stored_bits(self) -> int:
        return self.low.stored_bits() + self.high.stored_bits()

    @property
    def processing(self) -> Batch:
        lo, hi = self.low.processing, self.high.processing
        if lo.keys() != hi.keys():
            raise InvariantViolation("processing", "slices disagree on the batch")
        return {p: concat([lo[p], hi[p]]) for p in lo}

    @property
    def excess(self) -> dict[Fragment, np.ndarray]:
        out = dict(self.low.excess)
        for f, v in self.high.excess.items():
            out[Fragment(f.point_id, f.dim_lo + self.split, f.dim_hi + self.split, f.holder)] = v
        return out


@dataclass(frozen=True)
class MemoryShare(Scheme):
    """Run ``inner_a`` on the first ``alpha*d`` dims and ``inner_b`` on the rest.

    Storage and rate are the alpha-weighted mix of the two inner points.
    """

    inner_a: Scheme
    inner_b: Scheme
    alpha: Fraction
    name = "MemoryShare"

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        a, b = self.inner_a, self.inner_b
        if a.k_workers != b.k_workers or a.n_points != b.n_points:
            raise ValueError("memory sharing needs inner schemes with the same K and N")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie strictly between 0 and 1, got {self.alpha}")

    @property
    def k_workers(self) -> int:
        return self.inner_a.k_workers

    @property
    def n_points(self) -> int:
        return self.inner_a.n_points

    @property
    def storage_points(self) -> Fraction:
        return self.alpha * self.inner_a.storage_points + (1 - self.alpha) * self.inner_b.storage_points

    def split_at(self, d: int) -> int:
        cut = self.alpha * d
        if cut.denominator != 1:
            raise DivisibilityError(f"alpha={self.alpha} does not split d={d} into whole bits")
        return int(cut)

    def check_dims(self, d: int) -> None:
        cut = self.split_at(d)
        try:
            self.inner_a.check_dims(cut)
            self.inner_b.check_dims(d - cut)
        except DivisibilityError as exc:
            raise DivisibilityError(f"alpha={self.alpha}, d={d}: {exc}") from None

    def budget_bits(self, d: int) -> int:
        cut = self.split_at(d)
        return self.inner_a.budget_bits(cut) + self.inner_b.budget_bits(d - cut)

    def _slices(self, data: Dataset) -> tuple[Dataset, Dataset]:
        cut = self.split_at(data.dim_bits)
        return data.slice_dims(0, cut), data.slice_dims(cut, data.dim_bits)

    def place(self, data: Dataset, s0: Shuffle):
        self._check_data(data)
        da, db = self._slices(data)
        sa, la = self.inner_a.place(da, s0)
        sb, lb = self.inner_b.place(db, s0)
        states = [SplitState(k, da.dim_bits, sa[k], sb[k]) for k in range(self.k_workers)]
        return states, (la, lb)

    def message_bits(self, d: int, s_t: Shuffle, s_t1: Shuffle) -> int:
        cut = self.split_at(d)
        return self.inner_a.message_bits(cut, s_t, s_t1) + self.inner_b.message_bits(d - cut, s_t, s_t1)

    def deliver(self, data, states, layout, s_t, s_t1) -> Message:
        _check_consistent(states, s_t)
        da, db = self._slices(data)
        ma = self.inner_a.deliver(da, [s.low for s in states], layout[0], s_t, s_t1)
        mb = self.inner_b.deliver(db, [s.high for s in states], layout[1], s_t, s_t1)
        return Message(concat([ma.payload, mb.payload]), data.dim_bits, (s_t, s_t1))

    def _sub_messages(self, d: int, msg: Message) -> tuple[Message, Message]:
        s_t, s_t1 = msg.transition
        cut = self.split_at(d)
        la = self.inner_a.message_bits(cut, s_t, s_t1)
        if msg.length_bits != la + self.inner_b.message_bits(d - cut, s_t, s_t1):
            raise InvariantViolation("message-length", f"got {msg.length_bits} bits")
        return (
            Message(msg.payload[:la], cut, msg.transition),
            Message(msg.payload[la:], d - cut, msg.transition),
        )

    def decode(self, state, layout, msg, s_t, s_t1) -> Batch:
        ma, mb = self._sub_messages(state.dim_bits, msg)
        lo = self.inner_a.decode(state.low, layout[0], ma, s_t, s_t1)
        hi = self.inner_b.decode(state.high, layout[1], mb, s_t, s_t1)
        return {p: concat([lo[p], hi[p]]) for p in lo}

    def update(self, state, layout, msg, s_t, s_t1):
        ma, mb = self._sub_messages(state.dim_bits, msg)
        low, la = self.inner_a.update(state.low, layout[0], ma, s_t, s_t1)
        high, lb = self.inner_b.update(state.high, layout[1], mb, s_t, s_t1)
        return SplitState(state.worker_id, state.split, low, high), (la, lb)

    def advance_layout(self, layout, s_t, s_t1):
        return (
            self.inner_a.advance_layout(layout[0], s_t, s_t1),
            self.inner_b.advance_layout(layout[1], s_t, s_t1),
        )

    def __str__(self) -> str:
        return f"MemoryShare({self.inner_a}, {self.inner_b}, alpha={self.alpha})"


# -- module-level protocol entry points -------------------------------------

def init_placement(scheme: Scheme, data: Dataset, s0: Shuffle):
    return scheme.place(data, s0)


def deliver(scheme: Scheme, data: Dataset, states, layout, s_t: Shuffle, s_t1: Shuffle) -> Message:
    return scheme.deliver(data, states, layout, s_t, s_t1)


def decode(scheme: Scheme, state, layout, msg: Message, s_t: Shuffle, s_t1: Shuffle) -> Batch:
    return scheme.decode(state, layout, msg, s_t, s_t1)


def update(scheme: Scheme, state, layout, msg: Message, s_t: Shuffle, s_t1: Shuffle):
    return scheme.update(state, layout, msg, s_t, s_t1)


# -- scheme selection --------------------------------------------------------

def corner_schemes(k: int, n: int) -> list[Scheme]:
    """Dedicated schemes for K workers, sorted by storage."""
    if k == 2:
        return [K2Min(n), FullStorage(2, n)]
    if k == 3:
        return [K3Min(n), K3TwoThirds(n), FullStorage(3, n)]
    raise ValueError(f"only K=2 and K=3 are supported, got K={k}")


def memory_share_between(a: Scheme, b: Scheme, storage) -> Scheme:
    """The mix of ``a`` and ``b`` that lands exactly on ``storage``."""
    storage = Fraction(storage)
    sa, sb = a.storage_points, b.storage_points
    if storage == sa:
        return a
    if storage == sb:
        return b
    if not min(sa, sb) < storage < max(sa, sb):
        raise ValueError(f"S={storage} is not between {sa} and {sb}")
    return MemoryShare(a, b, (sb - storage) / (sb - sa))


def select_scheme(k: int, n: int, storage) -> Scheme:
    """Corner scheme when ``storage`` is a corner, else memory sharing
    between the two neighbouring corners."""
    storage = Fraction(storage)
    if k < 1 or n % k:
        raise ValueError(f"K={k} must divide N={n}")
    corners = corner_schemes(k, n)
    if not corners[0].storage_points <= storage <= corners[-1].storage_points:
        raise ValueError(f"S={storage} outside [{corners[0].storage_points}, {corners[-1].storage_points}]")
    for c in corners:
        if c.storage_points == storage:
            return c
    for lo, hi in zip(corners, corners[1:]):
        if lo.storage_points < storage < hi.storage_points:
            return memory_share_between(lo, hi, storage)
    raise AssertionError("unreachable")


SCHEME_NAMES = {
    "full": lambda k, n: FullStorage(k, n),
    "k2min": lambda k, n: K2Min(n),
    "k3min": lambda k, n: K3Min(n),
    "k3twothirds": lambda k, n: K3TwoThirds(n),
}


def scheme_by_name(name: str, k: int, n: int, storage=None) -> Scheme:
    """Build a scheme from a CLI name.

    ``name`` is a corner (``full``, ``k2min``, ``k3min``, ``k3twothirds``),
    ``auto``, or two corners joined by ``+`` for explicit memory sharing.
    """
    name = name.lower()
    if name == "auto":
        return select_scheme(k, n, storage)
    parts = name.split("+")
    if not 1 <= len(parts) <= 2 or any(p not in SCHEME_NAMES for p in parts):
        raise ValueError(f"unknown scheme {name!r}")
    built = [SCHEME_NAMES[p](k, n) for p in parts]
    for s in built:
        if s.k_workers != k:
            raise ValueError(f"{s.name} is a K={s.k_workers} scheme, not K={k}")
    if len(built) == 1:
        scheme = built[0]
        if storage is not None and Fraction(storage) != scheme.storage_points:
            raise ValueError(f"{scheme.name} runs at S={scheme.storage_points}, not S={storage}")
        return scheme
    if storage is None:
        raise ValueError("memory sharing needs a storage value")
    return memory_share_between(built[0], built[1], storage)
