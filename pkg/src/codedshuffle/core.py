"""Data model for the master/worker shuffling protocol.

Bit-vectors are 1-D ``numpy.uint8`` arrays holding 0/1 values. Rates are
kept as exact integers (bits) and ``Fraction`` (points, i.e. bits / d);
nothing in the rate path touches floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

DEFAULT_SHUFFLE_CAP = 100_000


class InvariantViolation(AssertionError):
    """A named protocol invariant failed to hold."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        self.detail = detail
        super().__init__(f"{invariant}: {detail}" if detail else invariant)


class ProtocolViolation(InvariantViolation):
    """A worker needed a fragment that is not in its storage."""

    def __init__(self, detail: str):
        super().__init__("missing-fragment", detail)


class ProtocolStateError(InvariantViolation):
    """Worker states disagree with the shuffle they are claimed to follow."""

    def __init__(self, detail: str):
        super().__init__("state-consistency", detail)


class DivisibilityError(ValueError):
    pass


class EnumerationCapExceeded(ValueError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"refusing to enumerate {count} shuffles (cap {cap})")


# -- bit-vectors -------------------------------------------------------------

def bits(text: str) -> np.ndarray:
    """Parse a string like ``"1010"`` into a bit-vector."""
    return np.array([int(c) for c in text], dtype=np.uint8)


def bits_str(vec: np.ndarray) -> str:
    return "".join(str(int(b)) for b in vec)


def xor_fold(operands: Sequence[np.ndarray]) -> np.ndarray:
    """XOR a nonempty sequence of bit-vectors.

    Shorter operands are zero-padded at the tail, so the result is as long
    as the longest operand.
    """
    if len(operands) == 0:
        raise ValueError("xor_fold needs at least one operand")
    width = max(len(v) for v in operands)
    out = np.zeros(width, dtype=np.uint8)
    for v in operands:
        out[: len(v)] ^= np.asarray(v, dtype=np.uint8)
    return out


def concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    if not parts:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate(parts).astype(np.uint8, copy=False)


# -- dataset -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dataset:
    """Ground-truth payload matrix held by the master: N points of d bits."""

    n_points: int
    dim_bits: int
    payload: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_points < 1 or self.dim_bits < 1:
            raise ValueError("dataset needs n_points >= 1 and dim_bits >= 1")
        if self.payload.shape != (self.n_points, self.dim_bits):
            raise ValueError(
                f"payload shape {self.payload.shape} != ({self.n_points}, {self.dim_bits})"
            )
        self.payload.setflags(write=False)

    def point(self, pid: int) -> np.ndarray:
        return self.payload[pid]

    def slice_dims(self, lo: int, hi: int) -> Dataset:
        """The same points restricted to dimensions ``[lo, hi)``."""
        return Dataset(self.n_points, hi - lo, self.payload[:, lo:hi].copy())

    @property
    def total_bits(self) -> int:
        return self.n_points * self.dim_bits


def make_dataset(n: int, d: int, seed: int) -> Dataset:
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if d % 2:
        raise ValueError(f"d must be even so points can be halved, got d={d}")
    rng = np.random.default_rng(seed)
    return Dataset(n, d, rng.integers(0, 2, size=(n, d), dtype=np.uint8))


# -- shuffles ----------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Shuffle:
    """Labeled partition of point ids into K equal batches.

    ``assignment[i]`` is the worker that processes point ``i``.
    """

    assignment: tuple[int, ...]
    k_workers: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))
        n, k = len(self.assignment), self.k_workers
        if k < 1 or n == 0 or n % k:
            raise ValueError(f"K={k} must divide N={n}")
        counts = [0] * k
        for w in self.assignment:
            if not 0 <= w < k:
                raise ValueError(f"worker index {w} outside 0..{k - 1}")
            counts[w] += 1
        if any(c != n // k for c in counts):
            raise ValueError(f"unequal batches {counts} in {self.assignment}")

    @property
    def n_points(self) -> int:
        return len(self.assignment)

    @property
    def batch_size(self) -> int:
        return self.n_points // self.k_workers

    def to_csv(self) -> str:
        return ",".join(map(str, self.assignment))

    @classmethod
    def from_csv(cls, text: str, k: int) -> Shuffle:
        return cls(tuple(int(t) for t in text.split(",")), k)

    def __str__(self) -> str:
        return self.to_csv()


def batch(s: Shuffle, k: int) -> tuple[int, ...]:
    """Ascending point ids processed by worker ``k`` under ``s``."""
    if not 0 <= k < s.k_workers:
        raise IndexError(f"worker {k} out of range for K={s.k_workers}")
    return tuple(i for i, w in enumerate(s.assignment) if w == k)


def identity_shuffle(n: int, k: int) -> Shuffle:
    """Worker ``j`` processes the j-th contiguous block of ids."""
    if k < 1 or n % k:
        raise ValueError(f"K={k} must divide N={n}")
    return Shuffle(tuple(i // (n // k) for i in range(n)), k)


def random_shuffle(n: int, k: int, rng: np.random.Generator) -> Shuffle:
    """Uniform draw over labeled equal partitions.

    A uniform permutation cut into K consecutive blocks hits every labeled
    partition through exactly ``(n/k)!**k`` permutations.
    """
    if k < 1 or n < 1 or n % k:
        raise ValueError(f"K={k} must divide N={n}")
    perm = rng.permutation(n)
    assignment = [0] * n
    size = n // k
    for pos, pid in enumerate(perm):
        assignment[int(pid)] = pos // size
    return Shuffle(tuple(assignment), k)


def count_shuffles(n: int, k: int) -> int:
    if k < 1 or n % k:
        raise ValueError(f"K={k} must divide N={n}")
    return math.factorial(n) // math.factorial(n // k) ** k


def _lex_assignments(n: int, k: int) -> Iterator[tuple[int, ...]]:
    size = n // k
    counts = [0] * k
    current: list[int] = []

    def rec() -> Iterator[tuple[int, ...]]:
        if len(current) == n:
            yield tuple(current)
            return
        for w in range(k):
            if counts[w] < size:
                counts[w] += 1
                current.append(w)
                yield from rec()
                current.pop()
                counts[w] -= 1

    return rec()


def enumerate_shuffles(n: int, k: int, cap: int = DEFAULT_SHUFFLE_CAP) -> list[Shuffle]:
    """Every labeled equal partition, in lexicographic order of assignment."""
    count = count_shuffles(n, k)
    if count > cap:
        raise EnumerationCapExceeded(count, cap)
    return [Shuffle(a, k) for a in _lex_assignments(n, k)]


# -- storage -----------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Fragment:
    """Dimension range ``[dim_lo, dim_hi)`` of one point, held by ``holder``."""

    point_id: int
    dim_lo: int
    dim_hi: int
    holder: int

    def __post_init__(self):
        if not 0 <= self.dim_lo < self.dim_hi:
            raise ValueError(f"bad fragment range [{self.dim_lo}, {self.dim_hi})")

    @property
    def length(self) -> int:
        return self.dim_hi - self.dim_lo

    def overlaps(self, other: Fragment) -> bool:
        return (
            self.point_id == other.point_id
            and self.dim_lo < other.dim_hi
            and other.dim_lo < self.dim_hi
        )


@dataclass(frozen=True, eq=False)
class WorkerState:
    """Storage of one worker: its full processing batch plus excess fragments."""

    worker_id: int
    dim_bits: int
    processing: Mapping[int, np.ndarray]
    excess: Mapping[Fragment, np.ndarray]
    budget_bits: int

    def __post_init__(self):
        for pid, vec in self.processing.items():
            if len(vec) != self.dim_bits:
                raise InvariantViolation("processing", f"point {pid} has {len(vec)} bits")
        seen: dict[int, list[Fragment]] = {}
        for frag, vec in self.excess.items():
            if frag.holder != self.worker_id:
                raise InvariantViolation("fragment-holder", f"{frag} at worker {self.worker_id}")
            if frag.dim_hi > self.dim_bits or len(vec) != frag.length:
                raise InvariantViolation("fragment-length", str(frag))
            if frag.point_id in self.processing:
                raise InvariantViolation("fragment-overlap", f"{frag} duplicates a processing point")
            for other in seen.get(frag.point_id, ()):
                if frag.overlaps(other):
                    raise InvariantViolation("fragment-overlap", f"{frag} vs {other}")
            seen.setdefault(frag.point_id, []).append(frag)

    def stored_bits(self) -> int:
        return len(self.processing) * self.dim_bits + sum(f.length for f in self.excess)

    def fragment(self, pid: int, lo: int, hi: int) -> np.ndarray:
        """Bits ``[lo, hi)`` of point ``pid``, read from whatever is stored.

        Raises ProtocolViolation if the range is not covered by a single
        stored piece.
        """
        if pid in self.processing:
            return self.processing[pid][lo:hi]
        for frag, vec in self.excess.items():
            if frag.point_id == pid and frag.dim_lo <= lo and hi <= frag.dim_hi:
                return vec[lo - frag.dim_lo : hi - frag.dim_lo]
        raise ProtocolViolation(f"worker {self.worker_id} lacks point {pid} dims [{lo}, {hi})")

    def fragments_of(self, pid: int) -> list[Fragment]:
        return sorted(f for f in self.excess if f.point_id == pid)


@dataclass(frozen=True, eq=False)
class Message:
    """Broadcast payload for one shuffle transition."""

    payload: np.ndarray = field(repr=False)
    dim_bits: int
    transition: tuple[Shuffle, Shuffle]

    @property
    def length_bits(self) -> int:
        return len(self.payload)

    @property
    def rate_points(self) -> Fraction:
        return Fraction(self.length_bits, self.dim_bits)


@dataclass(frozen=True)
class RateRecord:
    iteration: int
    rate_bits: int
    rate_points: Fraction
    shuffle_pair: tuple[Shuffle, Shuffle]
    dim_bits: int

    def __post_init__(self):
        if not isinstance(self.rate_points, Fraction):
            raise TypeError("rate_points must be a Fraction")
        if self.rate_points * self.dim_bits != self.rate_bits:
            raise InvariantViolation("rate-record", f"{self.rate_points} * {self.dim_bits} != {self.rate_bits}")

    @classmethod
    def from_message(cls, iteration: int, msg: Message) -> RateRecord:
        return cls(iteration, msg.length_bits, msg.rate_points, msg.transition, msg.dim_bits)
