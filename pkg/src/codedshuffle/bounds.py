"""Closed-form optimal worst-case rates and matching lower bounds.

All values are exact ``Fraction`` in units of points (multiples of d bits).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def _q(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("pass storage as int, Fraction or a string, not float")
    return Fraction(x)


def _check_range(k: int, n, s) -> tuple[Fraction, Fraction]:
    n, s = _q(n), _q(s)
    if not n / k <= s <= n:
        raise ValueError(f"S={s} outside [{n / k}, {n}] for K={k}, N={n}")
    return n, s


@dataclass(frozen=True)
class TradeoffPoint:
    k_workers: int
    n_points: int
    storage_points: Fraction
    rate_points: Fraction

    def __post_init__(self):
        _check_range(self.k_workers, self.n_points, self.storage_points)


def opt_rate_k2(n, s) -> Fraction:
    n, s = _check_range(2, n, s)
    return n - s


def opt_rate_k3(n, s) -> Fraction:
    n, s = _check_range(3, n, s)
    if s <= Fraction(2) * n / 3:
        return Fraction(7) * n / 6 - Fraction(3) * s / 2
    return n / 2 - s / 2


def opt_rate(k: int, n, s) -> Fraction:
    if k == 2:
        return opt_rate_k2(n, s)
    if k == 3:
        return opt_rate_k3(n, s)
    raise ValueError(f"no closed form for K={k}")


def lower_bound_cutset(k: int, n, s) -> Fraction:
    """Storage plus broadcast(s) must pin down the whole dataset."""
    n, s = _q(n), _q(s)
    if k == 2:
        return n - s
    if k == 3:
        return (n - s) / 2
    raise ValueError(f"no cut-set bound implemented for K={k}")


def lower_bound_excess_k3(n, s) -> Fraction:
    """May go negative for large S; see ``combined_lower_bound``."""
    n, s = _check_range(3, n, s)
    return Fraction(7) * n / 6 - Fraction(3) * s / 2


def combined_lower_bound(k: int, n, s) -> Fraction:
    _check_range(k, n, s)
    bounds = [lower_bound_cutset(k, n, s)]
    if k == 3:
        bounds.append(lower_bound_excess_k3(n, s))
    return max(max(bounds), Fraction(0))


def optimal_point(k: int, n: int, s) -> TradeoffPoint:
    return TradeoffPoint(k, n, _q(s), opt_rate(k, n, s))

