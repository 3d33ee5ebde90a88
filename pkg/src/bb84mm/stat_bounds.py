"""Elementary statistical-bound primitives.

Three deviation terms drive every finite-size penalty in this package:

* ``binomial_tail`` / ``gamma_bin`` -- the upper tail of a Binomial(n, delta)
  distribution and its inverse (smallest deviation ``c`` pushing the tail
  below a failure-probability target).
* ``gamma_serf`` -- the Serfling-style deviation for estimating the error
  rate of a randomly chosen key set from a randomly chosen test set.
* ``hoeffding_decoy_dev`` -- the two-sided Hoeffding deviation used to relate
  per-intensity counts to photon-number-conditioned expectations.

All failure probabilities are passed *squared* (``eps_sq``): the security
analysis consistently consumes squared epsilons, and taking them squared at
the API boundary prevents silent double-squaring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import betainc

__all__ = [
    "TailQuery",
    "binomial_tail",
    "gamma_bin",
    "gamma_serf",
    "hoeffding_decoy_dev",
]

def _tail_threshold(n: int, x: float) -> int:
    """Smallest integer count k with k >= n*x, guarding float round-off.

    The guard window scales with the rounding error of the product (a few
    thousand ulp) and never reaches 1/2, so it only absorbs float fuzz;
    snapping down at a boundary enlarges the tail, keeping bounds valid.
    """
    target = n * x
    nearest = round(target)
    snap = max(1e-9, abs(target) * 2.0**-40)
    if abs(target - nearest) <= snap:
        return int(nearest)
    return int(math.ceil(target))


@dataclass(frozen=True)
class TailQuery:
    """Arguments of the binomial tail function.

    ``n`` trials with per-trial probability ``delta``; the tail starts at
    count ``n*(delta + c)``.  ``delta + c`` may exceed 1, in which case the
    tail is empty and has mass 0.
    """

    n: int
    delta: float
    c: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"c must lie in [0, 1], got {self.c}")


def binomial_tail(q: TailQuery) -> float:
    """Upper tail of Binomial(n, delta) starting at count ceil(n*(delta+c)).

    Evaluated through the regularized incomplete beta function, which stays
    accurate for n far beyond the reach of direct summation (n up to 1e12).

    Returns a probability in [0, 1].
    """
    return _tail(q.n, q.delta, q.c)


def _tail(n: int, delta: float, c: float) -> float:
    if delta == 0.0:
        # All mass at zero successes; any positive threshold empties the tail.
        return 1.0 if _tail_threshold(n, c) <= 0 else 0.0
    k = _tail_threshold(n, delta + c)
    return _tail_at_count(n, delta, k)


def _tail_at_count(n: int, delta: float, k: int) -> float:
    """P[Binomial(n, delta) >= k]."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if delta == 0.0:
        return 0.0
    if delta == 1.0:
        return 1.0
    # Survival function identity: P[X >= k] = I_delta(k, n - k + 1).
    return float(betainc(k, n - k + 1, delta))


def gamma_bin(n: int, delta: float, eps_sq: float) -> float:
    """Smallest deviation c with binomial_tail(n, delta, c) <= eps_sq.

    The tail is a step function of c, changing only where the threshold
    ceil(n*(delta+c)) crosses an integer, so the inversion is a bisection
    over that integer grid; the returned c sits exactly on the grid.  The
    result satisfies

        binomial_tail(n, delta, c) <= eps_sq, and
        binomial_tail(n, delta, c - 1/n) > eps_sq   (whenever c >= 1/n).

    For delta = 0 the tail vanishes for every positive c and the inverse is
    defined as exactly 0.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if not 0.0 < eps_sq < 1.0:
        raise ValueError(f"eps_sq must lie in (0, 1), got {eps_sq}")
    if delta == 0.0:
        return 0.0

    # Smallest integer k in [0, n + 1] whose tail P[X >= k] is <= eps_sq.
    # The tail is non-increasing in k, with P[X >= n + 1] = 0, so a valid k
    # always exists.
    lo, hi = 0, n + 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _tail_at_count(n, delta, mid) <= eps_sq:
            hi = mid
        else:
            lo = mid + 1

    c = lo / n - delta
    if c <= 0.0:
        return 0.0
    # Cannot exceed the empty-tail endpoint.
    return min(c, 1.0 - delta + 1.0 / n)


def f_serf(n_test: int, n_key: int) -> float:
    """Exponent scale of the Serfling bound for IID test/key assignment."""
    return n_key * n_test**2 / ((n_key + n_test) * (n_test + 1.0))


def gamma_serf(n_test: int, n_key: int, eps_sq: float) -> float:
    """Serfling deviation with failure probability eps_sq.

    Closed form sqrt(ln(1/eps_sq) / f_serf(n_test, n_key)).  Raises on zero
    counts; callers must map that case to a zero-length key.
    """
    if n_test < 1 or n_key < 1:
        raise ValueError(
            f"degenerate sample sizes (n_test={n_test}, n_key={n_key}); "
            "no finite deviation exists"
        )
    if not 0.0 < eps_sq <= 1.0:
        raise ValueError(f"eps_sq must lie in (0, 1], got {eps_sq}")
    return math.sqrt(math.log(1.0 / eps_sq) / f_serf(n_test, n_key))


def hoeffding_decoy_dev(n_outcome: float, eps_sq: float) -> float:
    """Two-sided Hoeffding deviation sqrt((n/2) * ln(2/eps_sq)).

    Applied to the count of one outcome class across all intensity choices;
    conditioning on the photon-number sequence makes the per-round intensity
    draws independent, which is what licenses plain Hoeffding here.
    """
    if n_outcome < 0:
        raise ValueError(f"n_outcome must be >= 0, got {n_outcome}")
    if not 0.0 < eps_sq < 2.0:
        raise ValueError(f"eps_sq must lie in (0, 2), got {eps_sq}")
    return math.sqrt(0.5 * n_outcome * math.log(2.0 / eps_sq))
