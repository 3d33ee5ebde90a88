"""Phase-error-rate upper bounds.

``bound_perfect`` handles basis-independent loss (pure Serfling penalty);
``bound_mismatch`` adds the detector-mismatch corrections delta1/delta2 with
their binomial-tail deviations; ``bound_decoy_composed`` chains the decoy
bounds on single-photon counts into the mismatch bound.

A bound of 1 is vacuous but always valid (downstream entropy saturates at 1
bit), so every failure mode degrades to 1 rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from bb84mm.decoy import (
    DecoyConfig,
    Observations,
    bound_single_upper,
    single_photon_interval,
)
from bb84mm.detector_model import DeltaPair
from bb84mm.stat_bounds import gamma_bin, gamma_serf

if TYPE_CHECKING:
    from bb84mm.keyrate import EpsilonBudget

__all__ = [
    "PhaseErrorQuery",
    "MismatchBound",
    "ComposedBound",
    "bound_perfect",
    "bound_mismatch",
    "bound_decoy_composed",
]


@dataclass(frozen=True)
class PhaseErrorQuery:
    """Inputs of the mismatch phase-error bound.

    ``eps_a_sq`` pays for the Serfling step, ``eps_b_sq`` for transferring
    frequencies between the two filtered error operators (delta1), and
    ``eps_c_sq`` for the key-round discard fraction (delta2).
    """

    e_obs: float
    n_test: int
    n_key: int
    deltas: DeltaPair
    eps_a_sq: float
    eps_b_sq: float
    eps_c_sq: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.e_obs <= 1.0:
            raise ValueError(f"e_obs must lie in [0, 1], got {self.e_obs}")
        for name in ("eps_a_sq", "eps_b_sq", "eps_c_sq"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


@dataclass(frozen=True)
class MismatchBound:
    """Phase-error bound value plus a vacuity flag (denominator collapsed)."""

    value: float
    vacuous: bool


def bound_perfect(e_obs: float, n_test: int, n_key: int, eps_sq: float) -> float:
    """Phase-error bound under basis-independent loss: e_obs + gamma_serf."""
    if n_test < 1 or n_key < 1:
        return 1.0
    return min(1.0, e_obs + gamma_serf(n_test, n_key, eps_sq))


def bound_mismatch(q: PhaseErrorQuery) -> MismatchBound:
    """Phase-error bound in the presence of basis-efficiency mismatch.

    (e_obs + gamma_serf + delta1 + gamma_bin(n_key, delta1))
    / (1 - delta2 - gamma_bin(n_key, delta2)),

    capped at 1.  A non-positive denominator means the discard fraction
    cannot be controlled; the bound is then vacuous (1).
    """
    if q.n_test < 1 or q.n_key < 1:
        return MismatchBound(1.0, vacuous=True)
    d1 = q.deltas.delta1
    d2 = q.deltas.delta2
    numer = (
        q.e_obs
        + gamma_serf(q.n_test, q.n_key, q.eps_a_sq)
        + d1
        + gamma_bin(q.n_key, min(d1, 1.0), q.eps_b_sq)
    )
    denom = 1.0 - d2 - gamma_bin(q.n_key, d2, q.eps_c_sq)
    if denom <= 0.0:
        return MismatchBound(1.0, vacuous=True)
    return MismatchBound(min(1.0, numer / denom), vacuous=False)


@dataclass(frozen=True)
class ComposedBound:
    """Decoy-composed phase bound and single-photon key-count lower bound."""

    phase_bound: float
    single_key_lower: float
    single_test_lower: float
    single_error_rate_upper: float
    feasible: bool
    vacuous: bool


def bound_decoy_composed(
    obs: Observations,
    cfg: DecoyConfig,
    deltas: DeltaPair,
    budget: "EpsilonBudget",
) -> ComposedBound:
    """Chain decoy bounds into the mismatch phase-error bound.

    The single-photon error rate is bounded by the ratio of the one-photon
    upper bound on error counts to the one-photon lower bound on conclusive
    test counts; the single-photon test/key counts feed the deviation terms.
    Total failure budget: 9*eps_at_d^2 for the nine decoy deviations plus
    eps_a^2 + eps_b^2 + eps_c^2 for the sampling chain.

    Zero single-photon lower bounds make the run infeasible (key length 0).
    """
    eps_d_sq = budget.eps_at_d**2
    b1l_test, b1u_test, ok_test = single_photon_interval(obs.counts_x(), cfg, eps_d_sq)
    b1u_err = bound_single_upper(obs.counts_x_err(), cfg, eps_d_sq)
    b1l_key, b1u_key, ok_key = single_photon_interval(obs.counts_k(), cfg, eps_d_sq)

    if b1l_test <= 0.0 or b1l_key <= 0.0 or not (ok_test and ok_key):
        return ComposedBound(1.0, 0.0, 0.0, 1.0, feasible=False, vacuous=True)

    e1_upper = min(1.0, b1u_err / b1l_test)
    # The deviation terms are non-increasing in the counts, so flooring the
    # real-valued lower bounds to integers is conservative.
    q = PhaseErrorQuery(
        e_obs=e1_upper,
        n_test=math.floor(b1l_test),
        n_key=math.floor(b1l_key),
        deltas=deltas,
        eps_a_sq=budget.eps_at_a**2,
        eps_b_sq=budget.eps_at_b**2,
        eps_c_sq=budget.eps_at_c**2,
    )
    b = bound_mismatch(q)
    return ComposedBound(
        phase_bound=b.value,
        single_key_lower=b1l_key,
        single_test_lower=b1l_test,
        single_error_rate_upper=e1_upper,
        feasible=True,
        vacuous=b.vacuous,
    )
