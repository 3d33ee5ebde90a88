"""Final key-length formulas and epsilon accounting.

Variable-length decisions: every observation maps to a key length (aborting
is length zero), with the error-correction allowance a pluggable function of
the observations.  Lengths are in bits, logs base 2, and non-integer hash
lengths are floored (conservative).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from bb84mm.decoy import DecoyConfig, Observations
from bb84mm.detector_model import DeltaPair
from bb84mm.phase_error import PhaseErrorQuery, bound_decoy_composed, bound_mismatch

__all__ = [
    "EpsilonBudget",
    "KeyDecision",
    "binary_entropy",
    "lambda_ec_default",
    "key_length_single_photon",
    "key_length_decoy",
]

DEFAULT_EC_EFFICIENCY = 1.16


def binary_entropy(x: float) -> float:
    """Binary entropy in bits for x <= 1/2; saturates at 1 beyond."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"argument must lie in [0, 1], got {x}")
    if x > 0.5:
        return 1.0
    if x == 0.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def lambda_ec_default(n_key: float, e_z: float, f_ec: float = DEFAULT_EC_EFFICIENCY) -> float:
    """Error-correction allowance f_ec * n_key * h(e_z)."""
    if f_ec < 1.0:
        raise ValueError(f"f_ec must be >= 1, got {f_ec}")
    return f_ec * n_key * binary_entropy(e_z)


@dataclass(frozen=True)
class EpsilonBudget:
    """The epsilon components of the security parameter.

    The acceptance-test epsilon combines in quadrature: nine decoy
    deviations (eps_at_d each) plus the three sampling deviations.  The
    protocol is (2*eps_at + eps_pa + eps_ev)-secure.
    """

    eps_at_a: float = 1e-12
    eps_at_b: float = 1e-12
    eps_at_c: float = 1e-12
    eps_at_d: float = 1e-12
    eps_ev: float = 1e-12
    eps_pa: float = 1e-12

    def __post_init__(self) -> None:
        for name in ("eps_at_a", "eps_at_b", "eps_at_c", "eps_at_d", "eps_ev", "eps_pa"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")

    @classmethod
    def equal(cls, eps: float) -> "EpsilonBudget":
        return cls(eps, eps, eps, eps, eps, eps)

    @property
    def eps_at_single(self) -> float:
        """Acceptance-test epsilon for the single-photon-source protocol."""
        return math.sqrt(self.eps_at_a**2 + self.eps_at_b**2 + self.eps_at_c**2)

    @property
    def eps_at_decoy(self) -> float:
        """Acceptance-test epsilon for the decoy protocol."""
        return math.sqrt(
            9.0 * self.eps_at_d**2 + self.eps_at_a**2 + self.eps_at_b**2 + self.eps_at_c**2
        )

    def security_parameter(self, decoy: bool = True) -> float:
        eps_at = self.eps_at_decoy if decoy else self.eps_at_single
        return 2.0 * eps_at + self.eps_pa + self.eps_ev


@dataclass(frozen=True)
class KeyDecision:
    """Outcome of the variable-length decision for one observation record."""

    key_length: int
    lambda_ec: float
    phase_bound: float
    feasible: bool

    def __post_init__(self) -> None:
        if not self.feasible and self.key_length != 0:
            raise ValueError("infeasible decisions must carry key_length 0")


def _resolve_lambda_ec(
    lambda_ec: float | Callable[[float, float], float] | None,
    n_key: float,
    e_z: float,
    ec_transcript_bit: bool,
) -> float:
    if lambda_ec is None:
        value = lambda_ec_default(n_key, e_z)
    elif callable(lambda_ec):
        value = float(lambda_ec(n_key, e_z))
    else:
        value = float(lambda_ec)
    # Encoding all transcripts up to a maximum length costs one extra bit.
    return value + 1.0 if ec_transcript_bit else value


def _hash_penalties(budget: EpsilonBudget) -> float:
    return 2.0 * math.log2(1.0 / (2.0 * budget.eps_pa)) + math.log2(2.0 / budget.eps_ev)


def key_length_single_photon(
    e_obs: float,
    n_test: int,
    n_key: int,
    e_z: float,
    deltas: DeltaPair,
    budget: EpsilonBudget,
    lambda_ec: float | Callable[[float, float], float] | None = None,
    ec_transcript_bit: bool = False,
) -> KeyDecision:
    """Key length for the single-photon-source protocol.

    l = max(0, n_key (1 - h(B)) - lambda_ec - 2 log2(1/(2 eps_pa))
           - log2(2/eps_ev)),

    floored to an integer, with B the mismatch phase-error bound.
    """
    lam = _resolve_lambda_ec(lambda_ec, n_key, e_z, ec_transcript_bit)
    if n_test < 1 or n_key < 1:
        return KeyDecision(0, lam, 1.0, feasible=False)
    b = bound_mismatch(
        PhaseErrorQuery(
            e_obs=e_obs,
            n_test=n_test,
            n_key=n_key,
            deltas=deltas,
            eps_a_sq=budget.eps_at_a**2,
            eps_b_sq=budget.eps_at_b**2,
            eps_c_sq=budget.eps_at_c**2,
        )
    )
    raw = n_key * (1.0 - binary_entropy(b.value)) - lam - _hash_penalties(budget)
    return KeyDecision(
        key_length=max(0, math.floor(raw)),
        lambda_ec=lam,
        phase_bound=b.value,
        feasible=True,
    )


def key_length_decoy(
    obs: Observations,
    cfg: DecoyConfig,
    deltas: DeltaPair,
    budget: EpsilonBudget,
    lambda_ec: float | Callable[[float, float], float] | None = None,
    ec_transcript_bit: bool = False,
) -> KeyDecision:
    """Key length for the decoy-state protocol.

    Key is drawn from the single-photon component only:

    l = max(0, B1_low(n_K) (1 - h(B_e)) - lambda_ec
           - 2 log2(1/(2 eps_pa)) - log2(2/eps_ev)).
    """
    n_key_total = sum(obs.n_k)
    lam = _resolve_lambda_ec(lambda_ec, n_key_total, obs.e_z, ec_transcript_bit)
    composed = bound_decoy_composed(obs, cfg, deltas, budget)
    if not composed.feasible:
        return KeyDecision(0, lam, composed.phase_bound, feasible=False)
    raw = (
        composed.single_key_lower * (1.0 - binary_entropy(composed.phase_bound))
        - lam
        - _hash_penalties(budget)
    )
    return KeyDecision(
        key_length=max(0, math.floor(raw)),
        lambda_ec=lam,
        phase_bound=composed.phase_bound,
        feasible=True,
    )
