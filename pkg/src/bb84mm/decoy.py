"""Three-intensity decoy-state analysis.

Alice's phase-randomized pulses carry Poissonian photon numbers, so observed
per-intensity counts of any outcome class are linear images of the hidden
per-photon-number counts.  After a Hoeffding correction on each observed
count, algebra over the three intensities yields analytic bounds on the
zero-photon and one-photon components:

* ``bound_vacuum_lower``  -- lower bound on the zero-photon count,
* ``bound_single_lower``  -- lower bound on the one-photon count,
* ``bound_single_upper``  -- upper bound on the one-photon count.

All bounds are clamped to the physical range [0, n_O]; clamping a valid
bound only tightens it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bb84mm.stat_bounds import hoeffding_decoy_dev

__all__ = [
    "DecoyConfig",
    "OutcomeCounts",
    "Observations",
    "photon_given_intensity",
    "tau",
    "intensity_given_photon",
    "shifted_counts",
    "bound_vacuum_lower",
    "bound_single_lower",
    "bound_single_upper",
]

# Poisson series cutoff for tau normalization checks; at mu <= 1 the tail
# beyond 50 is < 1e-15.
TAU_CUTOFF = 50


@dataclass(frozen=True)
class DecoyConfig:
    """Intensities mu1 > mu2 + mu3, mu2 > mu3 >= 0 and their probabilities."""

    intensities: tuple[float, float, float]
    probabilities: tuple[float, float, float]

    def __post_init__(self) -> None:
        mu1, mu2, mu3 = self.intensities
        if not (mu1 > mu2 + mu3 and mu2 > mu3 >= 0.0):
            raise ValueError(
                f"intensities must satisfy mu1 > mu2 + mu3 and mu2 > mu3 >= 0, "
                f"got {self.intensities}"
            )
        if any(p <= 0.0 for p in self.probabilities):
            raise ValueError(f"intensity probabilities must be positive, got {self.probabilities}")
        if abs(sum(self.probabilities) - 1.0) > 1e-12:
            raise ValueError(f"intensity probabilities must sum to 1, got {self.probabilities}")

    @classmethod
    def reference(cls) -> "DecoyConfig":
        """Three equiprobable intensities 0.9 / 0.1 / 0 (vacuum decoy)."""
        return cls(intensities=(0.9, 0.1, 0.0), probabilities=(1 / 3, 1 / 3, 1 / 3))


@dataclass(frozen=True)
class OutcomeCounts:
    """Per-intensity counts of one outcome class.

    Counts are integers in a protocol run; expectation pipelines may carry
    real values, which the bounds accept unchanged.
    """

    counts: tuple[float, float, float]

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts):
            raise ValueError(f"counts must be nonnegative, got {self.counts}")

    @property
    def total(self) -> float:
        return sum(self.counts)


@dataclass(frozen=True)
class Observations:
    """Full per-intensity observation record of one protocol run.

    ``n_x``: X-basis conclusive counts, ``n_k``: key-generation counts,
    ``e_x``: per-intensity X error rates, ``e_z``: pooled error-rate estimate
    from the sampled key-basis test fraction.
    """

    n_x: tuple[float, float, float]
    n_k: tuple[float, float, float]
    e_x: tuple[float, float, float]
    e_z: float

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.n_x) or any(c < 0 for c in self.n_k):
            raise ValueError("counts must be nonnegative")
        if any(not 0.0 <= e <= 1.0 for e in self.e_x) or not 0.0 <= self.e_z <= 1.0:
            raise ValueError("error rates must lie in [0, 1]")

    @property
    def n_x_err(self) -> tuple[float, float, float]:
        """Per-intensity counts of X-basis conclusive rounds with an error."""
        return tuple(n * e for n, e in zip(self.n_x, self.e_x))

    def counts_x(self) -> OutcomeCounts:
        return OutcomeCounts(tuple(self.n_x))

    def counts_x_err(self) -> OutcomeCounts:
        return OutcomeCounts(self.n_x_err)

    def counts_k(self) -> OutcomeCounts:
        return OutcomeCounts(tuple(self.n_k))


def photon_given_intensity(m: int, mu: float) -> float:
    """Poisson mass p(m | mu) = exp(-mu) mu^m / m!."""
    if m < 0:
        raise ValueError(f"photon number must be >= 0, got {m}")
    if mu < 0:
        raise ValueError(f"intensity must be >= 0, got {mu}")
    if mu == 0.0:
        return 1.0 if m == 0 else 0.0
    return math.exp(m * math.log(mu) - mu - math.lgamma(m + 1))


def tau(m: int, cfg: DecoyConfig) -> float:
    """Unconditional probability of an m-photon emission under cfg."""
    return sum(
        p * photon_given_intensity(m, mu)
        for p, mu in zip(cfg.probabilities, cfg.intensities)
    )


def intensity_given_photon(m: int, cfg: DecoyConfig) -> np.ndarray:
    """Conditional intensity distribution p(mu_k | m), a length-3 vector.

    Only needed by the Monte Carlo validator; the analytic bounds absorb
    these probabilities.
    """
    w = np.array(
        [p * photon_given_intensity(m, mu) for p, mu in zip(cfg.probabilities, cfg.intensities)]
    )
    t = w.sum()
    if t <= 0.0:
        raise ValueError(f"no intensity can emit {m} photons under {cfg}")
    return w / t


def shifted_counts(
    counts: OutcomeCounts, cfg: DecoyConfig, eps_sq: float
) -> tuple[np.ndarray, np.ndarray]:
    """Hoeffding-shifted per-intensity counts (plus, minus).

    Each observed count is widened by the deviation term for the outcome
    total, then rescaled by exp(mu_k)/p_k; the minus branch is clamped at 0.
    """
    t = hoeffding_decoy_dev(counts.total, eps_sq)
    n = np.asarray(counts.counts, dtype=float)
    scale = np.exp(cfg.intensities) / np.asarray(cfg.probabilities)
    plus = scale * (n + t)
    minus = np.maximum(0.0, scale * (n - t))
    return plus, minus


def bound_vacuum_lower(counts: OutcomeCounts, cfg: DecoyConfig, eps_sq: float) -> float:
    """Lower bound on the zero-photon component of the outcome class."""
    _, mu2, mu3 = cfg.intensities
    plus, minus = shifted_counts(counts, cfg, eps_sq)
    raw = tau(0, cfg) * (mu2 * minus[2] - mu3 * plus[1]) / (mu2 - mu3)
    return min(counts.total, max(0.0, raw))


def bound_single_lower(counts: OutcomeCounts, cfg: DecoyConfig, eps_sq: float) -> float:
    """Lower bound on the one-photon component of the outcome class."""
    mu1, mu2, mu3 = cfg.intensities
    plus, minus = shifted_counts(counts, cfg, eps_sq)
    denom = mu1 * (mu2 - mu3) - mu2**2 + mu3**2
    vac = bound_vacuum_lower(counts, cfg, eps_sq)
    raw = (mu1 * tau(1, cfg) / denom) * (
        minus[1] - plus[2] - (mu2**2 - mu3**2) / mu1**2 * (plus[0] - vac / tau(0, cfg))
    )
    return min(counts.total, max(0.0, raw))


def bound_single_upper(counts: OutcomeCounts, cfg: DecoyConfig, eps_sq: float) -> float:
    """Upper bound on the one-photon component of the outcome class."""
    _, mu2, mu3 = cfg.intensities
    plus, minus = shifted_counts(counts, cfg, eps_sq)
    raw = tau(1, cfg) * (plus[1] - minus[2]) / (mu2 - mu3)
    return min(counts.total, max(0.0, raw))


def single_photon_interval(
    counts: OutcomeCounts, cfg: DecoyConfig, eps_sq: float
) -> tuple[float, float, bool]:
    """(lower, upper, feasible) for the one-photon component.

    Statistically inconsistent counts can cross the clamped bounds; the
    flag (never an exception) tells callers to force a zero-length key.
    """
    lo = bound_single_lower(counts, cfg, eps_sq)
    hi = bound_single_upper(counts, cfg, eps_sq)
    return lo, hi, lo <= hi
