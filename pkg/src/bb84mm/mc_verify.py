"""Monte Carlo validation of the concentration bounds on classical instances.

The sampling lemmas behind the finite-size analysis are statements about
outcome *distributions*, so classical surrogates reproduce them exactly:
per-round click probabilities stand in for POVM-element norms (the ordering
construction reduces the quantum statement to this case).  Four verifiers:

* ``verify_serfling``       -- IID test/key assignment, stratified on the
                               realized (n_test, n_key);
* ``verify_small_povm``     -- discard counts of a small click operator
                               against the binomial tail;
* ``verify_freq_transfer``  -- frequency transfer between two nearby click
                               profiles against tail + 2*delta shift;
* ``verify_decoy_hoeffding``-- per-intensity counts against photon-number-
                               conditioned expectations, with adversarially
                               correlated photon sequences.

Each verifier is deterministic given its seed (per backend) and reports the
empirical violation frequency, the analytic bound, the exact binomial
standard error of the empirical frequency, and a pass flag meaning
empirical <= bound + 3*sigma on every tested statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from bb84mm import _kernels
from bb84mm.decoy import DecoyConfig, intensity_given_photon
from bb84mm.stat_bounds import (
    TailQuery,
    _tail_threshold,
    binomial_tail,
    f_serf,
    hoeffding_decoy_dev,
)

__all__ = [
    "TrialConfig",
    "VerifierReport",
    "verify_serfling",
    "verify_small_povm",
    "verify_freq_transfer",
    "verify_decoy_hoeffding",
    "run_all",
]

# Strata below this trial count are reported but not asserted.
MIN_STRATUM = 100


@dataclass(frozen=True)
class TrialConfig:
    """Shared trial settings plus per-lemma scenario parameters.

    Defaults reproduce the acceptance configuration (n = 2000, 1e5 trials).
    """

    n: int = 2000
    trials: int = 100_000
    seed: int = 20240901
    # serfling scenario
    p_test: float = 0.5
    p_key: float = 0.5
    ones_density: float = 0.5
    gamma: float = 0.05
    # small-povm / freq-transfer scenario
    delta: float = 0.01
    c: float = 0.005
    base_rate: float = 0.1
    profile: str = "extremal"  # "extremal" | "heterogeneous" | "zero"
    # decoy-hoeffding scenario
    eps_sq: float = 1e-4
    markov_stay: float = 0.9
    photon_levels: int = 3
    constant_photons: int = -1  # >= 0 pins the photon number (IID reduction)

    def __post_init__(self) -> None:
        if self.n < 1 or self.trials < 1:
            raise ValueError("n and trials must be positive")
        if self.trials < 1000:
            raise ValueError("trials must be >= 1000 for reportable frequencies")
        if self.p_test + self.p_key > 1.0 + 1e-12:
            raise ValueError("p_test + p_key must not exceed 1")


@dataclass(frozen=True)
class VerifierReport:
    """Empirical-vs-bound summary of one verifier run."""

    name: str
    empirical: float
    bound: float
    sigma: float
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "empirical": self.empirical,
            "bound": self.bound,
            "sigma": self.sigma,
            "pass": self.passed,
            "backend": _kernels.backend_name(),
            "details": self.details,
        }


def _binomial_se(freq: float, count: int) -> float:
    return math.sqrt(freq * (1.0 - freq) / count) if count > 0 else 0.0


def _fixed_bits(n: int, density: float) -> np.ndarray:
    ones = int(round(n * density))
    bits = np.zeros(n, np.uint8)
    bits[:ones] = 1
    return bits


def verify_serfling(cfg: TrialConfig) -> VerifierReport:
    """Key mean exceeding test mean + gamma, conditioned per stratum.

    Positions of a fixed bit string are assigned to test/key IID; trials
    are bucketed by the realized (n_test, n_key) and each occupied bucket
    is checked against exp(-2 gamma^2 f_serf(n_test, n_key)).
    """
    bits = _fixed_bits(cfg.n, cfg.ones_density)
    n_t, n_k, s_t, s_k = _kernels.serfling_trials(
        bits, cfg.p_test, cfg.p_key, cfg.trials, cfg.seed
    )
    valid = (n_t >= 1) & (n_k >= 1)
    viol = np.zeros(cfg.trials, bool)
    viol[valid] = (
        s_k[valid] / n_k[valid] >= s_t[valid] / n_t[valid] + cfg.gamma - 1e-15
    )

    keys = n_t.astype(np.int64) * (cfg.n + 1) + n_k
    strata, inverse = np.unique(keys[valid], return_inverse=True)
    counts = np.bincount(inverse)
    viols = np.bincount(inverse, weights=viol[valid].astype(float))

    passed = True
    weighted_bound = 0.0
    tested = skipped = 0
    worst: dict[str, Any] | None = None
    for idx, key in enumerate(strata):
        nt, nk = int(key) // (cfg.n + 1), int(key) % (cfg.n + 1)
        cnt = int(counts[idx])
        emp = float(viols[idx] / cnt)
        bound = math.exp(-2.0 * cfg.gamma**2 * f_serf(nt, nk))
        weighted_bound += cnt * bound
        if cnt < MIN_STRATUM:
            skipped += 1
            continue
        tested += 1
        sig = _binomial_se(emp, cnt)
        ok = bool(emp <= bound + 3.0 * sig)
        passed &= ok
        margin = emp - bound - 3.0 * sig
        if worst is None or margin > worst["margin"]:
            worst = {
                "n_test": nt,
                "n_key": nk,
                "trials": cnt,
                "empirical": emp,
                "bound": bound,
                "sigma": sig,
                "margin": margin,
            }

    n_valid = int(valid.sum())
    empirical = float(viol.sum()) / n_valid if n_valid else 0.0
    return VerifierReport(
        name="serfling",
        empirical=empirical,
        bound=weighted_bound / n_valid if n_valid else 0.0,
        sigma=_binomial_se(empirical, n_valid),
        passed=passed,
        details={
            "strata_tested": tested,
            "strata_skipped": skipped,
            "worst_stratum": worst,
            "gamma": cfg.gamma,
        },
    )


def _click_profile(cfg: TrialConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.profile == "extremal":
        return np.full(cfg.n, cfg.delta)
    if cfg.profile == "heterogeneous":
        return rng.uniform(0.0, cfg.delta, cfg.n)
    if cfg.profile == "zero":
        return np.zeros(cfg.n)
    raise ValueError(f"unknown click profile {cfg.profile!r}")


def verify_small_povm(cfg: TrialConfig) -> VerifierReport:
    """Discard-count tail of a small click operator vs the binomial tail.

    Per-round click probabilities p_i <= delta; the extremal profile
    p_i = delta is the Bernoulli case where the bound is tight (report
    carries the two-sided agreement for that mode).
    """
    rng = np.random.default_rng(cfg.seed)
    p = _click_profile(cfg, rng)
    counts = _kernels.bernoulli_count_trials(p, cfg.trials, cfg.seed + 1)
    threshold = _tail_threshold(cfg.n, cfg.delta + cfg.c)
    bound = binomial_tail(TailQuery(n=cfg.n, delta=cfg.delta, c=cfg.c))
    empirical = float((counts >= threshold).mean())
    sigma = _binomial_se(empirical, cfg.trials)
    passed = bool(empirical <= bound + 3.0 * sigma)
    sigma_bound = _binomial_se(bound, cfg.trials)
    return VerifierReport(
        name="smallpovm",
        empirical=empirical,
        bound=bound,
        sigma=sigma,
        passed=passed,
        details={
            "profile": cfg.profile,
            "threshold": threshold,
            "tight_two_sided": bool(abs(empirical - bound) <= 3.0 * sigma_bound),
        },
    )


def verify_freq_transfer(cfg: TrialConfig) -> VerifierReport:
    """Nearby click profiles give nearby exceedance frequencies.

    Draws a random profile p and a perturbed p' with |p' - p| <= delta
    (coupled through shared per-round uniforms, the classical image of the
    three-outcome remapping), then checks, on a grid of base rates e,

        Pr[N'/n >= e + 2 delta + c] <= Pr[N/n >= e] + tail(n; 2 delta; c).
    """
    rng = np.random.default_rng(cfg.seed)
    half_width = min(cfg.base_rate - 0.01, 0.05)
    p = rng.uniform(cfg.base_rate - half_width, cfg.base_rate + half_width, cfg.n)
    p_prime = np.clip(p + rng.uniform(-cfg.delta, cfg.delta, cfg.n), 0.0, 1.0)
    c_p, c_pp = _kernels.coupled_pair_trials(p, p_prime, cfg.trials, cfg.seed + 1)

    tail = binomial_tail(TailQuery(n=cfg.n, delta=min(1.0, 2.0 * cfg.delta), c=cfg.c))
    grid = [cfg.base_rate - 0.02, cfg.base_rate, cfg.base_rate + 0.02]
    rows = []
    passed = True
    for e in grid:
        left = float((c_pp >= _tail_threshold(cfg.n, e + 2.0 * cfg.delta + cfg.c)).mean())
        right_freq = float((c_p >= _tail_threshold(cfg.n, e)).mean())
        right = right_freq + tail
        sig = math.hypot(_binomial_se(left, cfg.trials), _binomial_se(right_freq, cfg.trials))
        ok = bool(left <= right + 3.0 * sig)
        passed &= ok
        rows.append(
            {"e": e, "left": left, "right": right, "sigma": sig, "pass": ok}
        )
    worst = max(rows, key=lambda r: r["left"] - r["right"])
    return VerifierReport(
        name="transfer",
        empirical=worst["left"],
        bound=worst["right"],
        sigma=worst["sigma"],
        passed=passed,
        details={"grid": rows, "tail_term": tail},
    )


def verify_decoy_hoeffding(cfg: TrialConfig, decoy: DecoyConfig | None = None) -> VerifierReport:
    """Per-intensity counts vs photon-conditioned expectations.

    Photon numbers follow a sticky Markov chain (correlated on purpose;
    conditioning on the sequence still leaves the intensity draws
    independent, which is all the bound needs).  Checks, for every
    intensity k,

        Pr[|n_k - sum_m p(mu_k|m) n_m| >= t] <= eps_sq,

    with t the Hoeffding deviation at the eps_sq target.
    """
    decoy = decoy or DecoyConfig.reference()
    cond = np.stack(
        [intensity_given_photon(m, decoy) for m in range(cfg.photon_levels)]
    )
    counts_k, counts_m = _kernels.intensity_assignment_trials(
        cfg.n,
        cfg.trials,
        cfg.seed,
        cfg.markov_stay,
        np.cumsum(cond, axis=1),
        cfg.constant_photons,
    )
    t = hoeffding_decoy_dev(cfg.n, cfg.eps_sq)
    expected = counts_m @ cond  # (trials, intensities)
    dev = np.abs(counts_k - expected)
    rows = []
    passed = True
    for k in range(cond.shape[1]):
        emp = float((dev[:, k] >= t).mean())
        sig = _binomial_se(emp, cfg.trials)
        ok = bool(emp <= cfg.eps_sq + 3.0 * sig)
        passed &= ok
        rows.append({"intensity_index": k, "empirical": emp, "sigma": sig, "pass": ok})
    worst = max(rows, key=lambda r: r["empirical"])
    return VerifierReport(
        name="decoy",
        empirical=worst["empirical"],
        bound=cfg.eps_sq,
        sigma=worst["sigma"],
        passed=passed,
        details={
            "deviation": t,
            "per_intensity": rows,
            "constant_photons": cfg.constant_photons,
            "markov_stay": cfg.markov_stay,
        },
    )


def run_all(cfg: TrialConfig | None = None) -> list[VerifierReport]:
    """All four verifiers at the given (or default) configuration."""
    cfg = cfg or TrialConfig()
    return [
        verify_serfling(cfg),
        verify_small_povm(cfg),
        verify_freq_transfer(cfg),
        verify_decoy_hoeffding(cfg),
    ]
