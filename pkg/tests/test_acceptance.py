"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.  Criteria and tolerances are pinned here; nothing is
deferred to later calibration.
"""

import math
import time

import numpy as np
import pytest

from bb84mm.channel_sim import ChannelSpec, expected_observations, sample_observations
from bb84mm.decoy import (
    DecoyConfig,
    bound_single_lower,
    bound_single_upper,
    bound_vacuum_lower,
)
from bb84mm.detector_model import (
    DeltaPair,
    DetectorSpec,
    build_block_povms,
    closed_form_deltas,
    oracle_deltas,
)
from bb84mm.keyrate import EpsilonBudget, key_length_decoy
from bb84mm.mc_verify import (
    TrialConfig,
    verify_decoy_hoeffding,
    verify_freq_transfer,
    verify_serfling,
    verify_small_povm,
)
from bb84mm.phase_error import PhaseErrorQuery, bound_mismatch, bound_perfect

REFERENCE_DECOY = DecoyConfig.reference()
REFERENCE_BUDGET = EpsilonBudget.equal(1e-12)


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False


def _report(criterion: int, label: str, elapsed: float, budget: float) -> None:
    print(f"ACCEPTANCE {criterion}: PASS  {label}  ({elapsed:.1f}s / budget {budget:.0f}s)")
    assert elapsed < budget, f"criterion {criterion} exceeded its runtime budget"


def test_criterion_1_degenerate_mismatch_reduction():
    """bound_mismatch at zero deltas equals bound_perfect to 1e-12."""
    with _Timer() as t:
        rng = np.random.default_rng(1)
        eps_sq = 1e-24
        for _ in range(100):
            e_obs = float(rng.uniform(0.0, 0.3))
            n = int(rng.integers(10, 10**8))
            got = bound_mismatch(
                PhaseErrorQuery(
                    e_obs=e_obs,
                    n_test=n,
                    n_key=n,
                    deltas=DeltaPair.zero(),
                    eps_a_sq=eps_sq,
                    eps_b_sq=eps_sq,
                    eps_c_sq=eps_sq,
                )
            )
            expect = bound_perfect(e_obs, n, n, eps_sq)
            assert abs(got.value - expect) <= 1e-12, (e_obs, n)
    _report(1, "zero-mismatch bound reduces to the Serfling-only bound", t.elapsed, 1.0)


def test_criterion_2_delta_oracle_dominance():
    """Numeric oracle never exceeds the closed form; both vanish at zero
    tolerance."""
    with _Timer() as t:
        for tol in (0.0, 0.005, 0.01, 0.02):
            spec = DetectorSpec(eta_det=0.7, d_det=1e-6, delta_eta=tol, delta_dc=tol)
            oracle = oracle_deltas(spec, n_max=4, interior_samples=8, seed=2)
            closed = closed_form_deltas(spec)
            assert oracle.delta1 <= closed.delta1 + 1e-12
            assert oracle.delta2 <= closed.delta2 + 1e-12
            if tol == 0.0:
                assert abs(oracle.delta1) < 1e-10 and abs(closed.delta1) < 1e-10
                assert abs(oracle.delta2) < 1e-10 and abs(closed.delta2) < 1e-10
    _report(2, "oracle deltas dominated by closed form on the tolerance grid", t.elapsed, 60.0)


def test_criterion_3_simplified_bound_consistency():
    """Closed form tracks 4*max(tolerances) and 2*max(tolerances) within 10%."""
    with _Timer() as t:
        grid = [
            (0.005, 0.005),
            (0.01, 0.01),
            (0.02, 0.02),
            (0.02, 0.005),
            (0.005, 0.02),
            (0.001, 0.02),
        ]
        for d_eta, d_dc in grid:
            d = closed_form_deltas(DetectorSpec(0.7, 1e-6, d_eta, d_dc))
            top = max(d_eta, d_dc)
            assert abs(d.delta1 - 4.0 * top) <= 0.1 * 4.0 * top, (d_eta, d_dc)
            assert abs(d.delta2 - 2.0 * top) <= 0.1 * 2.0 * top, (d_eta, d_dc)
    _report(3, "closed form within 10% of the simplified 4max/2max laws", t.elapsed, 1.0)


def _tail_logspace(n: int, delta: float, k0: int) -> float:
    """Exact log-space binomial upper tail P[X >= k0], n <= 1e5."""
    if k0 <= 0:
        return 1.0
    if k0 > n or delta == 0.0:
        return 0.0
    i = np.arange(k0, n + 1, dtype=np.float64)
    logpmf = (
        math.lgamma(n + 1)
        - np.array([math.lgamma(v + 1) for v in i])
        - np.array([math.lgamma(n - v + 1) for v in i])
        + i * math.log(delta)
        + (n - i) * math.log1p(-delta)
    )
    top = logpmf.max()
    return float(math.exp(top) * np.exp(logpmf - top).sum())


def test_criterion_4_gamma_bin_inversion():
    """Smallest-deviation property of gamma_bin on 500 random triples,
    checked against exact summation."""
    from bb84mm.stat_bounds import gamma_bin

    with _Timer() as t:
        rng = np.random.default_rng(4)
        for _ in range(500):
            n = int(rng.integers(1, 10**4))
            delta = float(rng.uniform(1e-4, 0.999))
            eps_sq = float(10.0 ** rng.uniform(-24, -1))
            c = gamma_bin(n, delta, eps_sq)
            k_at = math.ceil(n * (delta + c) - 1e-9)
            assert _tail_logspace(n, delta, k_at) <= eps_sq * (1 + 1e-9), (n, delta, eps_sq)
            if c >= 1.0 / n and delta + c - 1.0 / n <= 1.0:
                k_below = math.ceil(n * (delta + c - 1.0 / n) - 1e-9)
                assert _tail_logspace(n, delta, k_below) > eps_sq, (n, delta, eps_sq)
    _report(4, "gamma_bin inverts the exact binomial tail", t.elapsed, 30.0)


def test_criterion_5_monte_carlo_lemma_suite():
    """All four concentration-lemma verifiers pass at the default
    configuration (n = 2000, 1e5 trials)."""
    with _Timer() as t:
        cfg = TrialConfig()
        for verify in (
            verify_serfling,
            verify_small_povm,
            verify_freq_transfer,
            verify_decoy_hoeffding,
        ):
            rep = verify(cfg)
            assert rep.passed, rep.as_dict()
    _report(5, "Monte Carlo lemma suite (4 verifiers, 1e5 trials)", t.elapsed, 60.0)


def test_criterion_6_decoy_sandwich():
    """1e3 sampled honest runs: the simultaneous decoy-bound event never
    fails (budget 9 eps^2 at eps = 1e-12 predicts zero misses)."""
    with _Timer() as t:
        ch = ChannelSpec.reference(loss_db=10.0, n_total=10**7)
        eps_sq = 1e-24
        failures = 0
        for seed in range(1000):
            obs, tags = sample_observations(ch, REFERENCE_DECOY, seed=seed, with_tags=True)
            for counts, tag in (
                (obs.counts_x(), tags.x),
                (obs.counts_x_err(), tags.x_err),
                (obs.counts_k(), tags.k),
            ):
                ok = (
                    bound_vacuum_lower(counts, REFERENCE_DECOY, eps_sq) <= tag[0]
                    and bound_single_lower(counts, REFERENCE_DECOY, eps_sq) <= tag[1]
                    and tag[1] <= bound_single_upper(counts, REFERENCE_DECOY, eps_sq)
                )
                failures += not ok
        assert failures == 0
    _report(6, "decoy sandwich holds in 1000/1000 sampled runs", t.elapsed, 300.0)


def _reference_rate(loss_db: float, deltas: DeltaPair) -> int:
    ch = ChannelSpec.reference(loss_db=loss_db, n_total=10**12)
    obs = expected_observations(ch, REFERENCE_DECOY)
    return key_length_decoy(obs, REFERENCE_DECOY, deltas, REFERENCE_BUDGET).key_length


def test_criterion_7_key_rate_structure():
    """Reference-scenario key-rate curves: positive and non-increasing in
    loss at zero mismatch, non-increasing in the tolerances, identically
    zero at full dark-count tolerance, exact security parameter."""
    with _Timer() as t:
        losses = np.arange(0.0, 20.5, 2.0)
        zero = [_reference_rate(loss, DeltaPair.zero()) for loss in losses]
        assert all(l > 0 for l in zero), "zero-mismatch curve must be positive to 20 dB"
        assert all(a >= b for a, b in zip(zero, zero[1:])), "must not increase with loss"

        for loss in (2.0, 10.0, 18.0):
            for axis in ("delta_eta", "delta_dc"):
                rates = []
                for tol in (0.0, 0.005, 0.01, 0.02):
                    spec = DetectorSpec(0.7, 1e-6, **{axis: tol})
                    rates.append(_reference_rate(loss, closed_form_deltas(spec)))
                assert all(a >= b for a, b in zip(rates, rates[1:])), (loss, axis)

        with pytest.warns(UserWarning):
            degenerate = closed_form_deltas(DetectorSpec(0.7, 1e-6, 0.0, 1.0))
        assert all(
            _reference_rate(loss, degenerate) == 0 for loss in (0.0, 10.0, 20.0)
        ), "full dark-count tolerance must yield zero key everywhere"

        assert REFERENCE_BUDGET.security_parameter(decoy=True) == pytest.approx(
            (2.0 * math.sqrt(12.0) + 2.0) * 1e-12, rel=1e-12
        )
    _report(7, "key-rate curve structure and security parameter", t.elapsed, 120.0)


def test_criterion_8_povm_structural_suite():
    """Completeness, positivity, two-step reconstruction, and common-filter
    dominance on all blocks N <= 6 across 50 random parameter corners."""
    with _Timer() as t:
        rng = np.random.default_rng(8)
        for trial in range(50):
            eta = tuple(rng.uniform(0.3, 1.0, 4))
            dc = tuple(rng.uniform(0.0, 0.1, 4))
            for blk in build_block_povms(6, eta, dc):
                dim = 2 * (blk.n_photons + 1)
                eye = np.eye(dim)
                common = blk.operators["common_filter"]
                common_root = math.sqrt(common[0, 0]) * eye
                for b in ("Z", "X"):
                    parts = [
                        blk.operators[f"inconclusive_{b}"],
                        blk.operators[f"error_{b}"],
                        blk.operators[f"match_{b}"],
                    ]
                    for op in parts:
                        assert np.linalg.eigvalsh(op).min() >= -1e-12
                    assert np.abs(sum(parts) - eye).max() < 1e-10
                    # common filter dominates the conclusive filter
                    gap = common - blk.operators[f"conclusive_{b}"]
                    assert np.linalg.eigvalsh(gap).min() >= -1e-12
                    # two-step reconstruction of the raw error operator
                    w, v = np.linalg.eigh(blk.operators[f"residual_filter_{b}"])
                    res_root = (v * np.sqrt(np.clip(w, 0, None))) @ v.T
                    rebuilt = (
                        common_root
                        @ res_root
                        @ blk.operators[f"outcome_error_{b}"]
                        @ res_root
                        @ common_root
                    )
                    assert np.abs(rebuilt - blk.operators[f"error_{b}"]).max() < 1e-10, (
                        trial,
                        blk.n_photons,
                        b,
                    )
    _report(8, "POVM structural suite (N <= 6, 50 corners)", t.elapsed, 120.0)
