"""Hot Monte Carlo kernels with two interchangeable backends.

The trial loops dominate the runtime of the lemma verifiers (1e5 trials at
n = 2000 rounds each), so they are implemented twice:

* a numba ``@njit`` loop backend (default when numba imports), and
* a chunked vectorized numpy fallback.

Set the environment variable ``BB84MM_NO_NUMBA=1`` to force the numpy path.
Both backends are deterministic given a seed, but their random streams
differ, so per-backend results are reproducible individually, not across
backends.  ``benchmarks/bench_backends.py`` compares the two.

Every kernel returns per-trial aggregate counts; statistics and bound
comparisons happen in :mod:`bb84mm.mc_verify`.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "serfling_trials",
    "bernoulli_count_trials",
    "coupled_pair_trials",
    "intensity_assignment_trials",
]

_DISABLED = os.environ.get("BB84MM_NO_NUMBA", "").strip() not in ("", "0")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# Chunk size (trials per vectorized batch) for the numpy backend, chosen to
# keep the uniform matrices around 100 MB at n = 2000.
_CHUNK = 4096


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------


def _serfling_trials_np(bits, p_test, p_key, trials, seed):
    rng = np.random.default_rng(seed)
    n = bits.shape[0]
    mask_bits = bits.astype(bool)
    n_t = np.empty(trials, np.int64)
    n_k = np.empty(trials, np.int64)
    s_t = np.empty(trials, np.int64)
    s_k = np.empty(trials, np.int64)
    for start in range(0, trials, _CHUNK):
        m = min(_CHUNK, trials - start)
        u = rng.random((m, n))
        test = u < p_test
        key = ~test & (u < p_test + p_key)
        sl = slice(start, start + m)
        n_t[sl] = test.sum(axis=1)
        n_k[sl] = key.sum(axis=1)
        s_t[sl] = (test & mask_bits).sum(axis=1)
        s_k[sl] = (key & mask_bits).sum(axis=1)
    return n_t, n_k, s_t, s_k


def _bernoulli_count_trials_np(p, trials, seed):
    rng = np.random.default_rng(seed)
    n = p.shape[0]
    counts = np.empty(trials, np.int64)
    for start in range(0, trials, _CHUNK):
        m = min(_CHUNK, trials - start)
        u = rng.random((m, n))
        counts[start : start + m] = (u < p).sum(axis=1)
    return counts


def _coupled_pair_trials_np(p, p_prime, trials, seed):
    rng = np.random.default_rng(seed)
    n = p.shape[0]
    c = np.empty(trials, np.int64)
    c_prime = np.empty(trials, np.int64)
    for start in range(0, trials, _CHUNK):
        m = min(_CHUNK, trials - start)
        u = rng.random((m, n))
        sl = slice(start, start + m)
        c[sl] = (u < p).sum(axis=1)
        c_prime[sl] = (u < p_prime).sum(axis=1)
    return c, c_prime


def _intensity_assignment_trials_np(n, trials, seed, stay, cond_cum, constant_m):
    rng = np.random.default_rng(seed)
    levels, n_int = cond_cum.shape
    counts_k = np.zeros((trials, n_int), np.int64)
    counts_m = np.zeros((trials, levels), np.int64)
    rows = np.arange(trials)
    if constant_m >= 0:
        state = np.full(trials, constant_m, np.int64)
    else:
        state = rng.integers(0, levels, size=trials)
    for _ in range(n):
        if constant_m < 0:
            move = rng.random(trials) >= stay
            fresh = rng.integers(0, levels, size=trials)
            state = np.where(move, fresh, state)
        counts_m[rows, state] += 1
        v = rng.random(trials)
        k = (v[:, None] >= cond_cum[state]).sum(axis=1)
        counts_k[rows, np.minimum(k, n_int - 1)] += 1
    return counts_k, counts_m


# ---------------------------------------------------------------------------
# numba backend: identical contracts, loop bodies jitted
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    # Uniforms are drawn one n-vector per trial: numba's scalar random()
    # call costs ~10x the amortized block draw.

    @njit(cache=True)
    def _serfling_trials_nb(bits, p_test, p_key, trials, seed):
        np.random.seed(seed)
        n = bits.shape[0]
        n_t = np.empty(trials, np.int64)
        n_k = np.empty(trials, np.int64)
        s_t = np.empty(trials, np.int64)
        s_k = np.empty(trials, np.int64)
        for t in range(trials):
            u = np.random.random(n)
            a = b = sa = sb = 0
            for i in range(n):
                if u[i] < p_test:
                    a += 1
                    sa += bits[i]
                elif u[i] < p_test + p_key:
                    b += 1
                    sb += bits[i]
            n_t[t] = a
            n_k[t] = b
            s_t[t] = sa
            s_k[t] = sb
        return n_t, n_k, s_t, s_k

    @njit(cache=True)
    def _bernoulli_count_trials_nb(p, trials, seed):
        np.random.seed(seed)
        n = p.shape[0]
        counts = np.empty(trials, np.int64)
        for t in range(trials):
            u = np.random.random(n)
            c = 0
            for i in range(n):
                if u[i] < p[i]:
                    c += 1
            counts[t] = c
        return counts

    @njit(cache=True)
    def _coupled_pair_trials_nb(p, p_prime, trials, seed):
        np.random.seed(seed)
        n = p.shape[0]
        c = np.empty(trials, np.int64)
        c_prime = np.empty(trials, np.int64)
        for t in range(trials):
            u = np.random.random(n)
            x = y = 0
            for i in range(n):
                if u[i] < p[i]:
                    x += 1
                if u[i] < p_prime[i]:
                    y += 1
            c[t] = x
            c_prime[t] = y
        return c, c_prime

    @njit(cache=True)
    def _intensity_assignment_trials_nb(n, trials, seed, stay, cond_cum, constant_m):
        np.random.seed(seed)
        levels, n_int = cond_cum.shape
        counts_k = np.zeros((trials, n_int), np.int64)
        counts_m = np.zeros((trials, levels), np.int64)
        for t in range(trials):
            u_state = np.random.random(n)
            u_int = np.random.random(n)
            if constant_m >= 0:
                state = constant_m
            else:
                state = np.random.randint(0, levels)
            for i in range(n):
                if constant_m < 0 and u_state[i] >= stay:
                    # rescaled excess of the same uniform is again uniform,
                    # independent of the move decision
                    state = int((u_state[i] - stay) / (1.0 - stay) * levels)
                    if state >= levels:
                        state = levels - 1
                counts_m[t, state] += 1
                k = 0
                while k < n_int - 1 and u_int[i] >= cond_cum[state, k]:
                    k += 1
                counts_k[t, k] += 1
        return counts_k, counts_m


# ---------------------------------------------------------------------------
# public dispatchers
# ---------------------------------------------------------------------------


def serfling_trials(bits: np.ndarray, p_test: float, p_key: float, trials: int, seed: int):
    """Assign each of n positions to test/key IID per trial.

    Returns per-trial (n_test, n_key, ones_in_test, ones_in_key).
    """
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if NUMBA_ENABLED:
        return _serfling_trials_nb(bits, p_test, p_key, trials, seed)
    return _serfling_trials_np(bits, p_test, p_key, trials, seed)


def bernoulli_count_trials(p: np.ndarray, trials: int, seed: int) -> np.ndarray:
    """Per-trial count of successes over independent Bernoulli(p_i) rounds."""
    p = np.ascontiguousarray(p, dtype=np.float64)
    if NUMBA_ENABLED:
        return _bernoulli_count_trials_nb(p, trials, seed)
    return _bernoulli_count_trials_np(p, trials, seed)


def coupled_pair_trials(p: np.ndarray, p_prime: np.ndarray, trials: int, seed: int):
    """Counts for two Bernoulli profiles driven by shared per-round uniforms.

    Equivalent to the three-outcome remapping that couples an ordered pair
    of per-round click operators: rounds where only the larger of
    (p_i, p'_i) fires form the middle outcome.  Marginals match independent
    sampling of each profile.
    """
    p = np.ascontiguousarray(p, dtype=np.float64)
    p_prime = np.ascontiguousarray(p_prime, dtype=np.float64)
    if NUMBA_ENABLED:
        return _coupled_pair_trials_nb(p, p_prime, trials, seed)
    return _coupled_pair_trials_np(p, p_prime, trials, seed)


def intensity_assignment_trials(
    n: int,
    trials: int,
    seed: int,
    stay: float,
    cond_cum: np.ndarray,
    constant_m: int = -1,
):
    """Photon-number sequence plus per-round intensity assignment.

    The photon number follows a sticky uniform Markov chain over
    ``cond_cum.shape[0]`` levels (or stays at ``constant_m`` when >= 0);
    each round's intensity is drawn from the photon-number-conditional
    distribution whose cumulative rows are ``cond_cum``.  Returns per-trial
    intensity counts (trials, n_intensities) and photon-level counts
    (trials, levels).
    """
    cond_cum = np.ascontiguousarray(cond_cum, dtype=np.float64)
    if NUMBA_ENABLED:
        return _intensity_assignment_trials_nb(n, trials, seed, stay, cond_cum, constant_m)
    return _intensity_assignment_trials_np(n, trials, seed, stay, cond_cum, constant_m)
