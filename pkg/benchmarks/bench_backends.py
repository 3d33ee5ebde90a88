#!/usr/bin/env python3
"""Benchmark the numba kernels against the vectorized numpy fallback.

Runs each Monte Carlo kernel at the acceptance workload under both backends
and prints a timing table.  The numpy path is selected the same way users
select it: by re-importing with BB84MM_NO_NUMBA=1 in a subprocess, so each
column reflects exactly what that environment would execute.

Usage: python benchmarks/bench_backends.py [--trials N] [--rounds N]
"""

import argparse
import json
import os
import subprocess
import sys
import textwrap
import time

WORKLOADS = ("serfling", "smallpovm", "transfer", "decoy")

_CHILD = textwrap.dedent(
    """
    import json, sys, time
    from bb84mm import _kernels
    from bb84mm.decoy import DecoyConfig
    from bb84mm.mc_verify import (TrialConfig, verify_serfling, verify_small_povm,
                                  verify_freq_transfer, verify_decoy_hoeffding)

    trials, rounds = int(sys.argv[1]), int(sys.argv[2])
    cfg = TrialConfig(n=rounds, trials=trials)
    fns = {
        "serfling": verify_serfling,
        "smallpovm": verify_small_povm,
        "transfer": verify_freq_transfer,
        "decoy": verify_decoy_hoeffding,
    }
    out = {"backend": _kernels.backend_name(), "timings": {}}
    for name, fn in fns.items():
        fn(TrialConfig(n=min(rounds, 200), trials=1000))  # warm compile
        t0 = time.perf_counter()
        rep = fn(cfg)
        out["timings"][name] = {
            "seconds": time.perf_counter() - t0,
            "pass": rep.passed,
        }
    print(json.dumps(out))
    """
)


def run_backend(no_numba: bool, trials: int, rounds: int) -> dict:
    env = dict(os.environ)
    if no_numba:
        env["BB84MM_NO_NUMBA"] = "1"
    else:
        env.pop("BB84MM_NO_NUMBA", None)
    proc = subprocess.run(
        [sys.executable, "-c", _CHILD, str(trials), str(rounds)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--rounds", type=int, default=2000)
    args = parser.parse_args()

    print(f"workload: {args.trials} trials x {args.rounds} rounds per kernel")
    t0 = time.perf_counter()
    results = {
        name: run_backend(no_numba, args.trials, args.rounds)
        for name, no_numba in (("numba", False), ("numpy", True))
    }
    for name, res in results.items():
        if res["backend"] != name:
            print(f"note: requested {name}, got {res['backend']} (numba unavailable?)")

    print(f"\n{'kernel':<12}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for kernel in WORKLOADS:
        nb = results["numba"]["timings"][kernel]
        np_ = results["numpy"]["timings"][kernel]
        flag = "" if nb["pass"] and np_["pass"] else "  (FAILED BOUND CHECK)"
        print(
            f"{kernel:<12}{nb['seconds']:>12.2f}{np_['seconds']:>12.2f}"
            f"{np_['seconds'] / max(nb['seconds'], 1e-9):>10.2f}x{flag}"
        )
    print(f"\ntotal wall time {time.perf_counter() - t0:.1f}s (includes subprocess startup)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
