"""Time the compiled kernels against the pure-numpy fallback.

Runs both backends on identical seeded inputs, checks that they agree
(bit-exact for the integer fold, tolerance for the dipole sum), and
reports per-call wall times plus the speedup.

Usage:
    python benchmarks/bench_kernels.py [--atoms N] [--times N]
                                       [--clicks N] [--repeat N]
"""

import argparse
import timeit

import numpy as np

from lgi_echo._kernels import _fallback

try:
    from lgi_echo._kernels import _core
except ImportError:
    _core = None


def _dipole_inputs(n_atoms, n_times, seed=0):
    rng = np.random.default_rng(seed)
    weights = rng.random(n_atoms)
    detunings = rng.normal(0.0, 50e6, n_atoms)
    times = np.linspace(0.0, 300e-9, n_times)
    return weights, detunings, times


def _fold_inputs(n_clicks, n_trials, seed=0):
    rng = np.random.default_rng(seed)
    trials = np.sort(rng.integers(0, n_trials, n_clicks))
    times = rng.random(n_clicks) * 400e-9
    heralds = (rng.random(n_trials) < 0.02).astype(np.uint8)
    return trials, times, heralds


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--atoms", type=int, default=20000)
    parser.add_argument("--times", type=int, default=2000)
    parser.add_argument("--clicks", type=int, default=2_000_000)
    parser.add_argument("--trials", type=int, default=4_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if _core is None:
        print("compiled extension not available; timing the fallback only")

    w, d, t = _dipole_inputs(args.atoms, args.times)
    ref = _fallback.dipole_intensity(w, d, t)
    rows = [("dipole_intensity", "fallback",
             _time(lambda: _fallback.dipole_intensity(w, d, t), args.repeat))]
    if _core is not None:
        got = _core.dipole_intensity(w, d, t)
        if not np.allclose(got, ref, rtol=1e-9, atol=1e-12 * ref.max()):
            raise SystemExit("dipole_intensity backends disagree")
        rows.append(("dipole_intensity", "compiled",
                     _time(lambda: _core.dipole_intensity(w, d, t), args.repeat)))

    trials, times, heralds = _fold_inputs(args.clicks, args.trials)
    fold_args = (trials, times, heralds, 400e-9, 2e-9, 1800, 8)
    ref = _fallback.fold_coincidences(*fold_args)
    rows.append(("fold_coincidences", "fallback",
                 _time(lambda: _fallback.fold_coincidences(*fold_args),
                       args.repeat)))
    if _core is not None:
        got = _core.fold_coincidences(*fold_args)
        if not np.array_equal(got, ref):
            raise SystemExit("fold_coincidences backends disagree")
        rows.append(("fold_coincidences", "compiled",
                     _time(lambda: _core.fold_coincidences(*fold_args),
                           args.repeat)))

    print(f"{'kernel':<20} {'backend':<10} {'best of ' + str(args.repeat):>12}")
    best = {}
    for kernel, backend, seconds in rows:
        print(f"{kernel:<20} {backend:<10} {seconds * 1e3:>10.2f} ms")
        best[(kernel, backend)] = seconds
    for kernel in ("dipole_intensity", "fold_coincidences"):
        slow = best.get((kernel, "fallback"))
        fast = best.get((kernel, "compiled"))
        if slow and fast:
            print(f"{kernel}: compiled is {slow / fast:.1f}x the fallback")


if __name__ == "__main__":
    main()
