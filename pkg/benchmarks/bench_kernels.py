"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from sqzgrowth.kernels import available_backends, load_backend


def workloads(k):
    rng = np.random.default_rng(0)
    n = 300
    eta_t = np.sort(rng.uniform(0.55, 1.0, n))[::-1].copy()
    s_t = rng.uniform(0.03, 0.07, n)
    t = np.linspace(0.0, 5.0, n)
    mean = rng.normal(0.0, 0.01, n)
    sigma = rng.uniform(0.001, 0.03, n)
    return {
        "min_mean_error_series (300 pts)": lambda: k.min_mean_error_series(1.0, 0.07, eta_t, s_t),
        "p_fn_series (300 pts)": lambda: k.p_fn_series(eta_t, s_t, 0.9),
        "tau_at_fp": lambda: k.tau_at_fp(1.0, 0.07, 0.01),
        "trunc_lower_moments_array (300 pts)": lambda: k.trunc_lower_moments_array(mean, sigma),
        "gompertz_jac (300 pts)": lambda: k.gompertz_jac(0.2546, 0.0835, 0.837, 0.0026, t),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    results = {}
    for name in backends:
        k = load_backend(name)
        for label, fn in workloads(k).items():
            number = 1
            while timeit.timeit(fn, number=number) < 0.2:
                number *= 2
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            results.setdefault(label, {})[name] = best
    header = f"{'kernel':38s}" + "".join(f"{b:>14s}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for label, row in results.items():
        line = f"{label:38s}" + "".join(f"{row[b] * 1e6:>11.1f} us" for b in backends)
        if len(backends) == 2:
            line += f"{row['python'] / row['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
