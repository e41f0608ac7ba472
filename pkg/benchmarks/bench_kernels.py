"""Compare the compiled kernels with the numpy fallback.

Run: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from posaid import _backend


def cases():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 50, 1_000_000)
    za = np.sort(rng.uniform(0, 5, 2000))
    f = np.arange(1, 1_000_000) / 1_000_000
    return {
        "j0_array (1e6 points)": lambda k: k.j0_array(x),
        "kernel_matrix (2000 x 2000)": lambda k: k.kernel_matrix(za, za, 0.15),
        "kernel_matrix (2000 x 1999)": lambda k: k.kernel_matrix(za, za[1:], 0.15),
        "omega_objective (1e6 fractions)": lambda k: k.omega_objective(f, 0.025),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = {"python": _backend.kernels_py}
    if _backend.kernels_c is not None:
        backends["cython"] = _backend.kernels_c
    else:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'kernel':34s}" + "".join(f"{name:>12s}" for name in backends) + "     speedup")
    for label, fn in cases().items():
        times = {}
        for name, mod in backends.items():
            fn(mod)  # warm up
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        speed = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else ""
        print(f"{label:34s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times.values()) + "   " + speed)


if __name__ == "__main__":
    main()
