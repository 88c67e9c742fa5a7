"""Compare the compiled and pure-Python kernels on identical inputs.

Run with ``python3 benchmarks/bench_kernels.py [--sizes 10,20,40] [--repeat 3]``.
Results are printed as a table; outputs of both backends are compared for equality.
"""
from __future__ import annotations

import argparse
import random
import time

from wmlab import _backend
from wmlab.degeneration import gen_random_jordan


def random_int_rows(rng: random.Random, n: int, m: int, density: float = 0.6) -> list[list[int]]:
    return [[rng.randint(-9, 9) if rng.random() < density else 0 for _ in range(m)] for _ in range(n)]


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_echelon(n: int, repeat: int, seed: int) -> dict:
    rows = random_int_rows(random.Random(seed), n, n + 2)
    out = {}
    results = {}
    for backend in ("python", "compiled"):
        _backend.use(backend)
        results[backend] = _backend.echelon_int([list(r) for r in rows], n + 2)
        out[backend] = best_of(lambda: _backend.echelon_int([list(r) for r in rows], n + 2), repeat)
    out["agree"] = results["python"] == results["compiled"]
    return out


def bench_matmul(n: int, repeat: int, seed: int) -> dict:
    rng = random.Random(seed)
    a, b = random_int_rows(rng, n, n), random_int_rows(rng, n, n)
    out, results = {}, {}
    for backend in ("python", "compiled"):
        _backend.use(backend)
        results[backend] = _backend.matmul(a, b, n, n)
        out[backend] = best_of(lambda: _backend.matmul(a, b, n, n), repeat)
    out["agree"] = results["python"] == results["compiled"]
    return out


def bench_pipeline(seed: int, repeat: int) -> dict:
    """Generate and analyse one random instance end to end (rational rank work dominates)."""
    out = {}
    for backend in ("python", "compiled"):
        _backend.use(backend)

        def run():
            inst = gen_random_jordan(seed, max_blocks=4)
            inst.e1()

        out[backend] = best_of(run, repeat)
    out["agree"] = True
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="10,20,40,60")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not _backend.compiled_available():
        print("compiled kernels are not built; only the Python backend is available")
        return 1
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'kernel':<12} {'n':>5} {'python [s]':>12} {'compiled [s]':>13} {'speedup':>8} agree")
    for n in sizes:
        for label, fn in (("echelon", bench_echelon), ("matmul", bench_matmul)):
            r = fn(n, args.repeat, args.seed)
            print(f"{label:<12} {n:>5} {r['python']:>12.5f} {r['compiled']:>13.5f} "
                  f"{r['python'] / r['compiled']:>8.2f} {r['agree']}")
    r = bench_pipeline(args.seed, args.repeat)
    print(f"{'pipeline':<12} {'-':>5} {r['python']:>12.5f} {r['compiled']:>13.5f} "
          f"{r['python'] / r['compiled']:>8.2f} {r['agree']}")
    _backend.use("compiled")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
