"""Time the deterministic-strategy search on the compiled and NumPy kernels.

Run with ``python3 benchmarks/bench_enum.py``. Both backends must agree on
the optimum; the script exits non-zero if they do not.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from qcert import kernels
from qcert.bell import asta_functional, payoff_tensor

CASES = [(2, 2, 4), (2, 3, 4), (3, 2, 4), (3, 3, 3), (2, 4, 4), (3, 2, 6), (4, 2, 4), (3, 3, 4)]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = ["numpy"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"{'(N,m,d)':>10} {'strategies':>11} " + " ".join(f"{b + ' [s]':>12}" for b in backends))
    status = 0
    for N, m, d in CASES:
        G = payoff_tensor(asta_functional(N, m, d))
        times, values = [], []
        for b in backends:
            values.append(kernels.best_deterministic(G, N, m, d, backend=b)[0])
            times.append(min(timeit.repeat(lambda: kernels.best_deterministic(G, N, m, d, backend=b),
                                           number=1, repeat=args.repeat)))
        if not np.allclose(values, values[0], rtol=0, atol=1e-12):
            print(f"backends disagree on {(N, m, d)}: {values}", file=sys.stderr)
            status = 1
        print(f"{str((N, m, d)):>10} {d ** (N * m):>11} " + " ".join(f"{t:12.4f}" for t in times))
    return status


if __name__ == "__main__":
    raise SystemExit(main())
