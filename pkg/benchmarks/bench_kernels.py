"""Wall-clock timings for the heavier workloads.

    python3 benchmarks/bench_kernels.py [--repeat N]

Runs with whatever kernel backend is active; set ELLGENUS_DISABLE_NUMBA=1 to
time the numpy fallback.
"""
import argparse
import time

import numpy as np

from ellgenus import kernels
from ellgenus.chern_engine import HypersurfaceSpec, ell_hypersurface_projective
from ellgenus.hypersurface_genus import CYFamily, ell_cy, mirror
from ellgenus.toric_core import load_fixture
from ellgenus.toric_genus import EnumerationPlan, ellhat_toric, cone_factor_check, p2_identity_sides


def _conv():
    rng = np.random.default_rng(0)
    a = rng.integers(-1000, 1000, size=(40, 60))
    b = rng.integers(-1000, 1000, size=(40, 60))
    kernels.conv2d_trunc(a, b, 39)


CASES = [
    ("conv2d_trunc 40x60", _conv),
    ("chern quintic q^8", lambda: ell_hypersurface_projective(HypersurfaceSpec(4, 5), 8)),
    ("toric quintic q^4", lambda: ell_cy(CYFamily(load_fixture("quintic"), EnumerationPlan(q_order=4)))),
    ("toric quintic mirror q^4",
     lambda: ell_cy(mirror(CYFamily(load_fixture("quintic"), EnumerationPlan(q_order=4))))),
    ("ellhat singular 3-fold q^3", lambda: ellhat_toric(load_fixture("singular_threefold"),
                                                        EnumerationPlan(q_order=3))),
    ("cone-factor identity q^10", lambda: cone_factor_check(10, (-10, 10))),
    ("P^2 identity q^40", lambda: p2_identity_sides(40)),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=1)
    args = ap.parse_args()
    print(f"backend: {kernels.backend()}")
    _conv()  # trigger compilation outside the timed region
    for name, fn in CASES:
        best = float("inf")
        for _ in range(args.repeat):
            start = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - start)
        print(f"{name:32s} {best:8.3f} s")


if __name__ == "__main__":
    main()
