"""Wall-clock scaling of the general fixed-point solver with the antenna count."""
import argparse
import time

import numpy as np

from armimo.sinr import PhiFamily, det_equiv_general


def _hpd(rng, n, scale=1.0):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (X @ X.conj().T / n + 0.1 * np.eye(n))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, default=10)
    ap.add_argument("--N", type=int, nargs="*", default=[32, 64, 128, 256, 512])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    prev = None
    print(f"{'N_r':>6} {'iters':>6} {'seconds':>10} {'slope':>7}")
    for N in args.N:
        fam = PhiFamily(_hpd(rng, N), [_hpd(rng, N) for _ in range(args.K - 1)], _hpd(rng, N, 0.5), 0.05)
        best = np.inf
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            _, state = det_equiv_general(fam, tol=1e-8)
            best = min(best, time.perf_counter() - t0)
        slope = "" if prev is None else f"{np.log(best / prev[1]) / np.log(N / prev[0]):7.2f}"
        print(f"{N:>6} {state.iterations:>6} {best:>10.4f} {slope}")
        prev = (N, best)


if __name__ == "__main__":
    main()
