"""Print the optimal pilot power over a grid of AR coefficients and user counts."""
import argparse
import warnings

import numpy as np

from armimo.config import SystemConfig
from armimo.harness import reference_noise
from armimo.pilot import PilotOptProblem, optimal_pilot_power


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, nargs="*", default=[1, 3, 10, 20, 50])
    ap.add_argument("--a", type=float, nargs="*", default=[0.0, 0.5, 0.9, 0.95])
    ap.add_argument("--path-loss-db", type=float, default=90.0)
    ap.add_argument("--as-printed", action="store_true",
                    help="use the uncorrected cubic coefficient (for comparison only)")
    args = ap.parse_args(argv)
    sig = reference_noise(args.path_loss_db)
    warnings.filterwarnings("ignore", message=".*orthogonal pilots.*")
    print("K \\ a " + "".join(f"{a:>10.2f}" for a in args.a))
    for K in args.K:
        cfg = SystemConfig(K=K, N_r=max(K, 1), sigma_p2=sig, sigma_d2=sig)
        cells = []
        for a in args.a:
            pr = PilotOptProblem.from_config(cfg, a=a, path_loss_db=args.path_loss_db)
            if args.as_printed:
                from armimo.pilot import _scaled_roots, quartic_coeffs

                roots = _scaled_roots(quartic_coeffs(pr, as_printed=True), pr.P_p_max) * pr.P_p_max
                inside = [r for r in roots if 0 < r < pr.P_p_max]
                cells.append(inside[0] if inside else np.nan)
            else:
                cells.append(optimal_pilot_power(pr).P_p)
        print(f"{K:<6}" + "".join(f"{c:>10.2f}" for c in cells))


if __name__ == "__main__":
    main()
