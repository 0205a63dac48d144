"""Coupled Cartan-coordinate SDEs against the direct Kraus product on shared Wiener paths."""

import argparse

import numpy as np

from isomeasure.coupled_sde import cross_validate_batch
from isomeasure.trajectory import SimConfig, sample_wiener_path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=50)
    ap.add_argument("--a0", type=float, default=0.3)
    ap.add_argument("--T", type=float, default=3.0)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    c = SimConfig(gamma=1.0, dt=args.dt, T=args.T, seed=args.seed)
    dW = np.stack([sample_wiener_path(c, index=i).increments for i in range(args.paths)])
    print(f"{'scheme':>9} {'median |da|':>12} {'median angle':>13} {'halving ratio':>14} {'floored':>8}")
    for scheme in ("euler", "milstein"):
        r = cross_validate_batch(dW, c.dt, args.a0, c.gamma, scheme=scheme)
        print(f"{scheme:>9} {r.median_da:12.3e} {r.median_angle:13.3e} {r.halving_ratio:14.2f} "
              f"{r.n_floored:8d}")


if __name__ == "__main__":
    main()
