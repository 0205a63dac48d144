"""Mean angular drift of the POVM direction n_U and of n_V over successive windows."""

import argparse

from isomeasure.povm_stats import freeze_out, run_ensemble
from isomeasure.trajectory import SimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=float, default=8.0)
    ap.add_argument("--step", type=float, default=1.0)
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args()

    marks = [k * args.step for k in range(1, int(args.T / args.step) + 1)]
    stats = run_ensemble(SimConfig(gamma=1.0, dt=2e-3, T=args.T, seed=args.seed,
                                   checkpoint_times=tuple(marks)), args.paths)
    print(f"{'window':>12} {'U drift':>9} {'V drift':>9} {'ratio':>8}")
    for t1, t2 in zip(marks[:-1], marks[1:]):
        du, dv = freeze_out(stats, t1, t2)
        print(f"{t1:5.1f}-{t2:<5.1f} {du:9.4f} {dv:9.4f} {dv / du:8.1f}")


if __name__ == "__main__":
    main()
