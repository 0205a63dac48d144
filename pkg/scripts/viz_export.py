"""Write the SL(2,R) torus vectors for a sweep of a, ready for an external plotter."""

import argparse

import numpy as np

from isomeasure.geometry import VIZ_COLUMNS, null_angle_deg, sl2r_viz_export
from isomeasure.io import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a-max", type=float, default=4.0)
    ap.add_argument("--n", type=int, default=41)
    ap.add_argument("--out", default="sl2r_viz.csv")
    args = ap.parse_args()

    a = np.linspace(0.0, args.a_max, args.n)
    write_csv(args.out, VIZ_COLUMNS, sl2r_viz_export(a), {"a_max": args.a_max, "n": args.n})
    worst = max(abs(null_angle_deg(x) - 45) for x in a[1:])
    print(f"wrote {args.n} rows to {args.out}; null-vector angle deviates from 45 deg by {worst:.1e}")


if __name__ == "__main__":
    main()
