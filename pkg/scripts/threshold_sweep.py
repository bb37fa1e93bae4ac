"""Key rate against error and tolerable error against gamma0."""
import argparse

import numpy as np

from contextual_key import security


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma0", type=float, default=security.REFERENCE_GAMMA0)
    ap.add_argument("--points", type=int, default=11)
    args = ap.parse_args()

    print(f"key rate at gamma0 = {args.gamma0}")
    print(f"{'eps':>8s} {'H(B|E)':>9s} {'H(B|A)':>9s} {'K':>9s} {'delta*':>9s}")
    for eps in np.linspace(0, 0.01, args.points):
        r = security.key_rate(float(eps), args.gamma0)
        print(f"{eps:8.4f} {r.hbe_lower:9.5f} {r.hba_upper:9.5f} {r.key_rate:9.5f} {r.delta_star:9.5f}")

    print("\nthreshold against gamma0")
    print(f"{'gamma0':>8s} {'x':>7s} {'eps0':>9s} {'eps0(1.8)':>10s}")
    for g in np.linspace(4.2, 5.9, 9):
        t = security.threshold(float(g))
        t18 = security.threshold(float(g), delta_ratio=1.8)
        print(f"{g:8.3f} {security.row_cap(g):7.4f} {t:9.6f} {t18:10.6f}")


if __name__ == "__main__":
    main()
