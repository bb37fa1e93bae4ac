"""Eve's best found row entropy with and without the quantum row cap, across noise."""
import argparse

from contextual_key import adversary, quantumsim, security


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--members", type=int, default=4)
    ap.add_argument("--restarts", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    x0 = security.row_cap(security.REFERENCE_GAMMA0)
    print(f"{'p':>6s} {'eps':>7s} {'bound':>8s} {'capped':>8s} {'free':>8s}")
    for p in (1.0, 0.995, 0.99, 0.98):
        box = quantumsim.quantum_pm_box(quantumsim.NoiseModel(p))
        eps = (1 - p) / 2
        res = []
        for cap in (security.REFERENCE_GAMMA0, None):
            ens = adversary.attack_search(box, args.members, args.restarts, args.seed, cap_gamma0=cap)
            res.append(adversary.eve_entropy(ens).avg_row_entropy)
        bound = security.hbe_lower(eps, x0)[0]
        print(f"{p:6.3f} {eps:7.4f} {bound:8.4f} {res[0]:8.4f} {res[1]:8.4f}")


if __name__ == "__main__":
    main()
