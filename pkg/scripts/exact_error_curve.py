"""Exact type-II error of the distribution-free MMD test on a binary alphabet.

P = (0.5, 0.5) against Q = (0.9, 0.1), Gaussian kernel with w = 1 on the
points {0, 1}. The error comes from full enumeration of type pairs, so the
printed rates carry no Monte Carlo noise.
"""
import argparse

from mmdexp.distributions import DiscreteDistribution
from mmdexp.kernels import KernelSpec
from mmdexp.mmd import mmd_population_discrete
from mmdexp.sanov import curve_to_csv, exact_error_curve
from mmdexp.thresholds import ldb_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-list", default="25,50,100,200,400,800,1600")
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    p = DiscreteDistribution.on_alphabet([0.5, 0.5])
    q = DiscreteDistribution.on_alphabet([0.9, 0.1])
    k = KernelSpec(1.0)
    print(f"population d_k(P, Q) = {mmd_population_discrete(p, q, k):.4f}")
    sizes = [int(v) for v in args.n_list.split(",")]
    for n in sizes:
        print(f"n = m = {n}: threshold {ldb_threshold(n, n, 1.0, args.alpha):.4f}")
    text = curve_to_csv(exact_error_curve(p, q, k, sizes, args.alpha))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text)


if __name__ == "__main__":
    main()
