"""Ratio of the empirical Rademacher norm to the Dudley integral (constant fixed to 1) on small finite classes."""

import argparse

import numpy as np

from rgplab.combinatorics import Metric, dudley_integral, entropy_profile
from rgplab.complexity import empirical_structural_rademacher
from rgplab.hypotheses import SequenceClass, TimestampClass
from rgplab.process import ProcessSpec, build_temporal_graph, simulate_rgp
from rgplab.rng import derive_rng, derive_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--members", type=int, default=16)
    ap.add_argument("--mc-draws", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ratios = []
    for i in range(args.samples):
        rng = derive_rng(args.seed, "chaining", i)
        T, n = int(rng.integers(1, 3)), int(rng.integers(3, 10))
        spec = ProcessSpec(build_temporal_graph("fixed_complete", T, n))
        # the product class stays within the member budget
        per_t = max(2, int(args.members ** (1.0 / T)))
        classes = SequenceClass(tuple(TimestampClass.random_table(8, per_t, rng, binary=bool(i % 2)) for _ in range(T)))
        sample = simulate_rgp(spec, derive_seed(args.seed, "chaining_sample", i))
        prof = entropy_profile(classes, Metric("empirical_L2", sample))
        dud = dudley_integral(prof, T, n)
        norm = empirical_structural_rademacher(sample, classes, args.mc_draws, derive_seed(args.seed, "chaining_sigma", i)).one_norm
        ratios.append(dud.ratio(norm))
    r = np.array(ratios)
    print(f"samples={r.size} max_ratio={r.max():.4f} mean_ratio={r.mean():.4f} above_one={int(np.sum(r > 1))}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
