"""Condition number of the Loewner matrix under two sample partitions."""
import argparse

import numpy as np

from lmsweep import SampleSet
from lmsweep.loewner import build_mfti, condition_diagnostics, partition_even_odd, partition_positive_negative
from lmsweep.solvers import random_stable_system


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--order", type=int, default=100)
    ap.add_argument("--ports", type=int, default=10)
    ap.add_argument("--samples", type=int, default=8)
    ap.add_argument("--trials", type=int, default=10)
    args = ap.parse_args()

    rows = []
    for seed in range(args.trials):
        system = random_stable_system(np.random.default_rng(seed), args.order, args.ports)
        f = np.linspace(0.1, 1.0, args.samples)
        data = SampleSet(f, np.stack([system(x) for x in f]))
        a = condition_diagnostics(build_mfti(partition_even_odd(data)))[0]
        b = condition_diagnostics(build_mfti(partition_positive_negative(data)))[0]
        rows.append((a, b))
        print(f"seed {seed:2d}  even-odd {a:10.3e}  positive-negative {b:10.3e}")
    a, b = np.median(rows, axis=0)
    print(f"median    even-odd {a:10.3e}  positive-negative {b:10.3e}")


if __name__ == "__main__":
    main()
