"""Matrix-format versus vector-format tangential interpolation on a multiport."""
import argparse

import numpy as np

from lmsweep import SampleSet, fit
from lmsweep.core import relative_errors, to_db
from lmsweep.loewner import build_mfti, build_vfti
from lmsweep.solvers import random_stable_system


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--order", type=int, default=20)
    ap.add_argument("--ports", type=int, default=10)
    ap.add_argument("--samples", type=int, default=8)
    ap.add_argument("--seed", type=int, default=100)
    args = ap.parse_args()

    system = random_stable_system(np.random.default_rng(args.seed), args.order, args.ports)
    f = np.linspace(0.1, 1.0, args.samples)
    data = SampleSet(f, np.stack([system(x) for x in f]))
    grid = np.linspace(0.1, 1.0, 200)
    ref = np.stack([system(x) for x in grid])
    for name, builder in (("MFTI", build_mfti), ("VFTI", build_vfti)):
        model = fit(data, q=12, builder=builder)
        err = relative_errors(model.evaluate_many(grid), ref)
        print(f"{name}: order {model.r:3d}, max error {to_db(err.max()):7.1f} dB")


if __name__ == "__main__":
    main()
