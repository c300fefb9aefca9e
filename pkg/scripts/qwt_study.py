"""Third-order Loewner fit of the quarter-wave transformer from three samples.

Prints the recovered order and the error of several S-parameter variants
over the normalized band [0.05, 1].
"""
import numpy as np

from lmsweep import SampleSet, fit
from lmsweep.core import to_db
from lmsweep.solvers import qwt_impedance, rational_circuit_1


def s_of(z):
    return (z - 50.0) / (z + 50.0)


def main():
    f = np.array([0.2, 0.4, 0.6])
    grid = np.linspace(0.05, 1.0, 200)
    s_true = s_of(qwt_impedance(grid))

    zmodel = fit(SampleSet(f, qwt_impedance(f)), q=12)
    s_from_z = s_of(zmodel.evaluate_many(grid)[:, 0, 0])
    smodel = fit(SampleSet(f, s_of(qwt_impedance(f))), q=12)
    s_direct = smodel.evaluate_many(grid)[:, 0, 0]
    s_circuit = s_of(rational_circuit_1(grid))

    print(f"order from Z samples: {zmodel.r}, from S samples: {smodel.r}")
    low = grid <= 0.8
    for name, s in (("Z model -> S", s_from_z), ("S model", s_direct), ("rational circuit", s_circuit)):
        err = np.abs(np.ravel(s) - s_true)
        print(f"{name:18s} max |dS| {to_db(err.max()):7.1f} dB   (f <= 0.8: {to_db(err[low].max()):7.1f} dB)")


if __name__ == "__main__":
    main()
