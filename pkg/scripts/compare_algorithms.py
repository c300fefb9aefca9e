"""Run every sweep on the built-in solvers and print one table per solver.

Thin loop over ``lmsweep compare``; outputs land in ``compare_out/<solver>``.
"""
import sys

from lmsweep.cli import main

SOLVERS = ["qwt", "ckt1", "ckt2", "osc7", "lpf7"]

if __name__ == "__main__":
    solvers = sys.argv[1:] or SOLVERS
    for name in solvers:
        print(f"== {name}")
        main(["compare", "--solver", name, "--out", f"compare_out/{name}"])
