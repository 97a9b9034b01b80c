"""
When do Gaussian points all sit on their own hull?
==================================================

If every one of M sample points is a vertex of their hull, any labelling is
realised by some convex set and a one-sided tester learns nothing.  The
frequency climbs quickly with the dimension.  Runs through the sweep harness
so cells are seeded independently and run in parallel.
"""

from convexity_testbed.harness import ExperimentConfig, report_csv, sweep

if __name__ == "__main__":
    base = ExperimentConfig("shatter", {"m": 20, "trials": 300}, seed=11)
    reports = sweep(base, "n", list(range(2, 11)))
    for rep in reports:
        m = rep["metrics"]
        print(f"n={m['n']:2d}: all extreme in {m['frequency']:.3f} of trials (se {m['std_error']:.3f})")

    # the same table as CSV, ready for a spreadsheet
    print(report_csv(reports).splitlines()[0][:120], "...")
