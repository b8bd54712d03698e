#!/usr/bin/env python3
"""Regenerate data/ccpp_synthetic.csv, the 200-row stand-in for the CCPP dataset.

The fixture only has to look like the real file to the ingestion path: same
columns, plausible ranges, strong cross-correlations, values rounded to two
decimals like the published data. It is not a statistical replica; tests that
check estimates against the paper use the real file when present.
"""

import numpy as np

RNG = np.random.default_rng(20260816)
ROWS = 200

# Means/sds and correlation structure eyeballed from the UCI summary stats.
MEAN = np.array([19.65, 54.31, 1013.26, 73.31])  # T, V, AP, RH
SD = np.array([7.45, 12.71, 5.94, 14.60])
CORR = np.array([
    [1.000, 0.844, -0.507, -0.543],
    [0.844, 1.000, -0.414, -0.312],
    [-0.507, -0.414, 1.000, 0.099],
    [-0.543, -0.312, 0.099, 1.000],
])

LO = np.array([1.81, 25.36, 992.89, 25.56])
HI = np.array([37.11, 81.56, 1033.30, 100.16])


def main() -> None:
    cov = CORR * np.outer(SD, SD)
    x = RNG.multivariate_normal(MEAN, cov, size=ROWS)
    x = np.clip(x, LO, HI)
    t, v, ap, rh = x.T
    pe = 497.0 - 1.98 * t - 0.23 * v + 0.06 * (ap - 1013.0) - 0.16 * (rh - 73.0)
    pe += RNG.normal(0.0, 4.5, size=ROWS)
    pe = np.clip(pe, 420.26, 495.76)

    out = np.column_stack([t, v, ap, rh, pe])
    with open("data/ccpp_synthetic.csv", "w") as fh:
        fh.write("T,V,AP,RH,PE\n")
        for row in out:
            fh.write(",".join(f"{value:.2f}" for value in row) + "\n")


if __name__ == "__main__":
    main()
