import csv
import math
import pathlib

import pytest

DATA = pathlib.Path(__file__).parent / "data"

# (phat, p) columns with reference fractions at four decimals:
# standard C, CC, F; assisted C, CC, F, R_PT, R_S; effective correct standard, assisted
REFERENCE_FRACTIONS = {
    (0.20, 0.20): dict(std=(0.8960, 0.0000, 0.1040), ast=(0.8960, 0.0000, 0.1040, 0.0000, 0.0000), eff=(0.8960, 0.8960)),
    (0.20, 0.12): dict(std=(0.8751, 0.0312, 0.0937), ast=(0.8751, 0.0209, 0.0331, 0.0476, 0.0233), eff=(0.9063, 0.9644)),
    (0.05, 0.03): dict(std=(0.9911, 0.0018, 0.0071), ast=(0.9911, 0.0017, 0.0025, 0.0034, 0.0013), eff=(0.9929, 0.9974)),
    (0.05, 0.01): dict(std=(0.9917, 0.0012, 0.0071), ast=(0.9917, 0.0011, 0.0003, 0.0022, 0.0047), eff=(0.9929, 0.9997)),
}
TABLE_TOL = 5e-4


@pytest.fixture(scope="session")
def reference_table():
    with open(DATA / "reference_truth_table.csv") as fh:
        return list(csv.DictReader(fh))


def binomial_sigma(p, n):
    return math.sqrt(p * (1 - p) / n)
