import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensor_assist import algebra as A
from sensor_assist import qec
from sensor_assist.algebra import DomainError, ErrorProbabilities

from conftest import REFERENCE_FRACTIONS, TABLE_TOL

pytestmark = pytest.mark.filterwarnings("ignore:error probabilities")

# field name for each (standard, assisted) letter pair, written out independently of the library
JOINT = {
    ("C", "ACCEPT_C"): "f_C_C",
    ("CC", "ACCEPT_CC"): "f_CC_CC",
    ("F", "ACCEPT_F"): "f_F_F",
    ("CC", "REJECT_PT"): "f_CC_RPT",
    ("F", "REJECT_PT"): "f_F_RPT",
    ("CC", "REJECT_S"): "f_CC_RS",
    ("F", "REJECT_S"): "f_F_RS",
}


def enumerated_fractions(o, p):
    """Brute force: sum the probability of each of the 64 patterns into its outcome bucket."""
    totals = dict.fromkeys(JOINT.values(), 0.0)
    for env in range(8):
        for ent in range(8):
            a, b = bin(env).count("1"), bin(ent).count("1")
            weight = o**a * (1 - o) ** (3 - a) * p**b * (1 - p) ** (3 - b)
            rec = qec.classify_case(qec.ErrorMask(env, ent))
            totals[JOINT[(rec.standard.value, rec.assisted.value)]] += weight
    return totals


def forward(o, p):
    return o + p - o * p


# ---------------------------------------------------------------------------
# ErrorProbabilities
# ---------------------------------------------------------------------------

def test_derived_quantities():
    e = ErrorProbabilities(0.1, 0.2)
    assert e.obar + e.o == 1 and e.pbar + e.p == 1
    assert e.cbar == pytest.approx(0.02)
    assert e.phat == 0.1 + 0.2 - 0.1 * 0.2


@pytest.mark.parametrize("o,p", [(-0.1, 0.1), (0.1, 1.5), (math.nan, 0.1)])
def test_rejects_out_of_range(o, p):
    with pytest.raises(DomainError):
        ErrorProbabilities(o, p)


def test_large_probabilities_warn_but_work():
    with pytest.warns(UserWarning):
        e = ErrorProbabilities(0.7, 0.1)
    assert e.phat == pytest.approx(0.73)


# ---------------------------------------------------------------------------
# solve_environmental
# ---------------------------------------------------------------------------

def test_solve_all_entangling():
    assert A.solve_environmental(0.20, 0.20) == 0.0


@pytest.mark.parametrize("phat,p,expected", [
    (0.20, 0.12, 0.09090909090909091),
    (0.05, 0.03, 0.020618556701030927),
])
def test_solve_matches_forward_formula(phat, p, expected):
    o = A.solve_environmental(phat, p)
    assert o == pytest.approx(expected, abs=1e-15)
    assert abs(forward(o, p) - phat) <= 1e-15


def test_solve_domain_errors():
    with pytest.raises(DomainError):
        A.solve_environmental(0.10, 0.12)
    with pytest.raises(DomainError):
        A.solve_environmental(0.5, 1.0)


@settings(max_examples=1000)
@given(st.floats(0, 0.99), st.floats(0, 1))
def test_solve_round_trip(phat, frac):
    p = phat * frac
    o = A.solve_environmental(phat, p)
    assert abs(forward(o, p) - phat) <= 1e-15


# ---------------------------------------------------------------------------
# case_probability
# ---------------------------------------------------------------------------

def test_case_probability_single_env():
    got = A.case_probability(qec.ErrorMask(0b001, 0b000), ErrorProbabilities(0.1, 0.2))
    assert got == pytest.approx(0.1 * 0.9**2 * 0.8**3, rel=1e-14)
    assert got == pytest.approx(0.0414720, abs=1e-12)


def test_case_probability_no_errors():
    assert A.case_probability(qec.ErrorMask(0, 0), ErrorProbabilities(0, 0)) == 1.0


def test_case_probability_mixed():
    got = A.case_probability(qec.ErrorMask(0b001, 0b011), ErrorProbabilities(0.1, 0.2))
    assert got == pytest.approx(0.0025920, abs=1e-12)


def test_case_probabilities_sum_to_one():
    e = ErrorProbabilities(0.13, 0.31)
    assert math.fsum(A.case_probability(m, e) for m in qec.all_masks()) == pytest.approx(1, abs=1e-14)


# ---------------------------------------------------------------------------
# outcome_fractions and aggregates
# ---------------------------------------------------------------------------

def fractions_for(phat, p):
    return A.outcome_fractions(ErrorProbabilities.from_total(phat, p))


def test_no_environmental_errors():
    fr = fractions_for(0.20, 0.20)
    assert fr.f_C_C == pytest.approx(0.8960, abs=TABLE_TOL)
    assert fr.f_F_F == pytest.approx(0.1040, abs=TABLE_TOL)
    for k in ("f_CC_CC", "f_CC_RPT", "f_F_RPT", "f_CC_RS", "f_F_RS"):
        assert getattr(fr, k) == 0


def test_mixed_assisted_column():
    fr = A.outcome_fractions(ErrorProbabilities(0.0909091, 0.12))
    assert fr.f_C_C == pytest.approx(0.8751, abs=TABLE_TOL)
    assert fr.f_CC_CC == pytest.approx(0.0209, abs=TABLE_TOL)
    assert fr.f_F_F == pytest.approx(0.0331, abs=TABLE_TOL)
    assert fr.rejected_parity == pytest.approx(0.0476, abs=TABLE_TOL)
    assert fr.rejected_sensor == pytest.approx(0.0233, abs=TABLE_TOL)


def test_no_errors_at_all():
    fr = A.outcome_fractions(ErrorProbabilities(0, 0))
    assert fr.f_C_C == 1
    assert fr.total() == 1


@pytest.mark.parametrize("key", sorted(REFERENCE_FRACTIONS))
def test_reference_columns(key):
    ref = REFERENCE_FRACTIONS[key]
    fr = fractions_for(*key)
    std = A.standard_aggregate(fr)
    ast = A.assisted_aggregate(fr)
    np.testing.assert_allclose([std["C"], std["CC"], std["F"]], ref["std"], atol=TABLE_TOL)
    np.testing.assert_allclose([ast[k] for k in ("C", "CC", "F", "R_PT", "R_S")], ref["ast"], atol=TABLE_TOL)
    eff = (A.effective_correct(fr, "standard"), A.effective_correct(fr, "assisted"))
    np.testing.assert_allclose(eff, ref["eff"], atol=TABLE_TOL)


def test_standard_aggregate_examples():
    std = A.standard_aggregate(A.outcome_fractions(ErrorProbabilities(0.0909091, 0.12)))
    assert std["CC"] == pytest.approx(0.0312, abs=TABLE_TOL)
    assert std["F"] == pytest.approx(0.0937, abs=TABLE_TOL)
    assert A.standard_aggregate(A.outcome_fractions(ErrorProbabilities(0, 0))) == {"C": 1, "CC": 0, "F": 0}
    assert math.fsum(std.values()) == pytest.approx(1, abs=1e-12)


def test_effective_correct_examples():
    fr = A.outcome_fractions(ErrorProbabilities(0.0909091, 0.12))
    assert A.effective_correct(fr, "assisted") == pytest.approx(0.9644, abs=TABLE_TOL)
    assert A.effective_correct(fr, "standard") == pytest.approx(0.9063, abs=TABLE_TOL)
    fr0 = A.outcome_fractions(ErrorProbabilities(0, 0.2))
    for mode in ("standard", "assisted"):
        assert A.effective_correct(fr0, mode) == pytest.approx(0.8960, abs=TABLE_TOL)


def test_effective_metrics_reject_all_rejected():
    fr = A.OutcomeFractions(0, 0, 0, 0.5, 0, 0.5, 0)
    with pytest.raises(DomainError):
        A.effective_correct(fr, "assisted")
    with pytest.raises(DomainError):
        A.effective_fault(fr, "assisted")
    with pytest.raises(ValueError):
        A.effective_correct(fr, "sideways")


def test_effective_fault_examples():
    fr = A.outcome_fractions(ErrorProbabilities(0.0909091, 0.12))
    assert A.effective_fault(fr) == pytest.approx(1 - 0.9644, abs=TABLE_TOL)
    assert A.effective_fault(fr) == pytest.approx(1 - A.effective_correct(fr), abs=1e-15)
    assert A.effective_fault(A.outcome_fractions(ErrorProbabilities(0, 0))) == 0
    assert A.effective_fault(A.outcome_fractions(ErrorProbabilities(0, 0.2))) == pytest.approx(0.1040, abs=TABLE_TOL)


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

probs_strategy = st.tuples(st.floats(0, 0.5), st.floats(0, 0.5))


@settings(max_examples=1000, deadline=None)
@given(probs_strategy)
def test_partition_of_unity(op):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fr = A.outcome_fractions(ErrorProbabilities(*op))
    values = fr.as_dict().values()
    assert all(0 <= v <= 1 for v in values)
    assert abs(math.fsum(values) - 1) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(probs_strategy)
def test_closed_form_matches_enumeration(op):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fr = A.outcome_fractions(ErrorProbabilities(*op)).as_dict()
    brute = enumerated_fractions(*op)
    for k, v in brute.items():
        assert abs(fr[k] - v) <= 1e-12, k


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def test_sweep_single_cell():
    (cell,) = A.sweep_grid((0.20, 0.20), (0.60, 0.60), 1)
    assert cell.eff_fault_assisted == pytest.approx(0.0356, abs=TABLE_TOL)


def test_sweep_all_entangling_column_is_equal():
    for c in A.sweep_grid((0.0, 0.45), (0.2, 1.0), 10):
        if c.entangling_fraction == 1.0:
            assert c.eff_fault_assisted == c.eff_fault_standard


def test_sweep_zero_phat():
    for c in A.sweep_grid((0.0, 0.0), (0.0, 1.0), (1, 7)):
        assert c.eff_fault_assisted == 0 and c.eff_fault_standard == 0


def test_sweep_row_major_order():
    cells = A.sweep_grid((0.1, 0.3), (0.0, 1.0), (3, 2))
    assert [(round(c.phat, 3), c.entangling_fraction) for c in cells] == [
        (0.1, 0.0), (0.1, 1.0), (0.2, 0.0), (0.2, 1.0), (0.3, 0.0), (0.3, 1.0)]


def test_sweep_flags_bad_cells():
    cells = A.sweep_grid((0.5, 1.0), (1.0, 1.0), (2, 1))
    assert cells[0].error is None
    assert cells[1].error is not None and math.isnan(cells[1].eff_fault_assisted)


def test_sweep_assisted_never_worse():
    cells = A.sweep_grid((0.0, 0.5), (0.0, 0.98), 25)
    for c in cells:
        assert c.eff_fault_assisted <= c.eff_fault_standard
        if c.phat > 0:
            assert c.eff_fault_assisted < c.eff_fault_standard
