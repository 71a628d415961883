import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retrainlab import (
    BoundInputs,
    alpha0_lower,
    alpha0_upper,
    alpha1_upper,
    err0_bounds,
    err1_upper,
    retrain_aux,
    retraining_helps_window,
    sample_complexity_initial,
    sample_complexity_lower_curve,
)
from retrainlab.bounds import BOUNDS_CSV_HEADER, bound_table_row, err1_upper_terms

# Frozen from 50-digit mpmath evaluations made before the evaluators existed.
GOLDEN = {
    "alpha0_lower": 0.12718841442807035582,
    "alpha0_upper": 0.0033689734995427335483,
    "err0_upper": 0.041046225965121476256,
    "q_prime": 7.124576406741285531549e-218,
    "p_prime": 0.400000015,
    "alpha1_upper": 96.620119856009192153,
    "err1_upper": 96.806646485560076575,
    "err1_q_prime": 2.6691902155412763935e-109,
}
REL = 1e-10


def rel_close(a, b, tol=REL):
    return abs(a - b) <= tol * abs(b)


def mp_err1(n, d, p, g, lmax):
    # direct high-precision evaluation, independent of the log-space code path
    mp.mp.dps = 50
    n, d, p, g, lmax = map(mp.mpf, (n, d, p, g, lmax))
    q = mp.exp(-n * (1 - 2 * p) * g**2 / (40 * lmax))
    pp = (1 + 3 * g**4 / (8 * lmax**2 * n * d)) * p
    t4 = n / 2 * (mp.exp(-(g**4 / (8 * lmax**2)) * (1 - 2 * pp) * n / d) + mp.exp(-d / 16)) * mp.exp(d / n)
    return (
        2 * mp.exp(-n * (1 - 2 * q) ** 2 * g**4 / (64 * (g**4 + 2 * lmax**2 * d)))
        + 2 * mp.exp(-d / 8)
        + 4 * mp.exp(-n * (1 - 2 * p) ** 2 / 32)
        + t4
    )


def test_alpha0_lower_values():
    assert math.isclose(alpha0_lower(BoundInputs(5, 3, 0.1, 1.0), 0.0, 1.0).raw, 1 / (2 * math.sqrt(2 * math.pi)))
    assert rel_close(alpha0_lower(BoundInputs(100, 3, 0.4, 1.0), 0.1, 1.0).raw, GOLDEN["alpha0_lower"])
    with pytest.raises(ValueError):
        alpha0_lower(BoundInputs(100, 3, 0.4, 1.0), 0.1, 0.0)


def test_alpha0_lower_increases_with_p():
    vals = [alpha0_lower(BoundInputs(100, 3, p, 1.0), 0.3, 1.0).raw for p in (0.0, 0.2, 0.4, 0.49, 0.4999999)]
    assert vals == sorted(vals)
    assert vals[-1] < 1 / (2 * math.sqrt(2 * math.pi)) * math.exp(-5 * 0.09) * (1 + 1e-5)


def test_alpha0_upper_values():
    assert rel_close(alpha0_upper(BoundInputs(10**5, 3, 0.4, 1.0), 0.1, 1.0).raw, GOLDEN["alpha0_upper"])
    near_half = alpha0_upper(BoundInputs(10**5, 3, 0.5 - 1e-12, 1.0), 0.1, 1.0)
    assert near_half.vacuous and near_half.clamped == 1.0 and abs(near_half.raw - 2.5) < 1e-6


def test_alpha0_upper_decreases_in_n():
    vals = [alpha0_upper(BoundInputs(n, 3, 0.3, 1.0), 0.2, 1.0).raw for n in (1, 10, 100, 1000, 10**4)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_err0_upper_golden():
    rep = err0_bounds(BoundInputs(10**5, 100, 0.4, 1.0)).upper
    assert rel_close(rep.raw, GOLDEN["err0_upper"])
    assert not rep.vacuous


def test_err0_lower_limit_large_d():
    rep = err0_bounds(BoundInputs(10, 10**7, 0.3, 1.0)).lower
    assert abs(rep.raw - 1 / (4 * math.sqrt(2 * math.pi))) < 1e-4


def test_err0_lower_underflow_flag():
    rep = err0_bounds(BoundInputs(10**5, 100, 0.4, 1.0)).lower
    assert rep.raw == 0.0 and rep.underflow and not rep.vacuous


@settings(max_examples=200)
@given(
    n=st.integers(1, 10**7),
    d=st.integers(1, 10**4),
    p=st.floats(0.0, 0.4999),
    g=st.floats(0.05, 10.0),
)
def test_err0_lower_below_upper(n, d, p, g):
    b = err0_bounds(BoundInputs(n, d, p, g))
    for rep in (b.lower, b.upper):
        assert 0.0 <= rep.clamped <= 1.0
        assert rep.vacuous == (rep.raw > 1.0 or rep.raw < 0.0)
    assert b.lower.clamped <= b.upper.clamped


def test_sample_complexity_initial():
    assert math.isclose(sample_complexity_initial(1 / math.e, BoundInputs(1, 10, 0.0, 1.0)), 80.0, rel_tol=1e-14)
    a = sample_complexity_initial(0.1, BoundInputs(1, 10, 0.2, 1.3))
    b = sample_complexity_initial(0.1, BoundInputs(1, 20, 0.2, 1.3))
    assert math.isclose(b, 2 * a, rel_tol=1e-14)
    assert sample_complexity_initial(0.1, BoundInputs(1, 10, 0.5 - 1e-9, 1.0)) > 1e18


def test_sample_complexity_lower_curve():
    assert sample_complexity_lower_curve(0.0, 100, 0.0, 1.0) == 100.0
    assert math.isclose(sample_complexity_lower_curve(0.5, 50, 0.25, 2.0), 200.0, rel_tol=1e-14)


@pytest.mark.parametrize("d, p", [(10, 0.0), (50, 0.3), (400, 0.45)])
def test_sample_complexity_ratio_constant(d, p):
    ratio = sample_complexity_initial(0.1, BoundInputs(1, d, p, 1.2, 1.0, 1.5)) / sample_complexity_lower_curve(
        0.1, d, p, 1.0
    )
    ref = sample_complexity_initial(0.1, BoundInputs(1, 7, 0.1, 1.2, 1.0, 1.5)) / sample_complexity_lower_curve(
        0.1, 7, 0.1, 1.0
    )
    assert math.isclose(ratio, ref, rel_tol=1e-12)


def test_retrain_aux_golden():
    aux = retrain_aux(BoundInputs(10**5, 100, 0.4, 1.0))
    assert rel_close(aux.q_prime, GOLDEN["q_prime"])
    assert rel_close(aux.p_prime, GOLDEN["p_prime"])
    assert aux.preconditions_met


def test_retrain_aux_underflow_reports_zero():
    aux = retrain_aux(BoundInputs(10**6, 100, 0.1, 1.0))
    assert aux.q_prime == 0.0 and aux.q_prime_underflow


def test_retrain_aux_preconditions():
    assert not retrain_aux(BoundInputs(100, 10, 0.4, 1.0)).preconditions_met
    assert not retrain_aux(BoundInputs(10**6, 6, 0.1, 1.0)).preconditions_met


def test_p_prime_limit():
    ps = [retrain_aux(BoundInputs(n, n, 0.3, 1.0)).p_prime for n in (10, 100, 1000, 10**4)]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    assert abs(ps[-1] - 0.3) < 1e-8


def test_alpha1_golden():
    rep = alpha1_upper(BoundInputs(10**5, 100, 0.4, 1.0), 1.0, math.sqrt(200.0))
    assert rel_close(rep.raw, GOLDEN["alpha1_upper"])
    assert rep.vacuous and not rep.precondition_violated


def test_alpha1_flags_preconditions_and_rejects_zero():
    rep = alpha1_upper(BoundInputs(100, 10, 0.4, 1.0), 1.0, 1.0)
    assert rep.precondition_violated
    with pytest.raises(ValueError):
        alpha1_upper(BoundInputs(100, 10, 0.4, 1.0), 0.0, 0.0)


def test_alpha1_decreasing_in_inner():
    inputs = BoundInputs(2000, 20, 0.3, 1.0)
    vals = [alpha1_upper(inputs, a, 3.0).raw for a in (0.1, 0.5, 1.0, 2.0, 5.0)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    # the first term is at most 2 whatever x is
    t = err1_upper_terms(BoundInputs(2000, 20, 0.3, 1.0))[0]
    assert t[0] <= 2.0


def test_err1_golden_and_oracle():
    inputs = BoundInputs(10**5, 100, 0.45, 1.0)
    rep = err1_upper(inputs)
    assert rel_close(rep.raw, GOLDEN["err1_upper"])
    assert rel_close(retrain_aux(inputs).q_prime, GOLDEN["err1_q_prime"])
    assert rel_close(rep.raw, float(mp_err1(10**5, 100, 0.45, 1.0, 1.0)))


@pytest.mark.parametrize("n, d, p, g, lmax", [(500, 7, 0.1, 2.0, 1.0), (10**4, 300, 0.3, 1.5, 2.0), (10**6, 2000, 0.45, 1.0, 1.0)])
def test_err1_matches_high_precision(n, d, p, g, lmax):
    assert rel_close(err1_upper(BoundInputs(n, d, p, g, 1.0, lmax)).raw, float(mp_err1(n, d, p, g, lmax)))


def test_err1_second_term_vanishes_with_d():
    small = err1_upper_terms(BoundInputs(1000, 100, 0.3, 1.0))[0]
    large = err1_upper_terms(BoundInputs(10000, 1000, 0.3, 1.0))[0]
    assert large[1] < small[1] * 1e-40
    assert math.isclose(small[3] / (500 * (math.exp(-(1 / 8) * (1 - 2 * 0.3 * (1 + 3 / (8 * 1e5))) * 10) + math.exp(-100 / 16))), math.exp(0.1), rel_tol=1e-12)


def test_err1_dominated_by_blowup_term():
    # fixed d and p, n growing up to d^2: the (n/2)(...)e^{d/n} term dominates eventually
    d, p = 100, 0.45
    for n in (3000, 10**4):
        terms = err1_upper_terms(BoundInputs(n, d, p, 1.0))[0]
        assert terms[3] == max(terms)


def test_err1_upper_below_err0_lower_inside_window():
    inputs = BoundInputs(10**5, 100, 0.45, 1.0)
    assert retraining_helps_window(inputs).inside
    assert err1_upper(inputs).raw < err0_bounds(inputs).lower.raw


def test_window_values():
    w = retraining_helps_window(BoundInputs(10**5, 100, 0.45, 1.0))
    assert math.isclose(w.n_low, 1e4 * math.log(1e4), rel_tol=1e-12)
    assert math.isclose(w.n_high, 1e6, rel_tol=1e-12)
    assert w.inside
    assert not retraining_helps_window(BoundInputs(0, 100, 0.45, 1.0)).inside


def test_window_shrinks_with_gamma():
    a = retraining_helps_window(BoundInputs(1000, 100, 0.45, 1.0))
    b = retraining_helps_window(BoundInputs(1000, 100, 0.45, 1.5))
    assert b.n_low < a.n_low and b.n_high < a.n_high


def test_evaluators_deterministic():
    inputs = BoundInputs(12345, 77, 0.31, 0.9, 0.8, 1.7)
    assert err1_upper(inputs) == err1_upper(inputs)
    assert bound_table_row(inputs) == bound_table_row(inputs)


def test_bound_row_matches_header():
    row = bound_table_row(BoundInputs(10**5, 100, 0.4, 1.0))
    assert len(row) == len(BOUNDS_CSV_HEADER.split(","))


def test_inputs_validation():
    with pytest.raises(ValueError):
        BoundInputs(10, 10, 0.5, 1.0)
    with pytest.raises(ValueError):
        BoundInputs(10, 10, 0.1, 1.0, 2.0, 1.0)
