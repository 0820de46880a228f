import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from qbm_objectivity import fraction as fr
from qbm_objectivity.markers import eta_bar
from qbm_objectivity.fraction import ParityClass, ReducedFraction

PI = math.pi


@pytest.mark.parametrize("pair,expected,parity", [
    ((5, 7), (5, 7), ParityClass.ODD_ODD),
    ((4, 6), (2, 3), ParityClass.EVEN),
    ((1, 1), (1, 1), ParityClass.ODD_ODD),
])
def test_reduce_ratio(pair, expected, parity):
    f = fr.reduce_ratio(*pair)
    assert (f.num, f.den) == expected
    assert f.parity_class is parity


def test_reduce_ratio_rejects():
    with pytest.raises(fr.NonPositiveInput):
        fr.reduce_ratio(0, 7)
    with pytest.raises(TypeError):
        fr.reduce_ratio(2.0, 7)
    with pytest.raises(ValueError):
        ReducedFraction(4, 6)


def test_rationalize_examples():
    assert fr.rationalize(5 / 7, 10, 1e-9) == ReducedFraction(5, 7)
    r = math.sqrt(26) / math.sqrt(50)
    assert fr.rationalize(r, 10, 1e-6) is None
    assert fr.rationalize(r, 10, 0.02) == ReducedFraction(5, 7)


@given(st.integers(1, 60), st.integers(1, 60))
def test_rationalize_recovers_small_fractions(p, q):
    f = fr.rationalize(p / q, 60, 1e-12)
    assert Fraction(f.num, f.den) == Fraction(p, q)


@given(st.floats(0.01, 50.0), st.integers(1, 200))
def test_rationalize_is_best_convergent(x, max_den):
    f = fr.rationalize(x, max_den, 1.0)
    if f is None:
        # only possible when the integer part is zero and max_den is too small
        assert x < 1 / max_den + 1
        return
    assert f.den <= max_den
    # a convergent is at least as good as any fraction with smaller denominator
    for q in range(1, f.den):
        assert abs(round(x * q) / q - x) >= abs(f.num / f.den - x) - 1e-15


@pytest.mark.parametrize("W,frac,expected", [
    (7.0, (5, 7), PI), (3.0, (2, 3), 2 * PI), (6.0, (2, 3), PI),
])
def test_t_min(W, frac, expected):
    assert fr.t_min(W, ReducedFraction(*frac)) == pytest.approx(expected, rel=1e-15)


def test_non_objectivity_times():
    assert fr.non_objectivity_times(7.0, ReducedFraction(5, 7), 3) == pytest.approx(
        [PI, 2 * PI, 3 * PI], rel=1e-15)
    assert fr.non_objectivity_times(6.0, ReducedFraction(2, 3), 2) == pytest.approx(
        [PI, 2 * PI], rel=1e-15)
    assert fr.non_objectivity_times(7.0, ReducedFraction(5, 7), 1) == [fr.t_min(
        7.0, ReducedFraction(5, 7))]


@given(st.integers(1, 30), st.integers(1, 30), st.floats(0.5, 10.0), st.floats(0, PI / 2))
def test_t_min_is_first_zero(a, b, W, phi):
    assume(a != b)  # eta_bar vanishes identically on resonance
    f = fr.reduce_ratio(a, b)
    w = f.num / f.den * W
    tm = fr.t_min(W, f)
    for p in (1, 2, 3):
        assert abs(eta_bar(w, W, phi, p * tm)) < 1e-9 * (1 + W / w) * p * f.den
    # no earlier zero on a fine grid
    t = np.linspace(0.05 * tm, 0.95 * tm, 400)
    assert np.min(np.abs(eta_bar(w, W, phi, t))) > 0


def test_recurrence_is_lazy():
    rel = fr.FrequencyRelation(ReducedFraction(5, 7), 7.0)
    gen = rel.recurrence()
    assert [next(gen) for _ in range(4)] == pytest.approx([PI, 2 * PI, 3 * PI, 4 * PI])


def test_families():
    assert fr.frequency_family(7.0, 0, ParityClass.ODD_ODD, 3) == pytest.approx([7, 21, 35])
    assert fr.frequency_family(6.0, 3, ParityClass.EVEN, 2) == pytest.approx([2, 4])
    assert fr.frequency_family(6.0, 3, ParityClass.EVEN, 0) == []


@given(st.integers(0, 6), st.sampled_from(list(ParityClass)), st.floats(0.5, 9.0))
def test_family_shares_recurrence(n_min, parity, W):
    if parity is ParityClass.EVEN and n_min == 0:
        n_min = 1
    fam_t = fr.family_t_min(W, n_min, parity)
    for m in fr.frequency_family_members(W, n_min, parity, 6):
        assert m.t_min <= fam_t * (1 + 1e-12)
        ratio = fam_t / m.t_min
        assert abs(ratio - round(ratio)) < 1e-9
        assert m.finer_lattice == (m.t_min < fam_t * (1 - 1e-12))
        assert abs(eta_bar(m.omega, W, 0.3, fam_t)) < 1e-8 * (1 + W / m.omega) * (n_min + 1)


def test_family_flags_finer_members():
    members = fr.frequency_family_members(6.0, 3, ParityClass.EVEN, 3)
    # 2/6 -> 1/3 (OddOdd, t_min = pi/2), 4/6 -> 2/3, 6/6 -> 1/1
    assert [str(m.fraction) for m in members] == ["1/3", "2/3", "1/1"]
    assert [m.finer_lattice for m in members] == [True, False, True]


def test_common_recurrence():
    fracs = [fr.reduce_ratio(k, 7) for k in range(2, 7)]
    assert fr.common_recurrence(7.0, fracs) == pytest.approx(2 * PI, rel=1e-15)
    assert fr.common_recurrence(7.0, [ReducedFraction(5, 7)]) == pytest.approx(PI)
    assert fr.common_recurrence(7.0, [ReducedFraction(5, 7), ReducedFraction(3, 7)]) == \
        pytest.approx(PI)
    with pytest.raises(ValueError):
        fr.common_recurrence(7.0, [])
