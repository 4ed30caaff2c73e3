import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from defectsum.bounds import (
    FORM,
    OPERATOR,
    PartitionData,
    RelativeBound,
    SampledPotential,
    SingularTag,
    commutator_to_iii,
    defect_invariance_gate,
    hardy_constant,
    hardy_form_bound,
    hardy_oracle_max_ratio,
    hardy_ratio,
    loc_unif_Lp_check,
    morgan_form_bound,
    morgan_operator_bound,
    operator_commutator_gate,
)
from defectsum.errors import DimensionTooSmall, HardyViolation, InadmissibleExponent


# ---------------------------------------------------------------------------
# Localization arithmetic


def test_morgan_examples():
    assert morgan_form_bound(RelativeBound(0.5, 10.0), PartitionData(1, 1, 0)) == \
        RelativeBound(0.5, 10.0)
    assert morgan_form_bound(RelativeBound(0.5, 0.0), PartitionData(1, 2, 3)) == \
        RelativeBound(1.0, 1.5)
    got = morgan_form_bound(RelativeBound(0.0, 7.0), PartitionData(2, 5, 9))
    assert (got.a, got.b) == (0.0, 14.0)


def test_morgan_operator_mirrors_form():
    local = RelativeBound(0.5, 0.0, OPERATOR)
    got = morgan_operator_bound(local, PartitionData(1, 2, 3))
    assert (got.a, got.b, got.kind) == (1.0, 1.5, OPERATOR)


def test_morgan_kind_mismatch():
    with pytest.raises(ValueError):
        morgan_form_bound(RelativeBound(0.5, 0.0, OPERATOR), PartitionData(1, 1, 0))


pos = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)
nonneg = st.floats(min_value=0.0, max_value=1e3, allow_nan=False)


@given(nonneg, nonneg, pos, pos, nonneg)
@hyp_settings(max_examples=300, deadline=None)
def test_morgan_exact_and_monotone(a, b, c, d, e):
    got = morgan_form_bound(RelativeBound(a, b), PartitionData(c, d, e))
    assert got.a == a * c * d           # bitwise identical arithmetic
    assert got.b == a * c * e + b * c
    bigger = morgan_form_bound(RelativeBound(a + 1.0, b), PartitionData(c, d, e))
    assert bigger.a >= got.a and bigger.b >= got.b


def test_commutator_to_iii_examples():
    assert commutator_to_iii(0.0, 0.1) == (1.1, 0.0)
    assert commutator_to_iii(2.0, 1.0) == (2.0, 4.0)
    d1, e1 = commutator_to_iii(1.0, 1e-4)
    assert e1 > 1e3  # grows like e_tilde / eps


def test_operator_commutator_gate_examples():
    assert operator_commutator_gate(2.0, 0.0) == (0.5, 0.0)
    coef_t, coef_i = operator_commutator_gate(1.0, 3.0)
    assert coef_t == pytest.approx(1.0 / 6.0)
    assert coef_i == pytest.approx(1.0)
    assert operator_commutator_gate(0.7, 0.0)[1] == 0.0


def test_defect_invariance_gate_boundary():
    assert defect_invariance_gate(RelativeBound(0.99, 5.0, OPERATOR))
    assert not defect_invariance_gate(RelativeBound(1.0, 0.0, OPERATOR))
    assert defect_invariance_gate(RelativeBound(0.0, 0.0, OPERATOR))
    assert defect_invariance_gate(
        RelativeBound(math.nextafter(1.0, 0.0), 0.0, OPERATOR))
    assert not defect_invariance_gate(
        RelativeBound(math.nextafter(1.0, 2.0), 0.0, OPERATOR))
    with pytest.raises(ValueError):
        defect_invariance_gate(RelativeBound(0.5, 0.0, FORM))


# ---------------------------------------------------------------------------
# Hardy bound


def test_hardy_examples():
    assert hardy_form_bound(3, 0.2).a == pytest.approx(0.8)
    assert hardy_form_bound(5, 0.0).a == 0.0
    with pytest.raises(HardyViolation):
        hardy_form_bound(3, 0.25)
    with pytest.raises(DimensionTooSmall):
        hardy_form_bound(2, 0.1)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_hardy_oracle_stays_below_bound(n):
    gamma = 0.9 * hardy_constant(n)
    bound = hardy_form_bound(n, gamma)
    worst = hardy_oracle_max_ratio(n, gamma, trials=100, seed=n)
    assert worst <= bound.a + 1e-6


def test_hardy_ratio_near_optimizer():
    # profiles concentrating near r^{-(n-2)/2} approach the sharp constant
    n = 3
    gamma = 0.9 * hardy_constant(n)
    a = hardy_form_bound(n, gamma).a
    eps = 0.05
    f = lambda r: np.clip(1 - r, 0, None) ** 2 * np.maximum(r, 1e-12) ** (-0.5 + eps)
    h = 1e-7
    fp = lambda r: (f(r + h) - f(np.maximum(r - h, 1e-12))) / (2 * h)
    ratio = hardy_ratio(n, gamma, f, fp, nodes=2000)
    assert 0.8 * a <= ratio <= a + 1e-6


def test_hardy_composition_with_localization():
    # the end-to-end form certificate keeps the leading coefficient below 1
    for n in (3, 4, 5):
        gamma = 0.99 * hardy_constant(n)
        combined = morgan_form_bound(hardy_form_bound(n, gamma),
                                     PartitionData(1.0, 1.0, 17.0))
        assert combined.a < 1.0


# ---------------------------------------------------------------------------
# Uniformly local L^p


def test_lp_check_constant_potential():
    vals = np.ones((24, 24, 24))
    sp = SampledPotential(((-2.0, 2.0),) * 3, vals)
    est, ok = loc_unif_Lp_check(sp, 3, 2, cap=10.0)
    assert ok
    assert est == pytest.approx(math.sqrt(4.0 * math.pi / 3.0), rel=0.02)


def test_lp_check_inverse_radius_in_r3():
    m = 40
    axes = np.linspace(-2.0, 2.0, m, endpoint=False) + 2.0 / m
    mesh = np.meshgrid(axes, axes, axes, indexing="ij")
    r = np.sqrt(sum(g**2 for g in mesh))
    vals = 1.0 / np.maximum(r, 1e-9)
    sp = SampledPotential(((-2.0, 2.0),) * 3, vals,
                          tags=(SingularTag((0.0, 0.0, 0.0), 1.0, 1.0),))
    est, ok = loc_unif_Lp_check(sp, 3, 2, cap=10.0)
    assert ok
    assert est == pytest.approx(math.sqrt(4.0 * math.pi), rel=0.05)


def test_lp_check_inadmissible():
    sp = SampledPotential(((-1.0, 1.0),) * 5, np.ones((4,) * 5))
    with pytest.raises(InadmissibleExponent):
        loc_unif_Lp_check(sp, 5, 1, cap=10.0)
    with pytest.raises(InadmissibleExponent):
        loc_unif_Lp_check(SampledPotential(((-1.0, 1.0),) * 3, np.ones((4,) * 3)),
                          3, 4, cap=10.0)


def test_lp_check_divergent_tag_fails():
    vals = np.ones((8, 8, 8))
    sp = SampledPotential(((-1.0, 1.0),) * 3, vals,
                          tags=(SingularTag((0.0, 0.0, 0.0), 1.0, 2.0),))
    est, ok = loc_unif_Lp_check(sp, 3, 2, cap=100.0)
    assert not ok
    assert est == math.inf
