import itertools

import numpy as np
import pytest

from defectsum.channels import (
    channel_oracle_count,
    channel_spectrum,
    effective_coupling,
    harmonic_multiplicity,
    point_defect,
    shell_defect,
    zero_defect_threshold,
)
from defectsum.core import INF, Shell
from defectsum.errors import BorderlineChannelWarning, TruncationTooSmall


# ---------------------------------------------------------------------------
# Effective coupling and multiplicity


def test_effective_coupling_examples():
    assert effective_coupling(3, 0.0, 0) == 0.0
    assert effective_coupling(3, 0.0, 1) == 2.0
    assert effective_coupling(5, -2.0, 0) == 0.0
    assert effective_coupling(2, 5.0, 0) == 4.75


def test_multiplicity_examples():
    assert harmonic_multiplicity(3, 2) == 5
    assert harmonic_multiplicity(2, 3) == 2
    assert harmonic_multiplicity(4, 1) == 4
    assert harmonic_multiplicity(2, 0) == 1
    assert [harmonic_multiplicity(3, l) for l in range(5)] == [1, 3, 5, 7, 9]


def _monomials(n, degree):
    """Count monomials of the given total degree by direct enumeration."""
    return sum(1 for c in itertools.product(range(degree + 1), repeat=n)
               if sum(c) == degree)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_multiplicity_against_monomial_count(n):
    # harmonic dimension = monomials(l) - monomials(l - 2)
    for l in range(5):
        expected = _monomials(n, l) - (_monomials(n, l - 2) if l >= 2 else 0)
        assert harmonic_multiplicity(n, l) == expected


@pytest.mark.parametrize("n", [2, 3, 4])
def test_multiplicity_partial_sums(n):
    # degree <= L harmonics span the same dimension as the top two monomial layers
    for L in range(5):
        total = sum(harmonic_multiplicity(n, l) for l in range(L + 1))
        expected = _monomials(n, L) + (_monomials(n, L - 1) if L >= 1 else 0)
        assert total == expected


# ---------------------------------------------------------------------------
# Point defects


def test_point_defect_examples():
    assert point_defect(5, 0.0).def_value == 0
    assert point_defect(3, 0.75).def_value == 0
    assert point_defect(3, 0.0).def_value == 1
    assert point_defect(3, -3.0).def_value == 4


def test_point_defect_threshold_equivalence():
    for n in range(2, 11):
        threshold = zero_defect_threshold(n)
        for k in range(-32, 33):
            c = threshold + k / 16.0
            assert (point_defect(n, c).def_value == 0) == (c >= threshold), (n, c)


def test_point_defect_monotone_in_coupling():
    for n in (2, 3, 4, 5):
        values = [point_defect(n, c).def_value for c in np.arange(-6.0, 2.0, 0.25)]
        assert all(a >= b for a, b in zip(values, values[1:]))


def test_point_defect_borderline_warns():
    with pytest.warns(BorderlineChannelWarning):
        point_defect(4, 0.0)  # the l = 0 channel hits the threshold exactly


def test_point_defect_agrees_with_channel_oracle():
    # multiplicity-weighted numeric per-channel counts reproduce the defect
    for n, c in ((3, 0.0), (3, -3.0), (3, -1.0), (4, -2.0), (5, 0.0)):
        expected = point_defect(n, c).def_value
        total = 0
        l = 0
        while True:
            q_eff = effective_coupling(n, c, l)
            if q_eff >= 0.75:
                break
            total += harmonic_multiplicity(n, l) * channel_oracle_count(n, c, l)
            l += 1
        assert total == expected, (n, c)


# ---------------------------------------------------------------------------
# Channel spectrum


def test_channel_spectrum_example():
    sp = channel_spectrum(3, 0.0, 2)
    rows = [(e.l, e.q_eff, e.multiplicity, e.endpoint_class.kind) for e in sp.entries]
    assert rows == [
        (0, 0.0, 1, "limit_circle"),
        (1, 2.0, 3, "limit_point"),
        (2, 6.0, 5, "limit_point"),
    ]
    assert sp.tail_limit_point


def test_channel_spectrum_n2():
    sp = channel_spectrum(2, 5.0, 0)
    assert [(e.l, e.q_eff, e.multiplicity) for e in sp.entries] == [(0, 4.75, 1)]
    assert sp.entries[0].endpoint_class.is_limit_point


def test_channel_spectrum_n4_threshold():
    with pytest.warns(BorderlineChannelWarning):
        sp = channel_spectrum(4, 0.0, 0)
    assert sp.entries[0].q_eff == 0.75
    assert sp.entries[0].endpoint_class.is_limit_point


def test_channel_spectrum_truncation_error():
    with pytest.raises(TruncationTooSmall):
        channel_spectrum(3, -10.0, 1)


def test_spectrum_coupling_strictly_increasing():
    sp = channel_spectrum(3, -6.0, 5)
    qs = [e.q_eff for e in sp.entries]
    assert all(a < b for a, b in zip(qs, qs[1:]))


def test_spectrum_classes_match_oracle_off_borderline():
    sp = channel_spectrum(3, -2.0, 3)
    for e in sp.entries:
        if abs(e.q_eff - 0.75) < 1e-3:
            continue
        count = channel_oracle_count(3, -2.0, e.l)
        assert (count == 1) == e.endpoint_class.is_limit_circle


# ---------------------------------------------------------------------------
# Shell defects


def test_shell_zero_strength():
    assert shell_defect(3, Shell(0.0, 1.0, 0.25, 0.5)).def_value == 0


def test_shell_mild_singularity_infinite_defect():
    assert shell_defect(3, Shell(1.0, 0.5, 0.25, 0.5)).def_value == INF


def test_shell_inverse_square_strength_zero_defect():
    assert shell_defect(3, Shell(1.0, 2.0, 0.25, 0.5)).def_value == 0


def test_shell_zero_exponent():
    assert shell_defect(3, Shell(5.0, 0.0, 0.25, 0.5)).def_value == 0


def test_shell_strong_repulsive_zero_defect():
    # gamma > 2 with positive strength: growth kills one direction per side
    assert shell_defect(3, Shell(1.0, 3.0, 0.25, 0.5)).def_value == 0


def test_shell_weak_inverse_square_infinite():
    # gamma = 2 with coupling below 3/4: limit circle on both sides
    assert shell_defect(3, Shell(0.5, 2.0, 0.25, 0.5)).def_value == INF


def test_shell_strong_attractive_infinite_defect():
    # gamma > 2 attractive: rapid oscillation with decaying amplitude keeps
    # both solutions square integrable on each side
    assert shell_defect(3, Shell(-1.0, 3.0, 0.25, 0.5)).def_value == INF
