import math

import pytest
from hypothesis import given, strategies as st

from polaritonlab.blockade.extraction import (blockade_density, blockade_radius, build_report,
                                              exciton_constant, extract_interaction,
                                              full_blockade_condition, invert_depth)
from polaritonlab.core import ModeArea, mode_area
from polaritonlab.errors import DomainError, NoBlockadeSignal


def area(a):
    return ModeArea(5.0, 3.0, 25.0, a, 2.0 / a)


def test_extraction_operating_point():
    U, g_dd = extract_interaction(0.94, 0.215, area(385.0), 0.61)
    assert U == pytest.approx(0.0212, abs=1e-4)
    assert g_dd == pytest.approx(4.07, abs=0.01)


def test_extraction_second_operating_point():
    # g2_min back-derived from the quoted g_dd = 3.6 (the measured 0.97 is rounded)
    g2_min = 1 - 0.61 * (3.6 * 2 / 1465) / 0.115
    assert g2_min == pytest.approx(0.97, abs=0.005)
    _, g_dd = extract_interaction(g2_min, 0.115, area(1465.0), 0.61)
    assert g_dd == pytest.approx(3.6, rel=1e-12)


@given(st.floats(0.01, 0.5), st.floats(0.05, 1.0))
def test_extraction_inverts_linear_relation(x, gamma):
    U, _ = extract_interaction(1 - 0.61 * x, gamma, area(400.0), 0.61)
    assert U / gamma == pytest.approx(x, rel=1e-9)


def test_no_blockade_signal():
    with pytest.raises(NoBlockadeSignal):
        extract_interaction(1.0, 0.2, area(400.0), 0.61)
    with pytest.raises(DomainError):
        extract_interaction(0.9, 0.2, area(400.0), 0.0)


@pytest.mark.parametrize("g_dd,gamma,want,tol", [(4.0, 0.215, 3.44, 0.01), (3.6, 0.115, 4.46, 0.01),
                                                 (math.pi / 2, 1.0, 1.0, 1e-12)])
def test_blockade_radius(g_dd, gamma, want, tol):
    assert blockade_radius(g_dd, gamma) == pytest.approx(want, abs=tol)


def test_blockade_radius_domain():
    with pytest.raises(DomainError):
        blockade_radius(0.0, 0.2)


def test_full_blockade_threshold():
    lhs, ok, thr = full_blockade_condition(0.28, 8.0, 0.60, 50.0)
    assert thr == pytest.approx(0.56, abs=0.01)
    assert ok and lhs < 50
    assert not full_blockade_condition(0.28, 8.0, 0.50, 50.0)[1]


@given(st.floats(0.05, 2.0), st.floats(1.0, 20.0), st.floats(1.0, 100.0))
def test_threshold_solves_equality(w, d, c):
    _, _, thr = full_blockade_condition(w, d, 0.5, c)
    lhs, _, _ = full_blockade_condition(w, d, thr, c)
    assert lhs == pytest.approx(c, rel=1e-8)


def test_pure_exciton_limit():
    lhs, ok, _ = full_blockade_condition(10.0, 1.0, 1.0, 1e-3)
    assert lhs == 0.0 and ok


def test_exciton_constant_from_operating_point():
    c = exciton_constant(4.0, 0.68, 25.6, 8.0)
    assert c == pytest.approx(41.07, abs=0.01)
    assert 35 <= c <= 55


def test_densities_and_report():
    a = mode_area(5.0, 0.215, 25.6)
    rep = build_report(0.94, 0.215, a, 0.61)
    assert rep.g_dd == pytest.approx(4.0, abs=0.3)
    assert rep.R_b == pytest.approx(3.4, abs=0.2)
    assert rep.n_b == pytest.approx(blockade_density(rep.g_dd, 0.215))
    assert rep.n / rep.n_b == pytest.approx(0.1, abs=0.01)
    assert not rep.blockade_verdict


def test_invert_depth():
    assert invert_depth(0.61 * 0.2 - 0.56 * 0.04) == pytest.approx(0.2, rel=1e-12)
    assert invert_depth(0.05, 0.5, 0.0) == pytest.approx(0.1)
    assert invert_depth(1.0) is None
