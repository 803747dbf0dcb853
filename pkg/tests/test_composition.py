import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import affine
from mslab.composition import (
    CompConfig,
    analyze_composition,
    c_psi_norm_sq,
    pullback_integral,
    pullback_intervals,
    thm3_compact_profile,
    thm3_global_terms,
    thm3_hs,
    thm3_local_terms,
)
from mslab.errors import Divergent, RangeViolation
from mslab.hgamma import SpacePair, cell_region
from mslab.numerics import HalfAnnulus, integrate_line
from mslab.symb import parse_expr

CELL1 = HalfAnnulus(0.0, 10.0)


# ---- pullback sets ----------------------------------------------------------------


@pytest.mark.parametrize(
    "psi, expected, tol",
    [("2*z", 10.0, 1e-8), ("z+i", 2 * math.sqrt(99), 1e-6)],
)
def test_pullback_length_examples(small_space, psi, expected, tol):
    cell = cell_region(small_space, 1)
    assert cell.r_hi == 10.0
    assert abs(pullback_integral(psi, 0.0, cell) - expected) <= tol


def test_pullback_intervals_shape():
    iv = pullback_intervals("z+i", 0.0, CELL1)
    assert len(iv) == 1
    a, b = iv[0]
    assert a == pytest.approx(-math.sqrt(99), abs=1e-12)
    assert b == pytest.approx(math.sqrt(99), abs=1e-12)


def test_pullback_zero_weight():
    assert pullback_integral("2*z", 0.0, CELL1, weight=0.0) == 0.0
    assert pullback_integral("2*z", 0.0, CELL1, weight=lambda w: 0 * w.real) == 0.0


def test_pullback_constant_weight_scales():
    assert pullback_integral("2*z", 0.0, CELL1, weight=3.0) == pytest.approx(30.0, abs=1e-8)


def test_pullback_annulus_two_pieces():
    iv = pullback_intervals("z", 0.5, HalfAnnulus(1.0, 2.0))
    assert len(iv) == 2
    total = sum(b - a for a, b in iv)
    assert total == pytest.approx(2 * (math.sqrt(3.75) - math.sqrt(0.75)), abs=1e-10)


def test_pullback_unbounded_cell():
    iv = pullback_intervals("z", 0.0, HalfAnnulus(10.0, math.inf))
    assert iv[0][0] == -math.inf and iv[-1][1] == math.inf
    assert pullback_integral("z", 0.0, HalfAnnulus(10.0, math.inf)) == math.inf


def test_empty_pullback_is_zero():
    assert pullback_intervals("z+100i", 0.0, CELL1) == []
    assert pullback_integral("z+100i", 0.0, CELL1, weight=lambda w: 1 / np.abs(w)) == 0.0


def test_range_violation():
    with pytest.raises(RangeViolation):
        pullback_intervals("z-i", 0.0, CELL1)


def test_range_ok_on_boundary_line():
    # psi = 2z at y = 0 lands on the real axis, which is allowed
    assert pullback_intervals("2*z", 0.0, CELL1)


@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(0.2, 5.0),
    br=st.floats(-20.0, 20.0),
    bi=st.floats(0.0, 5.0),
    y=st.floats(0.0, 8.0),
    r_lo=st.floats(0.0, 15.0),
    width=st.floats(0.5, 30.0),
)
def test_affine_pullback_closed_form(a, br, bi, y, r_lo, width):
    psi = f"{a!r}*z+({br!r}+{bi!r}i)"
    cell = HalfAnnulus(r_lo, r_lo + width)
    expected = affine.length(a, complex(br, bi), y, cell.r_lo, cell.r_hi)
    assert pullback_integral(psi, y, cell) == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("psi, y", [("2*z+i", 0.0), ("z+3i", 1.5), ("z-1/(z+i)", 0.3)])
def test_partition_of_line_is_partition(small_space, psi, y):
    weight = lambda w: 1.0 / (1.0 + np.abs(w) ** 2)
    parts = sum(pullback_integral(psi, y, cell_region(small_space, n), weight)
                for n in range(1, len(small_space) + 1))
    f = parse_expr(psi)
    whole = integrate_line(lambda z: weight(f(z)), y).value
    # both sides carry the default 1e-6 relative quadrature tolerance
    assert parts == pytest.approx(float(whole), rel=2e-6)


# ---- local and global terms ----------------------------------------------------------


def _affine_local_oracle(space, a, b):
    edges = space.cell_edges
    return [affine.sup_y(lambda y, n=n: affine.local(a, b, y, edges[n], edges[n + 1],
                                                     space.gammas[n], space.weights[n]), 200.0)
            for n in range(len(space))]


def _affine_global_oracle(space, a, b):
    edges = space.cell_edges
    n_cells = len(space)
    v = np.asarray(space.weights)
    decay = v / np.abs(np.asarray(space.gammas)) ** 2
    a_sup = [affine.sup_y(lambda y, k=k: affine.inverse_sq(a, b, y, edges[k], edges[k + 1]),
                          200.0) for k in range(n_cells)]
    out = []
    for n in range(n_cells):
        first = v[: n + 1].sum() * sum(a_sup[n + 1:])
        m = affine.sup_y(lambda y: affine.length(a, b, y, 0.0, edges[n + 1]), 200.0) \
            if n + 1 < n_cells else 0.0
        out.append(first + decay[n + 1:].sum() * m)
    return np.array(out)


@pytest.mark.parametrize("psi, a, b", [("2*z+i", 2.0, 1j), ("z+3i", 1.0, 3j)])
def test_local_terms_affine_oracle(small_space, psi, a, b):
    res = thm3_local_terms(small_space, psi)
    assert res.values == pytest.approx(_affine_local_oracle(small_space, a, b), rel=1e-6)
    assert res.sup == pytest.approx(max(res.values))


@pytest.mark.parametrize("psi, a, b", [("2*z+i", 2.0, 1j), ("z+i", 1.0, 1j)])
def test_global_terms_affine_oracle(small_space, psi, a, b):
    res = thm3_global_terms(small_space, psi)
    assert res.values == pytest.approx(_affine_global_oracle(small_space, a, b), rel=1e-6)


def test_global_second_block_length_at_zero(small_space):
    # n = 1 second block is (v_2/|g_2|^2 + v_3/|g_3|^2) * sup_y m{|z+i| < 10}
    res = thm3_global_terms(small_space, "z+i")
    first = affine.sup_y(lambda y: affine.inverse_sq(1.0, 1j, y, 10.0, 40.0), 200.0) + \
        affine.sup_y(lambda y: affine.inverse_sq(1.0, 1j, y, 40.0, math.inf), 200.0)
    second = (1 / 16 ** 2 + 1 / 64 ** 2) * 2 * math.sqrt(99)
    assert res.values[0] == pytest.approx(first + second, rel=1e-7)


def test_single_point_global_zero():
    s = SpacePair((4j,), (1.0,))
    assert thm3_global_terms(s, "z+10i").values.tolist() == [0.0]


def test_local_terms_empty_cell_zero(small_space):
    res = thm3_local_terms(small_space, "z+100i")
    assert res.values[0] == 0.0
    assert res.values[1] == 0.0
    assert res.values[2] > 0


def test_linear_in_weights(small_space):
    doubled = small_space.scaled_weights(2.0)
    for fn in (thm3_local_terms, thm3_global_terms):
        assert fn(doubled, "2*z+i").values == pytest.approx(
            2 * fn(small_space, "2*z+i").values, rel=1e-12)
    h1 = np.array(thm3_hs(small_space, "2*z+i"))
    h2 = np.array(thm3_hs(doubled, "2*z+i"))
    assert h2 == pytest.approx(2 * h1, rel=1e-12)


# ---- Hilbert-Schmidt sums ---------------------------------------------------------


def test_hs_single_point_shift():
    s = SpacePair((4j,), (1.0,))
    h_local, h_global, h_direct = thm3_hs(s, "z+10i")
    assert h_global == 0.0
    assert h_direct == pytest.approx(math.pi / 6, rel=1e-6)
    assert h_local == pytest.approx(h_direct, rel=1e-6)


def test_hs_divergence_detected():
    s = SpacePair((4j,), (1.0,))
    with pytest.raises(Divergent) as info:
        thm3_hs(s, "z+i")
    assert "T_1" in str(info.value)


def test_hs_divergence_located_near_pole():
    s = SpacePair((4j,), (1.0,))
    terms = thm3_local_terms(s, "z+i")
    assert terms.values[0] == math.inf
    assert any("exceeds ceiling" in m for m in terms.messages)


def test_hs_ratio_affine(small_space):
    res = analyze_composition(small_space, "2*z+i")
    assert res.error is None
    assert 1 / 8 <= res.hs_ratio <= 8
    assert np.all(res.local_terms >= 0) and np.all(res.global_terms >= 0)


def test_direct_terms_weak_convergence(golden_space):
    # e_n o (z + 2i): every term is pi/2 for real nodes, so the sequence is flat
    res = analyze_composition(golden_space, "z+2i")
    d = res.direct_terms
    assert d == pytest.approx(np.full(len(d), math.pi / 2), rel=1e-7)
    assert np.all(np.diff(d) <= 1e-7 * d.max())


# ---- profile and analysis ---------------------------------------------------------------


def test_profile_single_point_vacuous():
    s = SpacePair((4j,), (1.0,))
    prof = thm3_compact_profile(s, "z+10i")
    assert prof.consistent
    assert prof.reasons["local"] == "vacuous"


def test_profile_decaying_second_block():
    # v_n / |gamma_n|^2 shrinks fast, so B~ decays along the cells
    s = SpacePair((2j, 8j, 32j, 128j), (1.0, 1.0, 1.0, 1.0))
    prof = thm3_compact_profile(s, "z+i")
    assert np.all(np.isfinite(prof.global_))
    assert prof.global_[-1] == 0.0


def test_identity_profile_reported(golden_space):
    prof = thm3_compact_profile(golden_space, "z+i")
    assert len(prof.local) == len(golden_space)
    assert np.all(np.isfinite(prof.local))


def test_analysis_range_violation(small_space):
    res = analyze_composition(small_space, "z-i")
    assert res.error.startswith("RangeViolation")
    assert res.verdicts["range_ok"] is False
    assert np.all(np.isnan(res.local_terms))


def test_analysis_carries_index_note(small_space):
    res = analyze_composition(small_space, "2*z+i")
    assert any("index" in w for w in res.warnings)


# ---- Hardy norm of a composition --------------------------------------------------


@pytest.mark.parametrize(
    "f, psi, expected",
    [("1/(z+i)", "z", math.pi), ("1/(z+i)", "z+i", math.pi / 2), ("0", "z", 0.0)],
)
def test_c_psi_norm(f, psi, expected):
    assert c_psi_norm_sq(f, psi) == pytest.approx(expected, rel=1e-7, abs=1e-12)


def test_c_psi_norm_range_violation():
    with pytest.raises(RangeViolation):
        c_psi_norm_sq("1/(z+i)", "z-2i")


def test_custom_ceiling_triggers_divergence():
    s = SpacePair((4j,), (1.0,))
    with pytest.raises(Divergent):
        thm3_hs(s, "z+10i", cfg=CompConfig(ceiling=0.1))
