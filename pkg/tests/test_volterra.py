import math

import numpy as np
import pytest

import golden
from oracles.jacobi import jacobi_eigenvalues
from mslab import volterra
from mslab.errors import Divergent, NonHermitian
from mslab.hgamma import SpacePair
from mslab.volterra import (
    LPConfig,
    analyze_volterra,
    cell_moments,
    compactness_profile,
    global_condition_terms,
    gram_matrix,
    hs_criterion,
    hs_direct,
    local_condition_terms,
    lp_norm_sq,
    truncated_operator_norm,
    vg_pointwise,
)

G = golden.SYMBOL


@pytest.mark.parametrize(
    "f, boundary",
    [("1/(z+i)", math.pi), ("1/(z+2i)", math.pi / 2), ("1/(z+i)^2", math.pi / 2)],
)
def test_lp_norm_examples(f, boundary):
    area, bnd = lp_norm_sq(f)
    assert bnd == pytest.approx(boundary, rel=1e-6)
    assert area == pytest.approx(bnd, rel=1e-5)


def test_lp_area_integral_unit_function():
    res = lp_norm_sq("1/(z+i)")
    assert res.area_integral == pytest.approx(math.pi / 4, rel=1e-6)
    assert res.ratio == pytest.approx(4.0, rel=1e-5)


def test_lp_zero_function():
    assert tuple(lp_norm_sq("0")) == (0.0, 0.0)


def test_lp_wrong_constant_is_visible():
    area, bnd = lp_norm_sq("1/(z+i)", LPConfig(2.0))
    assert bnd / area == pytest.approx(2.0, rel=1e-5)


def test_lp_non_h2_function():
    with pytest.raises(Divergent):
        lp_norm_sq("1/(z+i)^0 + 0*z + 1")


def test_lp_config_validation():
    with pytest.raises(ValueError):
        LPConfig(0.0)


@pytest.mark.parametrize(
    "f, g, z, expected",
    [("1", "z", 1 + 1j, 1 + 1j), ("z", "z", 2, 2), ("1/(z+i)", "log(z+i)", 1j, -0.5j)],
)
def test_vg_pointwise(f, g, z, expected):
    assert vg_pointwise(f, g, z) == pytest.approx(expected, abs=1e-10)


# ---- golden configuration ---------------------------------------------------------


def test_cell_moments_golden(golden_space):
    mom = cell_moments(golden_space, G)
    assert mom.P[:-1] == pytest.approx(golden.P, rel=1e-6)
    assert mom.P[-1] == math.inf
    assert mom.Q == pytest.approx(golden.Q, rel=1e-6)
    assert mom.D.sum(axis=0) == pytest.approx(golden.FULL_D, rel=1e-6)


def test_local_terms_golden(golden_space):
    terms = local_condition_terms(golden_space, G)
    assert list(terms) == pytest.approx(golden.L, rel=1e-5)
    assert terms.sup == pytest.approx(golden.L[0], rel=1e-5)


def test_global_terms_golden(golden_space):
    terms = global_condition_terms(golden_space, G)
    assert list(terms[:-1]) == pytest.approx(golden.B[:-1], rel=1e-5)
    assert terms[-1] == 0.0


def test_small_space_golden(small_space):
    assert local_condition_terms(small_space, G)[0] == pytest.approx(golden.SMALL_L1, rel=1e-5)
    b = global_condition_terms(small_space, G)
    assert list(b) == pytest.approx(golden.SMALL_B, rel=1e-5)


def test_hs_golden(golden_space):
    s_local, s_global = hs_criterion(golden_space, G)
    assert s_local == pytest.approx(golden.S_LOCAL, rel=1e-5)
    assert s_global == pytest.approx(golden.S_GLOBAL, rel=1e-5)
    direct = hs_direct(golden_space, G)
    assert direct == pytest.approx(golden.HS_DIRECT, rel=1e-5)
    assert 1 / 8 <= direct / (s_local + s_global) <= 8


# ---- degenerate and structural cases --------------------------------------------


@pytest.mark.parametrize("g", ["3", "2i+1", "exp(1)"])
def test_zero_symbol(golden_space, g):
    assert all(v == 0 for v in local_condition_terms(golden_space, g))
    assert all(v == 0 for v in global_condition_terms(golden_space, g))
    assert hs_criterion(golden_space, g) == (0.0, 0.0)
    assert hs_direct(golden_space, g) == 0.0
    assert truncated_operator_norm(golden_space, g) == 0.0
    assert compactness_profile(golden_space, g).consistent


def test_weights_enter_linearly(small_space):
    one = local_condition_terms(small_space, G)
    two = local_condition_terms(small_space.scaled_weights(2.0), G)
    assert list(two) == pytest.approx([2 * v for v in one], rel=1e-12)


def test_homogeneity(small_space):
    a = analyze_volterra(small_space, G)
    b = analyze_volterra(small_space, "(1+2i)*log(z+i)")
    assert b.local_terms == pytest.approx(5 * a.local_terms, rel=1e-6)
    assert b.global_terms == pytest.approx(5 * a.global_terms, rel=1e-6)
    assert b.hs_direct == pytest.approx(5 * a.hs_direct, rel=1e-6)
    for k in a.truncated_norms:
        assert b.truncated_norms[k] == pytest.approx(math.sqrt(5) * a.truncated_norms[k], rel=1e-6)


def test_single_point_space():
    s = SpacePair((4.0,), (1.0,))
    assert list(global_condition_terms(s, G)) == [0.0]
    s_local, s_global = hs_criterion(s, G)
    assert s_global == 0.0
    assert hs_direct(s, G) == pytest.approx(4 * s_local, rel=1e-12)
    assert s_local == pytest.approx(golden.FULL_D[0], rel=1e-6)
    assert truncated_operator_norm(s, G, n_sub=1) == pytest.approx(
        math.sqrt(4 * golden.FULL_D[0]), rel=1e-6)


def test_compactness_profiles(golden_space):
    assert compactness_profile(golden_space, "1/(z+i)").consistent
    assert compactness_profile(golden_space, G).consistent


def test_identity_symbol_grows(small_space):
    # g' = 1: each L_n is comparable to v_n |gamma_n|
    terms = local_condition_terms(small_space, "z")
    assert terms[0] < terms[1] < terms[2]
    assert not compactness_profile(small_space, "z").consistent
    with pytest.raises(Divergent):
        hs_criterion(small_space, "z")
    with pytest.raises(Divergent):
        hs_direct(small_space, "z")


def test_interior_nodes_warned():
    s = SpacePair((2j, 8 + 8j), (1.0, 1.0))
    res = analyze_volterra(s, "1/(z+i)")
    assert any("interior point" in w for w in res.warnings)
    # 1/|z-gamma|^2 is not area-integrable at an interior node
    assert np.all(np.isinf(res.local_terms))
    assert not res.verdicts["hilbert_schmidt_finite"]


def test_interior_node_with_critical_symbol_is_finite():
    # g' vanishes at the node, which cancels the singularity
    s = SpacePair((2j, 100j), (1.0, 1.0))
    res = local_condition_terms(s, "(z-2i)^2")
    assert np.isfinite(res.values[0])
    assert res.values[0] > 0


# ---- Gram matrix -----------------------------------------------------------------


def test_gram_hermitian_psd(golden_space):
    gm = gram_matrix(golden_space, G)
    assert np.allclose(gm, gm.conj().T)
    eig = jacobi_eigenvalues(gm)
    assert eig == pytest.approx(np.linalg.eigvalsh(gm), abs=1e-12 * np.abs(gm).max())
    assert eig[0] >= -1e-8 * np.trace(gm).real
    assert np.diag(gm).real == pytest.approx(4 * np.array(golden.FULL_D), rel=1e-6)


def test_truncated_norm_monotone_and_bounded(golden_space):
    norms = [truncated_operator_norm(golden_space, G, n_sub=k) for k in range(1, 7)]
    assert all(b >= a - 1e-12 for a, b in zip(norms, norms[1:]))
    gm = gram_matrix(golden_space, G)
    for k, val in enumerate(norms, 1):
        assert val**2 == pytest.approx(jacobi_eigenvalues(gm[:k, :k])[-1], rel=1e-10)
    # the operator norm is dominated by the Hilbert-Schmidt norm
    assert norms[-1] ** 2 <= hs_direct(golden_space, G) * (1 + 1e-9)


def test_truncated_norm_range(small_space):
    with pytest.raises(ValueError):
        truncated_operator_norm(small_space, G, n_sub=4)


def test_non_hermitian_detected(small_space, monkeypatch):
    mom = cell_moments(small_space, G)
    bad = mom.G.copy()
    bad[0, 0, 1] += 1.0
    fake = volterra._Moments(mom.P, mom.Q, mom.D, bad, 0)
    monkeypatch.setattr(volterra, "cell_moments", lambda *a, **k: fake)
    with pytest.raises(NonHermitian):
        gram_matrix(small_space, G)


def test_analysis_record(golden_space):
    res = analyze_volterra(golden_space, G)
    assert res.hs_local == pytest.approx(float(np.sum(res.local_terms)))
    assert np.all(res.local_terms >= 0) and np.all(res.global_terms >= 0)
    assert res.verdicts["hilbert_schmidt_finite"]
    assert res.hs_ratio == pytest.approx(golden.HS_DIRECT / (golden.S_LOCAL + golden.S_GLOBAL),
                                         rel=1e-5)
    assert any("index-consistent" in w for w in res.warnings)
    assert analyze_volterra(golden_space, G, LPConfig(2.0)).warnings[1].startswith("Littlewood")
