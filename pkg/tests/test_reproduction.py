import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import seirs, sir1, sir1_ph
from matsir import (ScaledState, SingularTransitionError, UnsupportedCaseError,
                    basic_reproduction_number, check_admissible_splitting, critical_vaccination,
                    disease_free_state, embed, ngm_split, r_rank_one, spectral_radius)
from matsir.linalg import NumericalDegeneracy, is_nonsingular_m_matrix, left_null_vector
from matsir.reproduction import is_rank_one
from matsir.testing import random_model, random_rank_one_model, random_sirph


# -- spectral radius -----------------------------------------------------------

def test_spectral_radius_matches_eigensolver(rng):
    for _ in range(200):
        n = int(rng.integers(1, 8))
        M = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.5)
        assert spectral_radius(M) == pytest.approx(np.abs(np.linalg.eigvals(M)).max(),
                                                   rel=1e-10, abs=1e-12)


def test_spectral_radius_edge_cases():
    assert spectral_radius(np.zeros((3, 3))) == 0.0
    assert spectral_radius(np.array([[0, 1.0], [0, 0]])) == 0.0
    # cyclic permutation: eigenvalues on the unit circle, power iteration oscillates
    P = np.roll(np.eye(4), 1, axis=1)
    assert spectral_radius(2 * P) == pytest.approx(2.0, rel=1e-12)
    assert spectral_radius(np.array([[7.0]])) == 7.0


def test_left_null_vector():
    M = np.array([[-1.0, 1.0], [2.0, -2.0]])
    v = left_null_vector(M)
    assert np.allclose(v @ M, 0, atol=1e-14) and v.sum() == pytest.approx(1.0)
    with pytest.raises(NumericalDegeneracy):
        left_null_vector(-np.eye(2))


def test_m_matrix_check():
    assert is_nonsingular_m_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    assert not is_nonsingular_m_matrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))


# -- reproduction numbers ----------------------------------------------------------

def test_sir1_values():
    m = sir1()
    dfe = disease_free_state(m)
    ngm = ngm_split(m, dfe)
    s_dfe = (0.1 + 1 / 6) / (0.1 + 1 / 6 + 0.01)
    assert dfe.s == pytest.approx(s_dfe, rel=1e-14)
    assert ngm.r_rank_one == pytest.approx(5 / 1.5, rel=1e-14)
    assert ngm.r0 == pytest.approx(s_dfe * 5 / 1.5, rel=1e-13)
    assert basic_reproduction_number(m) == pytest.approx(3.2128514056224, rel=1e-12)
    assert r_rank_one(sir1_ph()) == pytest.approx(10 / 3, rel=1e-14)


def test_seirs_closed_form():
    # R = (g_e / (g_e + lam)) * beta / (g + lam + nu)
    R = 0.25 / 0.3 * 1.0 / 0.75
    assert r_rank_one(seirs()) == pytest.approx(R, rel=1e-14)
    m = embed(seirs())
    ngm = ngm_split(m, disease_free_state(m))
    assert ngm.r_rank_one == pytest.approx(R, rel=1e-13)
    s_dfe = 0.15 / 0.16
    assert ngm.r0 == pytest.approx(s_dfe * R, rel=1e-12)


def test_ngm_pieces():
    m = sir1()
    ngm = ngm_split(m, disease_free_state(m))
    assert np.allclose(ngm.V, [[1.5]]) and np.allclose(ngm.V_inv, [[1 / 1.5]])
    assert np.allclose(ngm.ngm, ngm.F @ ngm.V_inv)


def test_fa_uses_natural_death_rate():
    m = sir1(mu=0.2)
    fa = ngm_split(m, disease_free_state(m, "fa"), "fa")
    assert np.allclose(fa.V, [[0.5 + 0.9 + 0.2]])


def test_nu_r_enters_sm_but_not_ia():
    m = sir1(nu_r=[0.3])
    dfe = disease_free_state(m, "sm")
    sm = ngm_split(m, dfe, "sm")
    ia = ngm_split(m, dfe, "ia")
    assert sm.F[0, 0] == pytest.approx(dfe.s * 5 + dfe.r[0] * 0.3)
    assert ia.F[0, 0] == pytest.approx(dfe.s * 5)
    assert sm.r_rank_one is None and ia.r_rank_one is not None


def test_ngm_needs_disease_free_state():
    with pytest.raises(ValueError):
        ngm_split(sir1(), ScaledState(0.9, [0.05], [0.05]))


def test_singular_transition_matrix():
    m = sir1(A=[[0.0]], W=[[0.0]], nu=[0.0], lam=0.0, mu=0.0)
    with pytest.raises(SingularTransitionError):
        ngm_split(m, ScaledState(1.0, [0.0], [0.0]))


def test_rank_one_closed_form_needs_nu_r_zero():
    with pytest.raises(UnsupportedCaseError):
        r_rank_one(sir1_ph(nu_r=0.1))


def test_rank_detection(rng):
    assert is_rank_one(np.outer([1, 2], [3, 4]))
    assert not is_rank_one(np.eye(2))


def test_zero_transmission_gives_zero_r0():
    assert basic_reproduction_number(sir1(B=[[0.0]])) == 0.0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_rank_one_r0_is_s_dfe_times_R(seed):
    m = random_rank_one_model(np.random.default_rng(seed), nu_r=0.0)
    ngm = ngm_split(m, disease_free_state(m))
    dfe = disease_free_state(m)
    assert abs(ngm.r0 - dfe.s * ngm.r_rank_one) <= 1e-10 * (1 + ngm.r0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_r0_decreases_with_vaccination(seed):
    m = random_model(np.random.default_rng(seed), nu_r_zero=True)
    r0 = basic_reproduction_number(m)
    assert basic_reproduction_number(m.replace(gamma_s=m.gamma_s + 0.05)) < r0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.1, 10))
def test_r0_scales_linearly_with_transmission(seed, c):
    m = random_model(np.random.default_rng(seed), nu_r_zero=True)
    assert basic_reproduction_number(m.replace(B=c * m.B)) == pytest.approx(
        c * basic_reproduction_number(m), rel=1e-9)


# -- admissibility ----------------------------------------------------------------

def test_admissible_split():
    rep = check_admissible_splitting(sir1(), n_samples=200)
    assert rep and rep.violations == []


def test_inadmissible_split_reports_conditions():
    rep = check_admissible_splitting(sir1(B=[[-1.0]]), n_samples=200)
    assert not rep
    assert any("F >= 0" in v for v in rep.violations)
    rep = check_admissible_splitting(sir1(A=[[0.5]], W=[[-0.5]]), n_samples=50)
    assert any("-A 1" in v for v in rep.violations)


# -- critical vaccination -------------------------------------------------------------

def test_critical_vaccination_sir1():
    cv = critical_vaccination(sir1_ph())
    assert cv.needed
    assert cv.rate == pytest.approx((0.1 + 1 / 6) * (10 / 3 - 1), rel=1e-14)
    assert critical_vaccination(sir1()).rate == pytest.approx(cv.rate, rel=1e-14)
    assert basic_reproduction_number(sir1(gamma_s=[cv.rate])) == pytest.approx(1.0, abs=1e-12)


def test_no_vaccination_needed_below_threshold():
    cv = critical_vaccination(sir1_ph(b=[1.0]))
    assert cv == (0.0, False)


def test_critical_vaccination_general_model_rejected():
    m = random_model(np.random.default_rng(3), n=2, p=2)
    with pytest.raises(UnsupportedCaseError):
        critical_vaccination(m)


def test_critical_vaccination_bisection(rng):
    for _ in range(20):
        ph = random_sirph(rng, nu_r=0.0, r0_range=(1.5, 5))
        if r_rank_one(ph) <= 1:
            continue
        rate = critical_vaccination(ph).rate
        lo, hi = 0.0, 1.0
        while basic_reproduction_number(ph.replace(gamma_s=hi)) > 1:
            hi *= 2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if basic_reproduction_number(ph.replace(gamma_s=mid)) > 1:
                lo = mid
            else:
                hi = mid
        assert rate == pytest.approx(0.5 * (lo + hi), abs=1e-10)
