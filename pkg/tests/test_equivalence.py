import math

import numpy as np
import pytest

from edpqm.equivalence import (
    KappaNonPositive,
    LinearEModel,
    MultiplicationOperator,
    apply_h_tilde,
    apply_h_tilde_expanded,
    apply_momentum_qm1,
    check_kappa_positive,
    cross_check_toy,
    default_grid,
    eigen_residual,
    gram_qm2,
    modified_product_qm1,
    momentum_correction,
    qm1_wavefunction,
    qm2_energy,
    qm2_lambda,
    qm2_wavefunction,
    toy_v_hat,
    verify_equivalence,
)
from edpqm.spectra import solve_linear

MODEL = LinearEModel.from_toy(-0.1)


def test_from_toy_uses_half_gamma():
    assert MODEL.a_coeff == 0.5 and MODEL.k_coeff == pytest.approx(0.05)
    with pytest.raises(ValueError):
        LinearEModel.from_toy(0.1)
    with pytest.raises(ValueError):
        LinearEModel(0.5, 0.0)


def test_cross_check_matches_toy():
    rep = cross_check_toy(-0.1, 4)
    assert rep.ok
    for lv in rep.levels:
        assert lv.qm2 == pytest.approx(solve_linear(-0.1, lv.n).energy, abs=1e-10)


def test_literal_coupling_mismatches():
    rep = cross_check_toy(-0.1, 0, literal=True)
    assert rep.levels[0].diff > 1e-2
    assert not rep.ok


def test_lambda_identity():
    for n in range(5):
        assert qm2_lambda(MODEL, n) == pytest.approx(2 * qm2_energy(MODEL, n) / (2 * n + 1), rel=1e-13)


def test_continuum_guard():
    m = LinearEModel(0.5, 1.0)
    assert qm2_energy(m, 0) < m.continuum_threshold
    for n in range(50):
        assert qm2_energy(m, n) < m.continuum_threshold


@pytest.mark.parametrize("n", range(5))
def test_eigen_residual_small(n):
    assert eigen_residual(MODEL, n, dx=1e-3) < 1e-6


def test_residual_converges_fourth_order():
    r = [eigen_residual(MODEL, 1, dx) for dx in (0.08, 0.04, 0.02)]
    for a, b in zip(r, r[1:]):
        assert 12 < a / b < 20


def test_gram_and_products():
    G = gram_qm2(MODEL, 5)
    np.testing.assert_allclose(G, np.eye(6), atol=1e-7)
    for n in range(6):
        for k in range(6):
            assert modified_product_qm1(MODEL, n, k) == pytest.approx(G[n, k], abs=1e-7)


def test_operator_identities():
    x = np.linspace(-30, 30, 2001)
    np.testing.assert_allclose(MODEL.eta(x) * MODEL.xi(x), 1.0, atol=1e-12)
    np.testing.assert_allclose(MODEL.xi(x) * MODEL.kappa(x) * MODEL.xi(x), 1.0, atol=1e-12)
    eta = MultiplicationOperator(MODEL.v, "eta")
    np.testing.assert_allclose(eta(x), MODEL.eta(x), rtol=1e-15)


def test_multiplication_operator_rejects_bad_metric():
    with pytest.raises(KappaNonPositive):
        MultiplicationOperator(toy_v_hat(0.1), "xi")(np.array([0.0, 5.0]))


def test_h_tilde_forms_agree():
    x = default_grid(MODEL, 2, 2e-3)
    chi = qm2_wavefunction(MODEL, 2, x)
    a = apply_h_tilde(MODEL, chi).values
    b = apply_h_tilde_expanded(MODEL, chi).values
    assert np.max(np.abs(a - b)) < 1e-8


def test_h_tilde_accepts_callables():
    x = default_grid(MODEL, 0, 2e-3)
    chi = qm2_wavefunction(MODEL, 0, x)
    a = apply_h_tilde(MODEL, chi).values
    b = apply_h_tilde((MODEL.v0, MODEL.v), chi).values
    np.testing.assert_array_equal(a, b)


def test_momentum_correction_form():
    x = default_grid(MODEL, 0, 1e-3)
    psi = qm1_wavefunction(MODEL, 0, x)
    d1 = np.gradient(psi.values, psi.dx, edge_order=2)
    P = apply_momentum_qm1(MODEL, psi).values
    expect = -1j * d1 + 1j * momentum_correction(MODEL, x) * psi.values
    inner = np.abs(x) < 10
    assert np.max(np.abs(P[inner] - expect[inner])) < 1e-5
    printed = momentum_correction(MODEL, x, printed=True)
    assert np.max(np.abs(printed - momentum_correction(MODEL, x))) > 1e-3


def test_kappa_failure_location():
    d = check_kappa_positive(toy_v_hat(0.1))
    assert not d.passed
    edge = math.sqrt(2 / 0.1)
    assert sorted(d.boundaries) == pytest.approx([-edge, edge], abs=1e-9)
    v = toy_v_hat(0.1)
    assert 1 - v(edge - 1e-6) > 0 and 1 - v(edge + 1e-6) < 0
    assert check_kappa_positive(toy_v_hat(-0.1)).passed
    assert "FAIL" in str(d)


def test_small_k_limit():
    rows = verify_equivalence(LinearEModel(0.5, 1e-9), 2, dx=2e-3)
    for r in rows:
        assert r.qm2_energy == pytest.approx(r.n + 0.5, abs=1e-8)


def test_verify_equivalence_rows():
    rows = verify_equivalence(MODEL, 4)
    for r in rows:
        assert r.toy_energy == pytest.approx(r.qm2_energy, abs=1e-10)
        assert r.residual < 1e-6
        assert r.gram_deviation < 1e-7 and r.product_deviation < 1e-7
