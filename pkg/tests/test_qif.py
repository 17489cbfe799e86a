import numpy as np
import pytest

from qifsel import (
    Correlation,
    LongitudinalDataset,
    QifEngine,
    evaluate_qif,
    expand_design,
    extended_score,
    qif_derivatives,
    qif_objective,
    subset_subjects,
)
from conftest import (
    linear_response,
    oracle_extended_score,
    oracle_qif,
    toy_dataset,
)

STRUCTURES = list(Correlation)


def test_zero_noise_phi_bar_vanishes(small_data):
    rng = np.random.default_rng(0)
    design = expand_design(small_data)
    beta = rng.normal(size=design.d)
    data = linear_response(small_data, beta, noise=0.0)
    phi, _, _ = extended_score(beta, data, expand_design(data),
                               Correlation.EXCHANGEABLE)
    np.testing.assert_array_equal(phi, np.zeros_like(phi))


def test_independence_score_is_pooled_least_squares_score(small_data):
    rng = np.random.default_rng(1)
    design = expand_design(small_data)
    beta = rng.normal(size=design.d)
    phi, _, _ = extended_score(beta, small_data, design, Correlation.INDEPENDENCE)
    x = design.w.reshape(-1, design.d)
    resid = small_data.response.ravel() - x @ beta
    expected = x.T @ resid / small_data.n_subjects
    np.testing.assert_allclose(phi, expected, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("structure", STRUCTURES)
def test_engine_matches_explicit_restriction_oracle(structure, unbalanced_data):
    rng = np.random.default_rng(2)
    design = expand_design(unbalanced_data)
    beta = rng.normal(size=design.d)
    phi, omega, jac = extended_score(beta, unbalanced_data, design, structure)
    ophi, oomega, ojac, _ = oracle_extended_score(beta, unbalanced_data, structure)
    np.testing.assert_allclose(phi, ophi, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(omega, oomega, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(jac, ojac, rtol=1e-10, atol=1e-12)


def test_full_mask_equals_balanced_path(small_data):
    rng = np.random.default_rng(3)
    design = expand_design(small_data)
    beta = rng.normal(size=design.d)
    full = LongitudinalDataset(
        response=small_data.response, env=small_data.env, gen=small_data.gen,
        observed=np.ones_like(small_data.observed))
    for structure in STRUCTURES:
        a = extended_score(beta, small_data, design, structure)
        b = extended_score(beta, full, expand_design(full), structure)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


def test_objective_zero_score_is_zero():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(6, 6))
    omega = a @ a.T
    assert qif_objective(np.zeros(6), omega) == 0.0


def test_objective_rank_zero_rejected():
    with pytest.raises(ValueError):
        qif_objective(np.zeros(4), np.zeros((4, 4)))


def test_single_subject_objective_is_one():
    data = toy_dataset(n=1, k=3, p=2, q=1, seed=5)
    design = expand_design(data)
    engine = QifEngine(data, design, Correlation.EXCHANGEABLE)
    q = engine.objective(np.zeros(design.d))
    assert q == pytest.approx(1.0, abs=1e-12)


def test_objective_zero_at_pooled_ols_under_independence():
    data = toy_dataset(n=50, k=3, p=2, q=1, seed=6)
    design = expand_design(data)
    x = design.w.reshape(-1, design.d)
    beta_ols, *_ = np.linalg.lstsq(x, data.response.ravel(), rcond=None)
    engine = QifEngine(data, design, Correlation.INDEPENDENCE)
    assert engine.objective(beta_ols) < 1e-10


@pytest.mark.parametrize("structure", STRUCTURES)
def test_objective_bounded_by_one(structure, small_data):
    rng = np.random.default_rng(7)
    design = expand_design(small_data)
    engine = QifEngine(small_data, design, structure)
    for _ in range(5):
        q = engine.objective(rng.normal(scale=3.0, size=design.d))
        assert 0.0 <= q <= 1.0 + 1e-12


def test_engine_objective_matches_pinv_oracle(unbalanced_data):
    rng = np.random.default_rng(8)
    design = expand_design(unbalanced_data)
    engine = QifEngine(unbalanced_data, design, Correlation.AR1)
    for _ in range(3):
        beta = rng.normal(size=design.d)
        assert engine.objective(beta) == pytest.approx(
            oracle_qif(beta, unbalanced_data, Correlation.AR1), rel=1e-8)


def test_jacobian_constant_in_beta(small_data):
    design = expand_design(small_data)
    rng = np.random.default_rng(9)
    _, _, jac_a = extended_score(rng.normal(size=design.d), small_data, design,
                                 Correlation.EXCHANGEABLE)
    _, _, jac_b = extended_score(rng.normal(size=design.d), small_data, design,
                                 Correlation.EXCHANGEABLE)
    np.testing.assert_array_equal(jac_a, jac_b)


def test_pinv_consistency(small_data):
    # phi_bar lies in the column space of omega_bar by construction.
    rng = np.random.default_rng(10)
    design = expand_design(small_data)
    beta = rng.normal(size=design.d)
    phi, omega, _ = extended_score(beta, small_data, design, Correlation.EXCHANGEABLE)
    recon = omega @ np.linalg.pinv(omega, rcond=1e-8) @ phi
    np.testing.assert_allclose(recon, phi, rtol=1e-8, atol=1e-10)


def test_objective_invariant_to_subject_permutation(small_data):
    rng = np.random.default_rng(11)
    design = expand_design(small_data)
    beta = rng.normal(size=design.d)
    perm = rng.permutation(small_data.n_subjects)
    shuffled = subset_subjects(small_data, perm)
    a = QifEngine(small_data, design, Correlation.EXCHANGEABLE).objective(beta)
    b = QifEngine(shuffled, expand_design(shuffled),
                  Correlation.EXCHANGEABLE).objective(beta)
    assert a == pytest.approx(b, rel=1e-10)


def frozen_fd_gradient(beta, data, design, structure, h=1e-6):
    """Finite difference of beta -> phibar' pinv(omega0) phibar, omega frozen."""
    _, omega, _ = extended_score(beta, data, design, structure)
    pinv = np.linalg.pinv(omega, rcond=1e-8)

    def frozen_q(b):
        eng = QifEngine(data, design, structure)
        phi = eng.phi_bar(b)
        return float(phi @ pinv @ phi)

    grad = np.zeros(design.d)
    for j in range(design.d):
        e = np.zeros(design.d)
        e[j] = h
        grad[j] = (frozen_q(beta + e) - frozen_q(beta - e)) / (2 * h)
    return grad


def test_p_matches_frozen_finite_difference():
    data = toy_dataset(n=40, k=3, p=2, q=1, seed=12)
    design = expand_design(data)
    rng = np.random.default_rng(13)
    beta = rng.normal(size=design.d)
    ev = evaluate_qif(beta, data, design, Correlation.EXCHANGEABLE)
    fd = frozen_fd_gradient(beta, data, design, Correlation.EXCHANGEABLE)
    np.testing.assert_allclose(ev.p_vec, fd, rtol=1e-5, atol=1e-8)


def test_v_matches_finite_difference_of_frozen_gradient():
    data = toy_dataset(n=40, k=3, p=2, q=1, seed=14)
    design = expand_design(data)
    rng = np.random.default_rng(15)
    beta = rng.normal(size=design.d)
    ev = evaluate_qif(beta, data, design, Correlation.EXCHANGEABLE)
    _, omega, jac = extended_score(beta, data, design, Correlation.EXCHANGEABLE)
    pinv = np.linalg.pinv(omega, rcond=1e-8)
    eng = QifEngine(data, design, Correlation.EXCHANGEABLE)

    def frozen_grad(b):
        return 2.0 * jac.T @ pinv @ eng.phi_bar(b)

    h = 1e-6
    fd = np.zeros((design.d, design.d))
    for j in range(design.d):
        e = np.zeros(design.d)
        e[j] = h
        fd[:, j] = (frozen_grad(beta + e) - frozen_grad(beta - e)) / (2 * h)
    np.testing.assert_allclose(ev.v_mat, fd, rtol=1e-4, atol=1e-6)


def test_p_zero_when_phi_zero(small_data):
    rng = np.random.default_rng(16)
    design = expand_design(small_data)
    beta = rng.normal(size=design.d)
    data = linear_response(small_data, beta, noise=0.0)
    ndesign = expand_design(data)
    phi, omega, jac = extended_score(beta, data, ndesign, Correlation.EXCHANGEABLE)
    p_vec, _ = qif_derivatives(phi, omega, jac)
    np.testing.assert_array_equal(p_vec, np.zeros(design.d))


def gram_route_case():
    # m*d = 30 > n = 15 forces the subject-space decomposition in the engine.
    data = toy_dataset(n=15, k=3, p=4, q=2, seed=17)
    design = expand_design(data)
    assert 2 * design.d > data.n_subjects
    return data, design


def direct_route_case():
    # m*d = 12 <= n = 40 keeps the engine on the moment-space decomposition.
    data = toy_dataset(n=40, k=3, p=2, q=1, seed=18)
    design = expand_design(data)
    assert 2 * design.d <= data.n_subjects
    return data, design


@pytest.mark.parametrize("case", [gram_route_case, direct_route_case])
def test_engine_routes_agree_with_materialized_omega(case):
    data, design = case()
    rng = np.random.default_rng(19)
    beta = rng.normal(size=design.d)
    engine = QifEngine(data, design, Correlation.EXCHANGEABLE)
    q_eng, p_eng, v_eng = engine.derivatives(beta)
    ev = evaluate_qif(beta, data, design, Correlation.EXCHANGEABLE)
    assert q_eng == pytest.approx(ev.q_value, rel=1e-10)
    np.testing.assert_allclose(p_eng, ev.p_vec, rtol=1e-9, atol=1e-11)
    np.testing.assert_allclose(v_eng, ev.v_mat, rtol=1e-9, atol=1e-11)


def test_v_symmetric_psd(small_data):
    rng = np.random.default_rng(20)
    design = expand_design(small_data)
    engine = QifEngine(small_data, design, Correlation.AR1)
    _, _, v = engine.derivatives(rng.normal(size=design.d))
    np.testing.assert_allclose(v, v.T, atol=1e-10)
    assert np.all(np.linalg.eigvalsh(v) > -1e-10)


def test_partition_invariance(small_data):
    # Summation over subjects is commutative: splitting the dataset and
    # recombining the per-subject rows reproduces phi_bar and omega_bar.
    rng = np.random.default_rng(21)
    design = expand_design(small_data)
    beta = rng.normal(size=design.d)
    engine = QifEngine(small_data, design, Correlation.EXCHANGEABLE)
    rows = engine.score_rows(beta)
    halves = [subset_subjects(small_data, range(0, 10)),
              subset_subjects(small_data, range(10, 20))]
    parts = [QifEngine(h, expand_design(h), Correlation.EXCHANGEABLE)
             .score_rows(beta) for h in halves]
    np.testing.assert_allclose(np.vstack(parts), rows, rtol=1e-10, atol=1e-12)
