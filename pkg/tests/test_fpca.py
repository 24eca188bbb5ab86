import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from fmahal.basis import FunctionalDatum, build_bspline_basis, evaluate, smooth_curves
from fmahal.errors import EmptySampleError, InsufficientDataError, KOutOfRangeError
from fmahal.fpca import LabeledSample, fit_fpca, sample_mean, scores, standardized_scores
from fmahal.simulate import ScenarioConfig, base_eigenvalues, eigenfunctions, generate_dataset


def class1_sample(n, seed, noise=0.01):
    cfg = ScenarioConfig(1, (n, 1), (0, 0), 50, noise)
    data = generate_dataset(cfg, seed)
    b = build_bspline_basis((0.0, 1.0), 6, 20)
    keep = data.labels == 1
    return LabeledSample(b, smooth_curves(b, data.grid, data.values[keep]), np.ones(n, int))


def gram_of(model):
    E = model.eigenfunction_coeffs
    return E.T @ model.basis.gram @ E


def test_sample_mean_single_and_empty(basis):
    f = FunctionalDatum(basis, np.arange(20.0))
    np.testing.assert_array_equal(sample_mean([f]).coeffs, f.coeffs)
    with pytest.raises(EmptySampleError):
        sample_mean([])


def test_sample_mean_concentrates():
    # closed-form standard error of the class-1 mean at n = 75
    t = np.linspace(0.1, 0.9, 81)
    var = (eigenfunctions(t, 50) ** 2) @ base_eigenvalues(50)
    se = np.sqrt(var / 75)
    errs = []
    for seed in range(10):
        mu = evaluate(sample_mean(class1_sample(75, seed).data), t)
        errs.append(np.abs(mu - 20 * t ** 1.1 * (1 - t)))
    errs = np.array(errs)
    assert np.all(errs < 4.5 * se)
    assert np.mean(errs < 0.1) > 0.7


def test_identical_curves_give_zero_operator(basis):
    C = np.tile(np.linspace(0, 1, 20), (5, 1))
    m = fit_fpca(LabeledSample(basis, C, np.ones(5, int)), "global")
    assert m.retained_count == 0


def test_insufficient_data(basis):
    one = LabeledSample(basis, np.ones((1, 20)), [1])
    with pytest.raises(InsufficientDataError):
        fit_fpca(one, "global")
    two = LabeledSample(basis, np.eye(20)[:3], [1, 2, 2])
    with pytest.raises(InsufficientDataError):
        fit_fpca(two, "per_class")


def test_eigenvalue_recovery():
    s = class1_sample(2000, 12)
    lam = fit_fpca(s, "global").eigenvalues
    assert lam[0] == pytest.approx(1 / (0.5 * np.pi) ** 2, rel=0.10)
    assert lam[1] == pytest.approx(1 / (1.5 * np.pi) ** 2, rel=0.10)


@pytest.mark.parametrize("mode", ["global", "pooled"])
def test_orthonormality_and_variance_recovery(sample, mode):
    m = fit_fpca(sample, mode)
    np.testing.assert_allclose(gram_of(m), np.eye(m.retained_count), atol=1e-8)
    if mode == "global":
        S = m.score_matrix(sample.coeffs)
    else:
        S = np.vstack([m.score_matrix(sample.class_coeffs(g), g) for g in sample.classes])
    np.testing.assert_allclose(S.var(axis=0), m.eigenvalues, rtol=1e-8)


def test_per_class_models(sample):
    models = fit_fpca(sample, "per_class")
    assert set(models) == {1, 2}
    for g, m in models.items():
        np.testing.assert_allclose(gram_of(m), np.eye(m.retained_count), atol=1e-8)
        S = m.score_matrix(sample.class_coeffs(g), g)
        np.testing.assert_allclose(S.var(axis=0), m.eigenvalues, rtol=1e-8)


def test_sum_of_eigenvalues_is_trace(sample):
    m = fit_fpca(sample, "global")
    Cc = sample.coeffs - sample.coeffs.mean(axis=0)
    S = Cc.T @ Cc / len(sample)
    trace = np.trace(S @ sample.basis.gram)
    assert m.eigenvalues.sum() == pytest.approx(trace, rel=1e-8)


def test_pooled_equals_global_for_one_class(basis):
    rng = np.random.default_rng(5)
    s = LabeledSample(basis, rng.standard_normal((30, 20)), np.ones(30, int))
    g, p = fit_fpca(s, "global"), fit_fpca(s, "pooled")
    np.testing.assert_array_equal(g.eigenvalues, p.eigenvalues)
    np.testing.assert_array_equal(g.eigenfunction_coeffs, p.eigenfunction_coeffs)


def test_sign_rule(sample):
    E = fit_fpca(sample, "global").eigenfunction_coeffs
    pivot = np.argmax(np.abs(E), axis=0)
    assert np.all(E[pivot, np.arange(E.shape[1])] > 0)


def test_scores_of_mean_are_zero(sample):
    m = fit_fpca(sample, "pooled")
    np.testing.assert_allclose(scores(m, m.mean(2), 2, 5), 0.0, atol=1e-12)
    np.testing.assert_allclose(standardized_scores(m, m.mean(1), 1, 5), 0.0, atol=1e-12)


def test_standardized_score_of_first_eigendirection(sample):
    m = fit_fpca(sample, "global")
    f = m.mean() + np.sqrt(m.eigenvalues[0]) * m.eigenfunction(1)
    w = standardized_scores(m, f, K=4)
    np.testing.assert_allclose(w, [1, 0, 0, 0], atol=1e-8)


def test_scores_match_quadrature(sample):
    m = fit_fpca(sample, "global")
    rng = np.random.default_rng(8)
    f = FunctionalDatum(sample.basis, rng.standard_normal(20))
    t = np.linspace(0, 1, 10_001)
    diff = evaluate(f - m.mean(), t)
    oracle = [simpson(diff * evaluate(m.eigenfunction(k), t), x=t) for k in range(1, 6)]
    np.testing.assert_allclose(scores(m, f, K=5), oracle, atol=1e-6)


def test_k_out_of_range(sample):
    m = fit_fpca(sample, "global")
    with pytest.raises(KOutOfRangeError):
        scores(m, m.mean(), K=m.retained_count + 1)
    with pytest.raises(KOutOfRangeError):
        scores(m, m.mean(), K=0)


def test_population_standardization():
    s = class1_sample(2000, 21)
    m = fit_fpca(s, "global")
    W = m.standardized_score_matrix(s.coeffs, K=5)
    assert np.all(np.abs(W.mean(axis=0)) < 0.1)
    assert np.all((W.var(axis=0) > 0.8) & (W.var(axis=0) < 1.2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 12), st.integers(3, 12))
def test_properties_hold_for_random_samples(seed, n1, n2):
    rng = np.random.default_rng(seed)
    basis = build_bspline_basis((0.0, 1.0), 4, 8)
    C = rng.standard_normal((n1 + n2, 8)) * np.linspace(2, 0.1, 8)
    s = LabeledSample(basis, C, np.r_[np.ones(n1, int), np.full(n2, 2)])
    for mode in ("global", "pooled"):
        m = fit_fpca(s, mode)
        assert m.retained_count <= min(8, n1 + n2 - (1 if mode == "global" else 2))
        np.testing.assert_allclose(gram_of(m), np.eye(m.retained_count), atol=1e-8)
        assert np.all(np.diff(m.eigenvalues) <= 1e-12 * m.eigenvalues[0])
