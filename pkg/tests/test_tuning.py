import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmahal.classifiers import prepare, train
from fmahal.errors import FoldDegenerateError, InvalidConfigurationError
from fmahal.fpca import LabeledSample
from fmahal.simulate import ScenarioConfig, generate_dataset
from fmahal.tuning import LEAVE_ONE_OUT, TuningGrid, _fold_splits, cross_validate, stratified_folds


def test_grid_validation():
    with pytest.raises(InvalidConfigurationError):
        TuningGrid(max_components=0)
    with pytest.raises(InvalidConfigurationError):
        TuningGrid(neighbor_values=(3, 1))
    with pytest.raises(InvalidConfigurationError):
        TuningGrid(folds=1)
    assert TuningGrid(folds=LEAVE_ONE_OUT).folds == "loo"


def test_single_grid_point(sample):
    grid = TuningGrid(max_components=1, neighbor_values=(3,), folds=5)
    cv = cross_validate(sample, "knn", "FM_C", grid, seed=1)
    assert (cv.truncation, cv.k_neighbors) == (1, 3)
    assert 0.0 <= cv.cv_accuracy <= 1.0
    assert len(cv.table) == 1


def test_separated_classes_pick_smallest_grid_point(basis):
    rng = np.random.default_rng(0)
    C = np.vstack([rng.normal(0, 0.1, (15, 20)), rng.normal(10, 0.1, (15, 20))])
    s = LabeledSample(basis, C, np.repeat([1, 2], 15))
    cv = cross_validate(s, "knn", "L2", TuningGrid(), seed=2)
    assert (cv.truncation, cv.k_neighbors, cv.cv_accuracy) == (None, 1, 1.0)
    cv = cross_validate(s, "centroid", "FM_C", TuningGrid(max_components=6), seed=2)
    assert (cv.truncation, cv.cv_accuracy) == (1, 1.0)


def test_cv_accuracy_matches_independent_recomputation(sample):
    grid = TuningGrid(max_components=6, neighbor_values=(1, 2, 5), folds=4)
    for method, kind in (("knn", "FM_D"), ("knn", "Linf"), ("centroid", "FPC_C"), ("fqbcr", None)):
        cv = cross_validate(sample, method, kind, grid, seed=11)
        splits = _fold_splits(sample, grid, np.random.default_rng(11))
        accs = []
        for tr, te in splits:
            clf = train(sample.subset(tr), method, kind, cv.truncation, cv.k_neighbors)
            accs.append(np.mean(clf.predict(sample.coeffs[te]) == sample.labels[te]))
        assert cv.cv_accuracy == pytest.approx(np.mean(accs), abs=1e-12)
        np.testing.assert_allclose(cv.fold_accuracies, accs, atol=1e-12)
        best = max(acc for _, _, acc in cv.table)
        assert cv.cv_accuracy == best


def test_tie_rule_prefers_small_hyperparameters(sample):
    cv = cross_validate(sample, "knn", "FM_C", TuningGrid(max_components=8), seed=3)
    best = cv.cv_accuracy
    ties = [(K, k) for K, k, acc in cv.table if acc == best]
    assert (cv.truncation, cv.k_neighbors) == min(ties)


def test_no_leakage(sample):
    grid = TuningGrid(folds=5)
    splits = _fold_splits(sample, grid, np.random.default_rng(4))
    tr, te = splits[0]
    altered = np.array(sample.coeffs)
    altered[te] += 100.0
    s2 = LabeledSample(sample.basis, altered, sample.labels)
    for method, kind in (("knn", "FM_C"), ("fqbcr", None), ("lbcr_coef", None)):
        a, b = prepare(sample.subset(tr), method, kind), prepare(s2.subset(tr), method, kind)
        q = sample.coeffs[:10]
        np.testing.assert_array_equal(a.criteria(q), b.criteria(q))


def test_stratified_fold_sizes():
    labels = np.repeat([1, 2, 3], [23, 40, 7])
    fold = stratified_folds(labels, 10, np.random.default_rng(0))
    for g, n in ((1, 23), (2, 40), (3, 7)):
        per_fold = np.bincount(fold[labels == g], minlength=10)
        assert per_fold.max() - per_fold.min() <= 1
        assert per_fold.sum() == n


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=1, max_size=4), st.integers(2, 12), st.integers(0, 1000))
def test_stratification_property(sizes, n_folds, seed):
    labels = np.repeat(np.arange(1, len(sizes) + 1), sizes)
    fold = stratified_folds(labels, n_folds, np.random.default_rng(seed))
    for g, n in enumerate(sizes, start=1):
        per_fold = np.bincount(fold[labels == g], minlength=n_folds)
        assert per_fold.max() - per_fold.min() <= 1
        expected = n / n_folds
        assert np.all(np.abs(per_fold - expected) < 1)


def test_fold_degenerate(basis):
    rng = np.random.default_rng(1)
    s = LabeledSample(basis, rng.standard_normal((11, 20)), [1] * 10 + [2])
    with pytest.raises(FoldDegenerateError):
        cross_validate(s, "centroid", "L2", TuningGrid(folds=5), seed=0)


def test_leave_one_out(basis):
    rng = np.random.default_rng(2)
    s = LabeledSample(basis, rng.standard_normal((12, 20)) + np.repeat([[0], [3]], 6, axis=0), np.repeat([1, 2], 6))
    cv = cross_validate(s, "knn", "L2", TuningGrid(folds=LEAVE_ONE_OUT, neighbor_values=(1, 3)), seed=0)
    assert cv.fold_accuracies.size == 12


def test_truncation_grid_clamped_to_fold_rank(basis):
    rng = np.random.default_rng(3)
    s = LabeledSample(basis, rng.standard_normal((10, 20)), np.repeat([1, 2], 5))
    cv = cross_validate(s, "fqbcr", None, TuningGrid(max_components=15, folds=5), seed=0)
    assert max(K for K, _, _ in cv.table) == 3  # 4 training curves per class, minus 1


def test_cv_is_deterministic(sample):
    a = cross_validate(sample, "knn", "FM_C", TuningGrid(max_components=5), seed=8)
    b = cross_validate(sample, "knn", "FM_C", TuningGrid(max_components=5), seed=8)
    assert a.table == b.table


@pytest.mark.slow
def test_chosen_truncation_for_knn_fm():
    cfg = ScenarioConfig.standard(1)
    grid = TuningGrid()
    chosen = []
    for r in range(100):
        data = generate_dataset(cfg, np.random.default_rng([7, r]))
        s = scenario_sample_from(data)
        chosen.append(cross_validate(s.subset(data.train_idx), "knn", "FM_C", grid, seed=r).truncation)
    assert 6 <= np.mean(chosen) <= 9


def scenario_sample_from(data):
    from fmahal.basis import build_bspline_basis, smooth_curves

    b = build_bspline_basis((0.0, 1.0), 6, 20)
    return LabeledSample(b, smooth_curves(b, data.grid, data.values), data.labels, 2)
