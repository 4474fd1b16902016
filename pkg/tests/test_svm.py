import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.exceptions import ConvergenceWarning

from trollscope.errors import DataError, InsufficientDataError
from trollscope.svm import (
    DEFAULT_C_GRID, DEFAULT_GAMMA_GRID, DEFAULT_C, DEFAULT_GAMMA, NormalizationParams, RangeNormalizer,
    RbfSVC, SvmModel, TrainConfig, apply_normalization, cross_validate, dual_objective,
    fit_normalization, grid_search, predict, rbf, rbf_matrix, smo, stratified_folds, train,
)

from helpers import kkt_violations, random_svm_problem
from oracles import gram, projected_gradient_dual


def test_normalization_examples():
    params = fit_normalization([[0.0, 3.0], [10.0, 3.0]])
    out = apply_normalization([[0.0, 3.0], [10.0, 3.0], [5.0, 7.0], [12.0, -1.0]], params)
    assert out[:, 0].tolist() == [-1.0, 1.0, 0.0, 1.0]
    assert out[:, 1].tolist() == [0.0, 0.0, 0.0, 0.0]


def test_normalization_roundtrip_dict():
    params = fit_normalization(np.random.default_rng(0).normal(size=(5, 3)))
    again = NormalizationParams.from_dict(params.to_dict())
    assert np.array_equal(again.mins, params.mins) and np.array_equal(again.maxs, params.maxs)


def test_range_normalizer_estimator():
    X = np.random.default_rng(1).normal(size=(20, 4))
    Z = RangeNormalizer().fit_transform(X)
    assert Z.min() == -1.0 and Z.max() == 1.0


def test_normalization_rejects_nonfinite():
    with pytest.raises(DataError):
        fit_normalization([[1.0, np.nan]])


def test_rbf_examples():
    x = np.array([0.3, -2.0, 5.0])
    assert rbf(x, x, 0.7) == 1.0
    z = np.zeros(128)
    z[:] = 1.0
    assert rbf(np.zeros(128), z, DEFAULT_GAMMA) == pytest.approx(0.36787944117144233, abs=1e-15)
    with pytest.raises(ValueError):
        rbf([1.0, 2.0], [1.0], 1.0)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_rbf_symmetry(seed):
    rng = np.random.default_rng(seed)
    x, z = rng.normal(size=(2, 6))
    g = float(rng.uniform(0.001, 4))
    assert rbf(x, x, g) == 1.0
    assert abs(rbf(x, z, g) - rbf(z, x, g)) <= 1e-15


def test_gram_psd_and_matches_direct():
    rng = np.random.default_rng(7)
    for _ in range(20):
        X = rng.normal(size=(20, int(rng.integers(2, 8))))
        g = float(2.0 ** rng.integers(-6, 3))
        K = rbf_matrix(X, X, g)
        np.testing.assert_allclose(K, gram(X, g), atol=1e-12)
        assert np.abs(K - K.T).max() <= 1e-15
        assert np.linalg.eigvalsh(K).min() >= -1e-9


def test_two_point_case():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    model = train(X, [1, -1], TrainConfig(C=10.0, gamma=1.0))
    assert len(model.support_vectors) == 2
    assert predict(model, X[0])[0] == 1 and predict(model, X[1])[0] == -1
    assert abs(predict(model, [0.5, 0.5])[1]) < 1e-12


def test_xor_large_c():
    X = np.array([[-1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [1.0, -1.0]])
    y = np.array([1, 1, -1, -1])
    model = train(X, y, TrainConfig(C=1000.0, gamma=1.0))
    assert np.array_equal(np.where(model.decision_function(X) >= 0, 1, -1), y)
    _, oracle = projected_gradient_dual(X, y, 1000.0, 1.0)
    assert model.dual_objective() == pytest.approx(oracle, abs=1e-4)


def test_train_rejects_bad_input():
    with pytest.raises(ValueError):
        train([[0.0], [1.0]], [1, 1])
    with pytest.raises(ValueError):
        train([[0.0], [1.0]], [1, 0])
    with pytest.raises(DataError):
        train([[0.0], [np.inf]], [1, -1])


def test_predict_tie_goes_positive():
    model = SvmModel(np.zeros((1, 2)), np.array([0.0]), 0.0, 1.0, 1.0)
    assert predict(model, [3.0, 4.0]) == (1, 0.0)


def test_predict_dimension_and_fingerprint():
    model = train(np.array([[0.0, 0.0], [1.0, 1.0]]), [1, -1], fingerprint="abc")
    with pytest.raises(DataError):
        predict(model, [1.0, 2.0, 3.0])
    with pytest.raises(DataError):
        predict(model, [1.0, 2.0], fingerprint="xyz")
    assert predict(model, [1.0, 2.0], fingerprint="abc")[0] in (-1, 1)


def test_support_vector_predicts_own_label():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(-2, 0.3, (10, 3)), rng.normal(2, 0.3, (10, 3))])
    y = np.array([-1] * 10 + [1] * 10)
    model = train(X, y, TrainConfig(C=100.0, gamma=0.5))
    for sv, coef in zip(model.support_vectors, model.dual_coef):
        assert predict(model, sv)[0] == np.sign(coef)


def test_smo_matches_oracle_and_kkt():
    rng = np.random.default_rng(11)
    for _ in range(15):
        X, y, C, g = random_svm_problem(rng)
        res = smo(X, y, C, g, tol=1e-4)
        _, oracle = projected_gradient_dual(X, y, C, g)
        assert dual_objective(res.alpha, X, y, g) >= oracle - 1e-4
        assert kkt_violations(res.alpha, res.bias, X, y, C, g).max() <= 1e-3
        assert np.all(res.alpha >= 0) and np.all(res.alpha <= C)
        assert abs(res.alpha @ y) <= 1e-6


def test_smo_default_tolerance_kkt():
    rng = np.random.default_rng(12)
    for _ in range(15):
        X, y, C, g = random_svm_problem(rng)
        res = smo(X, y, C, g)
        assert res.converged
        assert kkt_violations(res.alpha, res.bias, X, y, C, g).max() <= 1e-3


def test_smo_iteration_cap_warns():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 3))
    y = np.where(rng.random(30) < 0.5, -1, 1)
    y[0], y[1] = 1, -1
    with pytest.warns(ConvergenceWarning):
        res = smo(X, y, 100.0, 1.0, max_iter=1)
    assert not res.converged


def test_persistence_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    X = rng.normal(size=(25, 4))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=25) > 0, 1, -1)
    clf = RbfSVC(C=8.0, gamma=0.5).fit(X, y, fingerprint="f" * 64)
    path = tmp_path / "model.json"
    clf.model_.save(path)
    back = SvmModel.load(path)
    Z = rng.normal(size=(40, 4))
    np.testing.assert_allclose(back.decision_function(Z), clf.decision_function(Z), rtol=0, atol=1e-12)
    assert back.fingerprint == "f" * 64
    assert back.C == 8.0 and back.gamma == 0.5


def test_load_rejects_foreign_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"format": "other"}')
    with pytest.raises(DataError):
        SvmModel.load(path)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    X, y, C, g = random_svm_problem(rng)
    perm = rng.permutation(len(y))
    a = RbfSVC(C=C, gamma=g).fit(X, y)
    b = RbfSVC(C=C, gamma=g).fit(X[perm], y[perm])
    Z = rng.uniform(-1, 1, (30, X.shape[1]))
    assert np.abs(a.decision_function(Z) - b.decision_function(Z)).max() <= 1e-10


def test_estimator_api():
    clf = RbfSVC()
    assert clf.get_params()["C"] == DEFAULT_C and clf.get_params()["gamma"] == DEFAULT_GAMMA
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    clf.set_params(C=100.0, gamma=1.0).fit(X, [-1, -1, 1, 1])
    assert clf.score(X, [-1, -1, 1, 1]) == 1.0
    assert list(clf.classes_) == [-1, 1]


def test_cross_validate_separable():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-3, 0.5, (20, 3)), rng.normal(3, 0.5, (20, 3))])
    y = np.array([-1] * 20 + [1] * 20)
    for folds in (2, 5, 10):
        assert cross_validate(X, y, TrainConfig(C=32, gamma=0.5), folds=folds).accuracy == 1.0


def test_cross_validate_random_labels():
    accs = []
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        X = rng.normal(size=(200, 5))
        y = np.where(rng.random(200) < 0.5, -1, 1)
        accs.append(cross_validate(X, y, TrainConfig(), folds=5, seed=seed).accuracy)
    for acc in accs:
        assert abs(acc - 0.5) <= 0.15
    assert abs(np.mean(accs) - 0.5) <= 0.1


def test_folds_deterministic_and_stratified():
    y = np.array([1] * 12 + [-1] * 8)
    a, b = stratified_folds(y, 4, 9), stratified_folds(y, 4, 9)
    assert all(np.array_equal(p[1], q[1]) for p, q in zip(a, b))
    for _, test in a:
        assert (y[test] == 1).sum() == 3 and (y[test] == -1).sum() == 2
    with pytest.raises(InsufficientDataError):
        stratified_folds(y, 9, 0)


def test_grid_search_rules():
    rng = np.random.default_rng(4)
    X = np.vstack([rng.normal(-3, 0.5, (10, 2)), rng.normal(3, 0.5, (10, 2))])
    y = np.array([-1] * 10 + [1] * 10)
    one = grid_search(X, y, [4.0], [0.25], folds=2)
    assert (one.C, one.gamma) == (4.0, 0.25)
    # every cell separates this data perfectly, so ties resolve to the smallest pair
    tied = grid_search(X, y, [64.0, 8.0], [0.5, 0.125], folds=2, n_jobs=2)
    assert set(tied.scores.values()) == {1.0}
    assert (tied.C, tied.gamma) == (8.0, 0.125)
    with pytest.raises(ValueError):
        grid_search(X, y, [], [1.0])


def test_default_grid_contains_defaults():
    assert DEFAULT_C in DEFAULT_C_GRID and DEFAULT_GAMMA in DEFAULT_GAMMA_GRID
    assert DEFAULT_C == 2.0**5 and DEFAULT_GAMMA == 2.0**-7
    assert math.isclose(min(DEFAULT_C_GRID), 2**-5) and max(DEFAULT_GAMMA_GRID) == 8.0


def test_no_warnings_on_easy_problem():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.1, 0.0], [0.9, 1.0]])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        train(X, [1, -1, 1, -1])
