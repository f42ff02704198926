import numpy as np
import pytest

from logeuc.classify import (SvmModel, accuracy, confusion_matrix, cross_validate_sigma, load_model,
                             predict, save_model, stratified_folds, stratified_split, train_kernel,
                             train_linear)
from logeuc.errors import (DimensionMismatch, NonFinite, NotPsd, ParseError, SingleClass,
                           TooFewSamplesPerClass)


def blobs(seed=0, n=30, dim=4, classes=3, spread=0.6):
    rng = np.random.default_rng(seed)
    centers = rng.normal(0, 2.0, size=(classes, dim))
    y = np.repeat(np.arange(classes), n)
    x = centers[y] + spread * rng.standard_normal((y.size, dim))
    return x, y


def primal_objective(w, xa, ys, c):
    return 0.5 * w @ w + c * np.maximum(0.0, 1.0 - ys * (xa @ w)).sum()


def subgradient_svm(xa, ys, c, steps=20_000):
    w = np.zeros(xa.shape[1])
    best = (np.inf, w)
    for t in range(1, steps + 1):
        margin = ys * (xa @ w)
        grad = w - c * ((margin < 1) * ys) @ xa
        w = w - grad / (t + 100.0)
        obj = primal_objective(w, xa, ys, c)
        if obj < best[0]:
            best = (obj, w.copy())
    return best


def test_dcd_matches_subgradient_reference_and_closes_duality_gap():
    x, y = blobs(1, n=20, classes=2, spread=1.5)
    c = 0.5
    model = train_linear(x, y, c_param=c, tol=1e-6, epochs=5000)
    xa = np.hstack([x, np.ones((x.shape[0], 1))])
    for k in range(2):
        ys = np.where(y == k, 1.0, -1.0)
        w = np.append(model.weights[k], model.biases[k])
        p_dcd = primal_objective(w, xa, ys, c)
        d_dcd = model.diagnostics[k].objectives[-1]
        assert p_dcd - d_dcd <= 1e-4 * max(1.0, abs(p_dcd))
        p_ref, _ = subgradient_svm(xa, ys, c)
        assert p_dcd <= p_ref + 1e-6 * abs(p_ref)
        assert p_ref - p_dcd < 0.05 * abs(p_dcd)


def test_dual_objective_monotone_and_box_constraints():
    x, y = blobs(2, spread=1.2)
    c = 3.0
    for model in (train_linear(x, y, c_param=c),
                  train_kernel(x @ x.T, y, c_param=c)):
        for diag in model.diagnostics:
            obj = np.array(diag.objectives)
            assert np.all(np.diff(obj) >= -1e-9 * np.maximum(1.0, np.abs(obj[:-1])))
        alphas = (np.array([d.alphas for d in model.diagnostics]) if model.mode == "primal"
                  else model.alphas)
        assert np.all(alphas >= 0.0) and np.all(alphas <= c)


def test_primal_weight_consistency():
    x, y = blobs(3, spread=0.3)
    model = train_linear(x, y)
    assert all(d.weight_drift < 1e-9 for d in model.diagnostics)
    assert all(d.converged for d in model.diagnostics)


def test_linear_and_kernel_modes_agree_on_linear_gram():
    x, y = blobs(4, n=40, spread=1.0)
    lin = train_linear(x, y, c_param=10.0, tol=1e-5, epochs=5000)
    ker = train_kernel(x @ x.T, y, c_param=10.0, tol=1e-5, epochs=5000)
    z, _ = blobs(5, n=40, spread=1.0)
    disagree = np.mean(lin.predict(z) != ker.predict(z @ x.T))
    assert disagree <= 0.01
    assert np.allclose(lin.decision_function(z), ker.decision_function(z @ x.T), atol=1e-2)


def test_separable_data_is_learned():
    x, y = blobs(6, spread=0.2)
    assert accuracy(train_linear(x, y).predict(x), y) == 1.0


def test_training_errors():
    x, y = blobs(0)
    with pytest.raises(SingleClass):
        train_linear(x, np.zeros(x.shape[0], dtype=int))
    bad = x.copy()
    bad[0, 0] = np.nan
    with pytest.raises(NonFinite):
        train_linear(bad, y)
    with pytest.raises(DimensionMismatch):
        train_linear(x, y[:-1])
    with pytest.raises(NotPsd):
        train_kernel(-np.eye(x.shape[0]), y)
    with pytest.raises(NotPsd):
        k = x @ x.T
        k[0, 1] += 1.0
        train_kernel(k, y)
    with pytest.raises(ValueError):
        train_linear(x, np.where(y == 2, 3, y))


def test_predict_dimension_and_ties():
    model = SvmModel("primal", 3, np.zeros(3), 1.0, weights=np.zeros((3, 2)))
    assert model.predict(np.ones((4, 2))).tolist() == [0, 0, 0, 0]
    cls, scores = predict(model, np.ones(2))
    assert cls == 0 and scores.shape == (3,)
    with pytest.raises(DimensionMismatch):
        model.predict(np.ones((1, 3)))


def test_model_round_trip(tmp_path):
    x, y = blobs(7)
    for model, inputs in ((train_linear(x, y, metadata={"a": 1}), x),
                          (train_kernel(x @ x.T, y), x @ x.T)):
        path = tmp_path / f"{model.mode}.json"
        save_model(model, path)
        back = load_model(path)
        assert back.mode == model.mode and back.metadata == model.metadata
        assert np.array_equal(back.decision_function(inputs), model.decision_function(inputs))
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ParseError):
        load_model(tmp_path / "bad.json")
    with pytest.raises(ParseError):
        SvmModel.from_dict({"format": "other"})


def test_dual_model_support_vectors():
    x, y = blobs(8, spread=0.3)
    model = train_kernel(x @ x.T, y)
    sv = model.support_indices
    assert 0 < sv.size < x.shape[0]
    assert model.dual_coef().shape == (3, x.shape[0])


def test_accuracy_and_confusion():
    assert accuracy([0, 1, 1], [0, 1, 0]) == pytest.approx(2 / 3)
    cm = confusion_matrix([0, 1, 1, 2], [0, 1, 0, 2], 3)
    assert cm.tolist() == [[1, 1, 0], [0, 1, 0], [0, 0, 1]]


def test_stratified_split_and_folds():
    y = np.repeat([0, 1, 2], [10, 6, 4])
    tr, te = stratified_split(y, 0.5, seed=3)
    assert np.intersect1d(tr, te).size == 0 and tr.size + te.size == y.size
    assert np.bincount(y[te]).tolist() == [5, 3, 2]
    assert np.array_equal(tr, np.sort(tr))
    tr2, te2 = stratified_split(y, 0.5, seed=3)
    assert np.array_equal(te, te2)
    folds = stratified_folds(y, 4, seed=1)
    for f in range(4):
        counts = np.bincount(y[folds == f], minlength=3)
        assert np.all(np.abs(counts - np.array([10, 6, 4]) / 4) <= 1)
    with pytest.raises(TooFewSamplesPerClass):
        stratified_folds(y[:3], 5)


def test_cross_validate_sigma(synthetic_descriptors):
    d = synthetic_descriptors
    sel = cross_validate_sigma(d.descriptors, d.labels, [4.0, 0.5, 1.0], folds=3)
    assert sel.sigma_grid == [0.5, 1.0, 4.0]
    assert sel.fold_accuracy.shape == (3, 3)
    means = sel.mean_accuracy
    best = sel.sigma_grid.index(sel.best_sigma)
    assert means[best] == means.max()
    assert np.all(means[:best] < means[best])
