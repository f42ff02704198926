"""One-vs-rest L1-loss SVMs trained by dual coordinate descent.

Both solvers augment inputs with a constant bias feature (``x -> [x, 1]``,
equivalently ``K -> K + 1``), so the primal and kernel solvers optimize the
same dual

    max_a  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K~_ij,   0 <= a_i <= C.

The primal solver keeps ``w = sum_i a_i y_i x~_i`` up to date for O(nu)
coordinate steps; the kernel solver keeps ``Q a`` instead and never touches
features.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .errors import (DimensionMismatch, NonFinite, NotPsd, ParseError, SingleClass,
                     TooFewSamplesPerClass)

DEFAULT_C = 10.0
DEFAULT_EPOCHS = 1000
DEFAULT_TOL = 1e-3
MODEL_FORMAT = "logeuc-svm"
MODEL_VERSION = 1
# slack on the per-epoch dual-objective monotonicity assertion
_MONOTONE_RTOL = 1e-9


@dataclass
class BinaryDiagnostics:
    objectives: list
    epochs: int
    max_violation: float
    converged: bool
    weight_drift: float = 0.0  # primal only: |w - sum a y x| / |w|
    alphas: np.ndarray | None = None


@dataclass
class SvmModel:
    """``mode`` is ``"primal"`` (``weights`` C x nu) or ``"dual"``
    (``alphas`` C x n over the training Gram, ``labels`` of the training
    samples)."""

    mode: str
    classes: int
    biases: np.ndarray
    c_param: float
    weights: np.ndarray | None = None
    alphas: np.ndarray | None = None
    train_labels: np.ndarray | None = None
    diagnostics: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1] if self.mode == "primal" else self.alphas.shape[1]

    @property
    def support_indices(self) -> np.ndarray:
        if self.mode != "dual":
            raise AttributeError("support indices exist only for dual models")
        return np.flatnonzero(np.any(self.alphas > 0, axis=0))

    def dual_coef(self) -> np.ndarray:
        signs = np.where(self.train_labels[None, :] == np.arange(self.classes)[:, None], 1.0, -1.0)
        return self.alphas * signs

    def decision_function(self, inputs) -> np.ndarray:
        """Per-class scores for feature rows (primal) or kernel rows (dual)."""
        z = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        if z.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"input has {z.shape[1]} columns, model expects {self.input_dim}")
        if self.mode == "primal":
            return z @ self.weights.T + self.biases
        return z @ self.dual_coef().T + self.biases

    def predict(self, inputs) -> np.ndarray:
        # argmax returns the first maximum: ties go to the lowest class index
        return np.argmax(self.decision_function(inputs), axis=1)

    def to_dict(self) -> dict:
        d = {"format": MODEL_FORMAT, "version": MODEL_VERSION, "mode": self.mode,
             "classes": self.classes, "c_param": self.c_param,
             "biases": self.biases.tolist(), "metadata": self.metadata}
        if self.mode == "primal":
            d["weights"] = self.weights.tolist()
        else:
            d["alphas"] = self.alphas.tolist()
            d["train_labels"] = self.train_labels.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ParseError(f"not a version-{MODEL_VERSION} model container")
        kw = dict(mode=d["mode"], classes=int(d["classes"]), c_param=float(d["c_param"]),
                  biases=np.array(d["biases"], dtype=np.float64), metadata=d.get("metadata", {}))
        if d["mode"] == "primal":
            kw["weights"] = np.array(d["weights"], dtype=np.float64)
        else:
            kw["alphas"] = np.array(d["alphas"], dtype=np.float64)
            kw["train_labels"] = np.array(d["train_labels"], dtype=np.int64)
        return cls(**kw)


def predict(model: SvmModel, x):
    """Class and per-class scores for one feature vector or kernel row."""
    scores = model.decision_function(np.asarray(x, dtype=np.float64)[None, :])[0]
    return int(np.argmax(scores)), scores


def save_model(model: SvmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> SvmModel:
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), f"{path}:{exc.lineno}") from None
    return SvmModel.from_dict(d)


def _check_labels(labels, n):
    y = np.asarray(labels)
    if y.shape != (n,):
        raise DimensionMismatch(f"{y.size} labels for {n} samples")
    if not np.issubdtype(y.dtype, np.integer) or (y.size and y.min() < 0):
        raise ValueError("labels must be nonnegative integers")
    classes = int(y.max()) + 1 if y.size else 0
    present = np.unique(y)
    if present.size < 2:
        raise SingleClass(f"need at least two classes, got {present.tolist()}")
    if present.size != classes:
        raise ValueError(f"labels must be dense in 0..{classes - 1}, got {present.tolist()}")
    return y.astype(np.int64), classes


def _projected_gradient(g, a, c):
    if a <= 0.0:
        return min(g, 0.0)
    if a >= c:
        return max(g, 0.0)
    return g


def _check_monotone(objectives, obj):
    if objectives and obj < objectives[-1] - _MONOTONE_RTOL * max(1.0, abs(objectives[-1])):
        raise AssertionError(f"dual objective decreased: {objectives[-1]!r} -> {obj!r}")
    objectives.append(obj)


def _dcd_primal(xa, ys, c, epochs, tol, rng):
    n = xa.shape[0]
    qd = np.einsum("ij,ij->i", xa, xa)
    a = np.zeros(n)
    w = np.zeros(xa.shape[1])
    objectives, converged, viol, ep = [], False, math.inf, 0
    for ep in range(1, epochs + 1):
        viol = 0.0
        for i in rng.permutation(n):
            g = ys[i] * (w @ xa[i]) - 1.0
            pg = _projected_gradient(g, a[i], c)
            viol = max(viol, abs(pg))
            if pg != 0.0 and qd[i] > 0.0:
                old = a[i]
                a[i] = min(max(old - g / qd[i], 0.0), c)
                w += (a[i] - old) * ys[i] * xa[i]
        _check_monotone(objectives, a.sum() - 0.5 * (w @ w))
        if viol < tol:
            converged = True
            break
    return a, w, BinaryDiagnostics(objectives, ep, viol, converged)


def _dcd_kernel(ka, ys, c, epochs, tol, rng):
    n = ka.shape[0]
    qd = np.diag(ka).copy()
    a = np.zeros(n)
    qa = np.zeros(n)  # (Q a)_i = y_i sum_j a_j y_j K~_ij
    objectives, converged, viol, ep = [], False, math.inf, 0
    for ep in range(1, epochs + 1):
        viol = 0.0
        for i in rng.permutation(n):
            g = qa[i] - 1.0
            pg = _projected_gradient(g, a[i], c)
            viol = max(viol, abs(pg))
            if pg != 0.0 and qd[i] > 0.0:
                old = a[i]
                a[i] = min(max(old - g / qd[i], 0.0), c)
                qa += (a[i] - old) * ys[i] * ys * ka[:, i]
        _check_monotone(objectives, a.sum() - 0.5 * (a @ qa))
        if viol < tol:
            converged = True
            break
    return a, BinaryDiagnostics(objectives, ep, viol, converged)


def train_linear(features, labels, c_param=DEFAULT_C, epochs=DEFAULT_EPOCHS, tol=DEFAULT_TOL,
                 seed=0, metadata=None) -> SvmModel:
    """One-vs-rest linear SVMs on explicit feature rows.

    Stops per class when the largest projected-gradient violation in an
    epoch falls below ``tol`` or after ``epochs`` passes.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise DimensionMismatch("features must be a 2-D (n, nu) array with nu >= 1")
    if not np.all(np.isfinite(x)):
        raise NonFinite("features contain NaN or Inf")
    y, classes = _check_labels(labels, x.shape[0])
    xa = np.hstack([x, np.ones((x.shape[0], 1))])
    weights = np.zeros((classes, x.shape[1]))
    biases = np.zeros(classes)
    diags = []
    for k in range(classes):
        ys = np.where(y == k, 1.0, -1.0)
        a, w, diag = _dcd_primal(xa, ys, float(c_param), epochs, tol, substream(seed, k))
        w_ref = (a * ys) @ xa
        diag.weight_drift = float(np.linalg.norm(w - w_ref) / max(np.linalg.norm(w_ref), 1e-300))
        diag.alphas = a
        weights[k], biases[k] = w[:-1], w[-1]
        diags.append(diag)
    return SvmModel("primal", classes, biases, float(c_param), weights=weights,
                    diagnostics=diags, metadata=dict(metadata or {}))


def train_kernel(gram, labels, c_param=DEFAULT_C, epochs=DEFAULT_EPOCHS, tol=DEFAULT_TOL,
                 seed=0, metadata=None, psd_tol=1e-8) -> SvmModel:
    """One-vs-rest kernel SVMs working on Gram rows only."""
    k = np.asarray(getattr(gram, "entries", gram), dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise DimensionMismatch("Gram matrix must be square")
    if not np.all(np.isfinite(k)):
        raise NonFinite("Gram matrix contains NaN or Inf")
    if np.max(np.abs(k - k.T), initial=0.0) > 1e-10:
        raise NotPsd("Gram matrix is not symmetric")
    if k.size and np.linalg.eigvalsh(k).min() < -psd_tol * max(1.0, np.abs(k).max()):
        raise NotPsd("Gram matrix has a negative eigenvalue")
    y, classes = _check_labels(labels, k.shape[0])
    ka = k + 1.0
    alphas = np.zeros((classes, k.shape[0]))
    biases = np.zeros(classes)
    diags = []
    for cls in range(classes):
        ys = np.where(y == cls, 1.0, -1.0)
        a, diag = _dcd_kernel(ka, ys, float(c_param), epochs, tol, substream(seed, cls))
        alphas[cls] = a
        biases[cls] = a @ ys
        diags.append(diag)
    return SvmModel("dual", classes, biases, float(c_param), alphas=alphas, train_labels=y,
                    diagnostics=diags, metadata=dict(metadata or {}))


def accuracy(predicted, labels) -> float:
    predicted, labels = np.asarray(predicted), np.asarray(labels)
    return float(np.mean(predicted == labels)) if labels.size else math.nan


def confusion_matrix(predicted, labels, classes) -> np.ndarray:
    cm = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(labels), np.asarray(predicted)), 1)
    return cm


def stratified_split(labels, test_fraction=0.5, seed=0):
    """Per-class shuffled split; returns sorted (train_idx, test_idx)."""
    y = np.asarray(labels)
    rng = substream(seed, 0x5B1)
    train, test = [], []
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        n_test = int(round(test_fraction * idx.size))
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(test, dtype=np.int64))


def stratified_folds(labels, folds, seed=0):
    """Assign every sample to one of ``folds`` folds, round-robin per class."""
    y = np.asarray(labels)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if folds > y.size:
        raise TooFewSamplesPerClass(f"{folds} folds for {y.size} samples")
    rng = substream(seed, 0xF01D)
    assign = np.empty(y.size, dtype=np.int64)
    offset = 0
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        assign[idx] = (offset + np.arange(idx.size)) % folds
        offset += idx.size
    return assign


@dataclass
class SigmaSelection:
    best_sigma: float
    sigma_grid: list
    fold_accuracy: np.ndarray  # (len(grid), folds)

    @property
    def mean_accuracy(self) -> np.ndarray:
        return np.nanmean(self.fold_accuracy, axis=1)


def cross_validate_sigma(descriptors, labels, sigma_grid, folds=5, c_param=DEFAULT_C, seed=0,
                         epochs=DEFAULT_EPOCHS, tol=DEFAULT_TOL) -> SigmaSelection:
    """Stratified k-fold choice of the exact-kernel bandwidth.

    Ties in mean validation accuracy go to the smaller sigma.
    """
    from .kernels import exact_gram

    grid = sorted(float(s) for s in sigma_grid)
    if not grid:
        raise ValueError("sigma grid is empty")
    y = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(y)
    if folds < y.size and counts.min() < 2:
        raise TooFewSamplesPerClass(f"class {int(np.argmin(counts))} has {counts.min()} sample(s)")
    assign = stratified_folds(y, folds, seed)
    table = np.full((len(grid), folds), np.nan)
    for si, sigma in enumerate(grid):
        k = exact_gram(descriptors, sigma).entries
        for f in range(folds):
            tr, va = np.flatnonzero(assign != f), np.flatnonzero(assign == f)
            if va.size == 0:
                continue
            ytr = y[tr]
            if np.unique(ytr).size < 2:
                raise TooFewSamplesPerClass(f"fold {f} leaves fewer than two training classes")
            # relabel so training labels are dense
            present, dense = np.unique(ytr, return_inverse=True)
            model = train_kernel(k[np.ix_(tr, tr)], dense, c_param, epochs, tol, seed=seed + f)
            pred = present[model.predict(k[np.ix_(va, tr)])]
            table[si, f] = accuracy(pred, y[va])
    means = np.nanmean(table, axis=1)
    best = int(np.flatnonzero(means == means.max())[0])
    return SigmaSelection(grid[best], grid, table)
