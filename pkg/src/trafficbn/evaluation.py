"""Train/test protocol, classification metrics and simple baselines."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import YES, Dataset, class_indices, hamming
from .errors import ContractError, ImpossibleEvidenceError, InsufficientDataError
from .inference import as_value, evidence_from_row, posterior
from .learning import NetworkModel

# Published accident-prediction results per city, kept for side-by-side reports.
# Only reproducible with the full source dataset.
REFERENCE_RESULTS = {
    "LR": {"Acc": {"AT": 0.54, "AU": 0.58, "CH": 0.56, "DA": 0.3},
           "Non-Acc": {"AT": 0.91, "AU": 0.93, "CH": 0.91, "DA": 0.94},
           "W-Ave": {"AT": 0.83, "AU": 0.87, "CH": 0.83, "DA": 0.87}},
    "DNN": {"Acc": {"AT": 0.62, "AU": 0.62, "CH": 0.61, "DA": 0.36},
            "Non-Acc": {"AT": 0.89, "AU": 0.92, "CH": 0.87, "DA": 0.94},
            "W-Ave": {"AT": 0.83, "AU": 0.87, "CH": 0.82, "DA": 0.87}},
    "SVM": {"Acc": {"AT": 0.75, "AU": 0.80, "CH": 0.69, "DA": 0.75},
            "Non-Acc": {"AT": 0.96, "AU": 0.95, "CH": 0.97, "DA": 0.97},
            "W-Ave": {"AT": 0.47, "AU": 0.62, "CH": 0.27, "DA": 0.47}},
    "KNN": {"Acc": {"AT": 0.50, "AU": 0.78, "CH": 0.61, "DA": 0.72},
            "Non-Acc": {"AT": 0.43, "AU": 0.90, "CH": 0.59, "DA": 0.89},
            "W-Ave": {"AT": 0.46, "AU": 0.73, "CH": 0.53, "DA": 0.48}},
    "BN": {"Acc": {"AT": 0.65, "AU": 0.73, "CH": 0.60, "DA": 0.65},
           "Non-Acc": {"AT": 0.76, "AU": 0.90, "CH": 0.31, "DA": 0.78},
           "W-Ave": {"AT": 0.61, "AU": 0.67, "CH": 0.69, "DA": 0.59}},
}


@dataclass(frozen=True)
class SplitSpec:
    test_pos: int = 1000
    test_neg: int = 1000
    seed: int = 0


@dataclass(frozen=True)
class Metrics:
    acc_yes: float
    acc_no: float
    precision: float
    recall: float
    f1: float
    weighted_f1: float
    support_yes: int = 0
    support_no: int = 0
    degenerate: tuple = ()

    def as_dict(self) -> dict:
        d = asdict(self)
        d["degenerate"] = list(self.degenerate)
        return d


def split(ds: Dataset, spec: SplitSpec, target: str) -> tuple[Dataset, Dataset]:
    """Sample a test set with exact class counts; the rest is training data."""
    yes, no = class_indices(ds, target)
    short = []
    if len(yes) < spec.test_pos:
        short.append(f"{spec.test_pos - len(yes)} YES rows")
    if len(no) < spec.test_neg:
        short.append(f"{spec.test_neg - len(no)} NO rows")
    if short:
        raise InsufficientDataError(f"not enough rows for the test split of {target}: short by {' and '.join(short)}")
    rng = np.random.default_rng(spec.seed)
    test_idx = np.sort(np.concatenate([
        rng.choice(yes, size=spec.test_pos, replace=False),
        rng.choice(no, size=spec.test_neg, replace=False),
    ]))
    mask = np.ones(len(ds), dtype=bool)
    mask[test_idx] = False
    return ds.take(np.flatnonzero(mask)), ds.take(test_idx)


def _ratio(num: float, den: float, name: str, flags: list) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def compute_metrics(predictions: Iterable[tuple]) -> Metrics:
    """Metrics from ``(predicted, truth)`` pairs of YES/NO values.

    Zero denominators give 0 and are listed in ``degenerate``.
    """
    pairs = [(as_value(p), as_value(t)) for p, t in predictions]
    if not pairs:
        raise ContractError("no predictions to score")
    tp = sum(1 for p, t in pairs if p and t)
    fp = sum(1 for p, t in pairs if p and not t)
    fn = sum(1 for p, t in pairs if not p and t)
    tn = sum(1 for p, t in pairs if not p and not t)
    flags: list = []
    precision = _ratio(tp, tp + fp, "precision", flags)
    recall = _ratio(tp, tp + fn, "recall", flags)
    f1 = _ratio(2 * precision * recall, precision + recall, "f1", flags)
    # the NO class scored as if it were the positive one
    precision_no = _ratio(tn, tn + fn, "precision_no", flags)
    recall_no = _ratio(tn, tn + fp, "recall_no", flags)
    f1_no = _ratio(2 * precision_no * recall_no, precision_no + recall_no, "f1_no", flags)
    n_yes, n_no = tp + fn, tn + fp
    weighted = (n_yes * f1 + n_no * f1_no) / (n_yes + n_no)
    return Metrics(recall, recall_no, precision, recall, f1, weighted, n_yes, n_no, tuple(flags))


class BNClassifier:
    """Posterior-threshold classifier with a cache keyed on the observed pattern.

    A test row can carry evidence the model gives zero probability (MLE
    tables contain exact zeros).  Such rows fall back to the target's
    neighbours as evidence, then to the prior; ``fallbacks`` counts them.
    """

    def __init__(self, model: NetworkModel, target: str, threshold: float = 0.5, scope: str = "all"):
        self.model = model
        self.target = target
        self.threshold = threshold
        self.scope = scope
        self.fallbacks = 0
        self._cache: dict = {}

    def _fallback(self, row: dict) -> float:
        if self.scope != "neighbors":
            try:
                evidence = evidence_from_row(self.model, row, self.target, "neighbors")
                return posterior(self.model, self.target, evidence).p_yes
            except ImpossibleEvidenceError:
                pass
        return posterior(self.model, self.target).p_yes

    def p_yes(self, row: dict) -> float:
        evidence = evidence_from_row(self.model, row, self.target, self.scope)
        key = tuple(sorted((k, int(as_value(v))) for k, v in evidence.items()))
        p = self._cache.get(key)
        if p is None:
            try:
                p = posterior(self.model, self.target, evidence).p_yes
            except ImpossibleEvidenceError:
                self.fallbacks += 1
                p = self._fallback(row)
            self._cache[key] = p
        return p

    def predict_row(self, row: dict) -> int:
        return YES if self.p_yes(row) >= self.threshold else 0


def _rows(ds: Dataset):
    for i in range(len(ds)):
        yield {c: int(v) for c, v in zip(ds.columns, ds.values[i])}


def evaluate_model(model: NetworkModel, test: Dataset, target: str, threshold: float = 0.5,
                   scope: str = "all") -> Metrics:
    clf = BNClassifier(model, target, threshold, scope)
    truth = test.col(target)
    return compute_metrics((clf.predict_row(r), int(t)) for r, t in zip(_rows(test), truth))


def _features(ds: Dataset, target: str) -> tuple[np.ndarray, np.ndarray]:
    t = ds.column_index(target)
    return np.delete(ds.values, t, axis=1).astype(float), ds.values[:, t].astype(int)


@dataclass
class LogisticBaseline:
    target: str
    columns: tuple
    weights: np.ndarray
    bias: float

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-(X @ self.weights + self.bias)))

    def predict(self, ds: Dataset) -> np.ndarray:
        X, _ = _features(ds, self.target)
        return (self.predict_proba(X) >= 0.5).astype(int)


def fit_logistic(train: Dataset, target: str, lr: float = 0.1, epochs: int = 500, seed: int = 0) -> LogisticBaseline:
    """Full-batch gradient descent on the mean log-loss."""
    X, y = _features(train, target)
    if len(X) == 0:
        raise ContractError("cannot fit logistic regression on an empty dataset")
    rng = np.random.default_rng(seed)
    w = rng.normal(scale=0.01, size=X.shape[1])
    b = 0.0
    for _ in range(epochs):
        p = 1.0 / (1.0 + np.exp(-(X @ w + b)))
        grad = p - y
        w -= lr * (X.T @ grad) / len(y)
        b -= lr * grad.mean()
    return LogisticBaseline(target, tuple(c for c in train.columns if c != target), w, float(b))


@dataclass
class KNNBaseline:
    target: str
    k: int
    X: np.ndarray
    y: np.ndarray

    def predict(self, ds: Dataset) -> np.ndarray:
        Xq, _ = _features(ds, self.target)
        out = np.empty(len(Xq), dtype=int)
        for lo in range(0, len(Xq), 512):
            d = hamming(Xq[lo:lo + 512], self.X)
            # stable sort: equal distances resolve to earlier training rows
            nearest = np.argsort(d, axis=1, kind="stable")[:, : self.k]
            votes = self.y[nearest].sum(axis=1)
            out[lo:lo + 512] = (2 * votes >= self.k).astype(int)
        return out


def fit_knn(train: Dataset, target: str, k: int = 5) -> KNNBaseline:
    if k < 1 or k > len(train):
        raise ContractError(f"k={k} must lie in [1, {len(train)}]")
    X, y = _features(train, target)
    return KNNBaseline(target, k, X.astype(np.uint8), y)


@dataclass
class RandomBaseline:
    target: str
    seed: int = 0

    def predict(self, ds: Dataset) -> np.ndarray:
        return np.random.default_rng(self.seed).integers(0, 2, size=len(ds))


def predict_baseline(model, row: dict) -> str:
    """Label a single row (mapping of variable name to YES/NO) with a baseline model."""
    columns = [c for c in row if c != model.target]
    values = np.array([[as_value(row[c]) for c in columns] + [as_value(row.get(model.target, 0))]], dtype=np.uint8)
    ds = Dataset(values, [""], [""], columns=tuple(columns) + (model.target,))
    return "YES" if model.predict(ds)[0] else "NO"


def evaluate_baseline(model, test: Dataset) -> Metrics:
    pred = model.predict(test)
    return compute_metrics(zip(pred, test.col(model.target)))


CITY_CODES = {"AT": "Atlanta", "AU": "Austin", "CH": "Charlotte", "DA": "Dallas"}

METRIC_ROWS = (("Acc", "acc_yes"), ("Non-Acc", "acc_no"), ("W-Ave", "weighted_f1"))


def format_table(results: dict, cities: Sequence[str]) -> str:
    """Plain-text table of ``results[model][city] -> Metrics``."""
    header = f"{'Model':<6} {'Metric':<8} " + " ".join(f"{c:>7}" for c in cities)
    lines = [header, "-" * len(header)]
    for model_name, per_city in results.items():
        for i, (label, attr) in enumerate(METRIC_ROWS):
            cells = []
            for c in cities:
                m = per_city.get(c)
                cells.append(f"{getattr(m, attr):7.2f}" if m is not None else f"{'-':>7}")
            lines.append(f"{model_name if i == 0 else '':<6} {label:<8} " + " ".join(cells))
    return "\n".join(lines) + "\n"


def results_json(results: dict) -> str:
    return json.dumps(
        {m: {c: met.as_dict() for c, met in per_city.items()} for m, per_city in results.items()},
        indent=1, sort_keys=True,
    ) + "\n"
