"""One-vs-rest linear SVM over descriptor vectors.

Each binary problem is the hinge-loss SVM with the bias folded in as an
extra constant feature (so the bias is regularized, as in liblinear).  It is
solved by dual coordinate descent in a fixed cyclic order, working on the
Gram matrix, until the relative duality gap drops below ``tol``.  Identical
inputs give bit-identical models.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "TrainedModel",
    "EvalReport",
    "l2_normalize",
    "combine",
    "train",
    "decision_function",
    "predict",
    "evaluate",
    "select_c",
    "C_GRID",
]

C_GRID = (0.1, 1.0, 10.0, 100.0)


def l2_normalize(x):
    x = np.asarray(x, dtype=np.float64)
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    return np.divide(x, n, out=np.zeros_like(x), where=n > 0)


def _vector(d):
    return np.asarray(getattr(d, "vector", d), dtype=np.float64)


def combine(a, b):
    """Concatenate two descriptors of the same sequence.

    Each part is L2-normalized first and the result normalized again.
    Descriptor objects with differing ``seq_id`` are rejected.
    """
    ida, idb = getattr(a, "seq_id", ""), getattr(b, "seq_id", "")
    if ida and idb and ida != idb:
        raise InvalidArgument(f"descriptors come from different sequences: {ida} vs {idb}")
    va, vb = _vector(a), _vector(b)
    return l2_normalize(np.concatenate([l2_normalize(va), l2_normalize(vb)]))


@dataclass(eq=False)
class TrainedModel:
    weights: np.ndarray  # (K, D)
    bias: np.ndarray  # (K,)
    classes: tuple
    C: float
    tol: float
    kind: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def length(self):
        return self.weights.shape[1]


def _binary_dcd(gram, y, c, tol, max_epochs):
    """Dual coordinate descent for one hinge-loss problem on a Gram matrix."""
    n = y.size
    alpha = np.zeros(n)
    f = np.zeros(n)  # f_i = w . x_i
    qdiag = np.diag(gram).copy()
    gap = np.inf
    for _ in range(max_epochs):
        for i in range(n):
            if qdiag[i] <= 0:
                continue
            g = y[i] * f[i] - 1.0
            a = alpha[i]
            if (a == 0.0 and g >= 0.0) or (a == c and g <= 0.0):
                continue
            new = min(max(a - g / qdiag[i], 0.0), c)
            if new != a:
                f += (new - a) * y[i] * gram[:, i]
                alpha[i] = new
        ay = alpha * y
        f = gram @ ay
        wnorm2 = float(ay @ f)
        primal = 0.5 * wnorm2 + c * float(np.sum(np.maximum(0.0, 1.0 - y * f)))
        dual = float(alpha.sum()) - 0.5 * wnorm2
        gap = primal - dual
        if gap <= tol * max(primal, 1e-300):
            break
    return alpha, gap


def train(x, y, c=1.0, tol=1e-6, bias=1.0, max_epochs=20000):
    """Fit one binary SVM per class.

    Parameters
    ----------
    x : array_like, shape (n_samples, n_features)
    y : array_like of int labels
    c : float
        Hinge-loss weight.
    tol : float
        Stop when ``primal - dual <= tol * primal``.
    bias : float
        Value of the constant feature carrying the intercept.

    Returns
    -------
    TrainedModel
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise InvalidArgument("x must be (n_samples, n_features) matching y")
    if not c > 0:
        raise InvalidArgument("C must be positive")
    classes = tuple(int(v) for v in np.unique(y))
    if len(classes) < 2:
        raise InvalidArgument("need at least two classes")
    gram = x @ x.T + bias * bias
    weights = np.empty((len(classes), x.shape[1]))
    biases = np.empty(len(classes))
    gaps = []
    for k, cls in enumerate(classes):
        yk = np.where(y == cls, 1.0, -1.0)
        alpha, gap = _binary_dcd(gram, yk, c, tol, max_epochs)
        ay = alpha * yk
        weights[k] = ay @ x
        biases[k] = bias * bias * ay.sum()  # weight on the constant feature, times its value
        gaps.append(gap)
    return TrainedModel(weights, biases, classes, float(c), float(tol),
                        meta={"duality_gaps": gaps, "bias_feature": bias})


def decision_function(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.length:
        raise InvalidArgument(f"descriptor length {x.shape[1]} != model length {model.length}")
    return x @ model.weights.T + model.bias


def predict(model, x):
    """Arg-max class; ties go to the lowest class id."""
    scores = decision_function(model, x)
    return np.asarray(model.classes)[np.argmax(scores, axis=1)]


@dataclass
class EvalReport:
    accuracy: float
    classes: tuple
    confusion: np.ndarray  # rows: true class, columns: predicted
    per_class: dict
    timings: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "classes": list(self.classes),
            "per_class_accuracy": {str(k): v for k, v in self.per_class.items()},
            "confusion": self.confusion.tolist(),
            "timings": self.timings,
            **self.extra,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def confusion_table(self):
        width = max(5, *(len(str(c)) for c in self.classes))
        head = " " * width + " | " + " ".join(f"{c:>{width}}" for c in self.classes)
        lines = [head, "-" * len(head)]
        for c, row in zip(self.classes, self.confusion):
            lines.append(f"{c:>{width}} | " + " ".join(f"{v:>{width}d}" for v in row))
        lines.append(f"accuracy {self.accuracy:.4f}")
        return "\n".join(lines)


def evaluate(model, x, y, timings=None):
    t0 = time.perf_counter()
    y = np.asarray(y)
    pred = predict(model, x)
    classes = model.classes
    pos = {c: n for n, c in enumerate(classes)}
    conf = np.zeros((len(classes), len(classes)), dtype=int)
    for t, p in zip(y, pred):
        if int(t) not in pos:
            raise InvalidArgument(f"test label {t} unseen in training")
        conf[pos[int(t)], pos[int(p)]] += 1
    totals = conf.sum(axis=1)
    per_class = {c: (float(conf[n, n] / totals[n]) if totals[n] else float("nan"))
                 for n, c in enumerate(classes)}
    acc = float(np.trace(conf) / conf.sum()) if conf.sum() else float("nan")
    timings = dict(timings or {})
    timings["evaluate_s"] = time.perf_counter() - t0
    return EvalReport(acc, classes, conf, per_class, timings)


def select_c(x_fit, y_fit, x_val, y_val, grid=C_GRID, tol=1e-6):
    """Best C on the validation split; ties keep the earlier grid value."""
    scores = []
    for c in grid:
        model = train(x_fit, y_fit, c, tol)
        scores.append(float(np.mean(predict(model, x_val) == np.asarray(y_val))))
    best = int(np.argmax(scores))
    return grid[best], dict(zip(map(float, grid), scores))
