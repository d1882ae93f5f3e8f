"""The single trained layer: linear scores over pooled states.

Supports closed-form ridge regression and iterative softmax/cross-entropy
training (Adam by default, plain gradient descent as an option). No bias
parameter lives here; the pooled vector's leading constant 1 provides it.
"""

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import ConfigError, DataFormatError, TrainingError
from .reservoir import PooledState

TRAIN_MODES = ("softmax_adam", "softmax_sgd", "ridge")

MODEL_MAGIC = b"CDNW"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainSpec:
    """Readout training settings.

    mode "softmax_adam" is the default; "softmax_sgd" runs the same
    full-batch cross-entropy loop with a plain gradient-descent update,
    "ridge" selects the closed-form solver. batch_size None means full batch.
    """

    mode: str = "softmax_adam"
    epochs: int = 1600
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    ridge_lambda: float = 0.0
    batch_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in TRAIN_MODES:
            raise ConfigError(f"mode must be one of {TRAIN_MODES}, got {self.mode!r}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.ridge_lambda < 0.0:
            raise ConfigError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")


@dataclass
class ReadoutModel:
    """Trained output weights, one row per class.

    w_out has shape (n_classes, pooled_length); class_labels gives the class
    identifier for each row.
    """

    w_out: np.ndarray
    class_labels: list = field(default_factory=list)

    def __post_init__(self):
        self.w_out = np.asarray(self.w_out, dtype=float)
        if self.w_out.ndim != 2:
            raise ConfigError(f"w_out must be 2-D, got shape {self.w_out.shape}")
        if not self.class_labels:
            self.class_labels = list(range(self.w_out.shape[0]))
        if len(self.class_labels) != self.w_out.shape[0]:
            raise ConfigError(
                f"{len(self.class_labels)} class labels for {self.w_out.shape[0]} weight rows"
            )


@dataclass
class Prediction:
    scores: np.ndarray
    probabilities: np.ndarray
    label: object


def _pooled_vector(pooled) -> np.ndarray:
    if isinstance(pooled, PooledState):
        return pooled.sigma_x
    return np.asarray(pooled, dtype=float)


def score(model: ReadoutModel, pooled) -> np.ndarray:
    """Linear class scores: w_out @ pooled vector. No nonlinearity."""
    vec = _pooled_vector(pooled)
    if vec.shape != (model.w_out.shape[1],):
        raise ConfigError(
            f"pooled vector has shape {vec.shape}, readout expects ({model.w_out.shape[1]},)"
        )
    return model.w_out @ vec


def softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by max subtraction."""
    scores = np.asarray(scores, dtype=float)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=-1, keepdims=True)


def classify(model: ReadoutModel, pooled) -> Prediction:
    """Predict a class label from a pooled state.

    The label is the argmax of the linear scores; ties resolve to the lowest
    class index. Probabilities are the softmax of the scores.
    """
    scores = score(model, pooled)
    index = int(np.argmax(scores))  # argmax returns the first maximum
    return Prediction(
        scores=scores, probabilities=softmax(scores), label=model.class_labels[index]
    )


def ridge_fit(
    pooled_set: np.ndarray,
    targets: np.ndarray,
    ridge_lambda: float,
    class_labels=None,
) -> ReadoutModel:
    """Closed-form Tikhonov-regularized least squares fit of the readout.

    Solves (P^T P + lambda I) W^T = P^T T by Cholesky factorization; P is the
    (samples, pooled_length) matrix and T the one-hot target matrix.

    Raises:
        ConfigError: lambda < 0, shape mismatch, or a singular system with
            lambda = 0 (use a positive ridge_lambda to regularize).
    """
    pooled_set = np.asarray(pooled_set, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if ridge_lambda < 0.0:
        raise ConfigError(f"ridge_lambda must be >= 0, got {ridge_lambda}")
    if pooled_set.ndim != 2 or targets.ndim != 2 or pooled_set.shape[0] != targets.shape[0]:
        raise ConfigError(
            f"incompatible shapes: pooled {pooled_set.shape}, targets {targets.shape}"
        )

    gram = pooled_set.T @ pooled_set
    if ridge_lambda > 0.0:
        gram = gram + ridge_lambda * np.eye(gram.shape[0])
    try:
        factor = linalg.cho_factor(gram)
        solution = linalg.cho_solve(factor, pooled_set.T @ targets)
    except linalg.LinAlgError as exc:
        raise ConfigError(
            "ridge system is singular; set ridge_lambda > 0 to regularize"
        ) from exc
    return ReadoutModel(w_out=solution.T, class_labels=class_labels)


def one_hot(labels, class_labels) -> np.ndarray:
    """(samples, classes) one-hot matrix following the class_labels order."""
    index = {label: i for i, label in enumerate(class_labels)}
    out = np.zeros((len(labels), len(class_labels)))
    for row, label in enumerate(labels):
        if label not in index:
            raise ConfigError(f"label {label!r} not in class set {list(class_labels)!r}")
        out[row, index[label]] = 1.0
    return out


def cross_entropy_loss(w_out: np.ndarray, pooled_set: np.ndarray, targets: np.ndarray) -> float:
    """Mean categorical cross-entropy of softmax(P @ W^T) against one-hots."""
    probs = softmax(pooled_set @ w_out.T)
    picked = (probs * targets).sum(axis=1)
    return float(-np.mean(np.log(picked)))


def cross_entropy_gradient(
    w_out: np.ndarray, pooled_set: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Gradient of the mean cross-entropy w.r.t. w_out: (p - t)^T P / m."""
    probs = softmax(pooled_set @ w_out.T)
    return (probs - targets).T @ pooled_set / pooled_set.shape[0]


class _AdamState:
    """Bias-corrected first/second moment accumulator (one tensor)."""

    def __init__(self, shape, spec: TrainSpec):
        self.spec = spec
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def update(self, w: np.ndarray, grad: np.ndarray) -> np.ndarray:
        s = self.spec
        self.t += 1
        self.m = s.beta1 * self.m + (1.0 - s.beta1) * grad
        self.v = s.beta2 * self.v + (1.0 - s.beta2) * grad * grad
        m_hat = self.m / (1.0 - s.beta1**self.t)
        v_hat = self.v / (1.0 - s.beta2**self.t)
        return w - s.learning_rate * m_hat / (np.sqrt(v_hat) + s.epsilon)


def train_softmax(
    pooled_set: np.ndarray,
    labels,
    spec: TrainSpec,
    class_labels=None,
    on_epoch=None,
):
    """Train the readout by softmax/cross-entropy minimization.

    Weights start at zero, so the loss recorded for the first epoch is
    exactly ln(n_classes). The loss curve entry for epoch e is the full-set
    mean loss measured before that epoch's update.

    Args:
        pooled_set: (samples, pooled_length) matrix of pooled states.
        labels: per-sample class labels.
        spec: training hyperparameters; mode "softmax_adam" or "softmax_sgd".
        class_labels: class order; defaults to sorted distinct labels.
        on_epoch: optional callback(epoch_index, w_out) invoked after each
            epoch's update; must treat w_out as read-only.

    Returns:
        (ReadoutModel, loss_curve) with len(loss_curve) == spec.epochs.

    Raises:
        ConfigError: a declared class has no training sample.
        TrainingError: the loss became non-finite.
    """
    pooled_set = np.asarray(pooled_set, dtype=float)
    if class_labels is None:
        class_labels = sorted(set(labels))
    class_labels = list(class_labels)
    if spec.mode == "ridge":
        raise ConfigError("train_softmax called with mode 'ridge'; use ridge_fit")

    counts = {label: 0 for label in class_labels}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    missing = [label for label in class_labels if counts[label] == 0]
    if missing:
        raise ConfigError(f"classes with no training sample: {missing!r}")

    targets = one_hot(labels, class_labels)
    n_samples = pooled_set.shape[0]
    w = np.zeros((len(class_labels), pooled_set.shape[1]))
    adam = _AdamState(w.shape, spec) if spec.mode == "softmax_adam" else None
    rng = np.random.default_rng(spec.seed)

    losses = []
    for epoch in range(spec.epochs):
        loss = cross_entropy_loss(w, pooled_set, targets)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss!r} at epoch {epoch}")
        losses.append(loss)

        if spec.batch_size is None or spec.batch_size >= n_samples:
            batches = [slice(None)]
        else:
            order = rng.permutation(n_samples)
            batches = [
                order[i : i + spec.batch_size] for i in range(0, n_samples, spec.batch_size)
            ]
        for batch in batches:
            grad = cross_entropy_gradient(w, pooled_set[batch], targets[batch])
            if adam is not None:
                w = adam.update(w, grad)
            else:
                w = w - spec.learning_rate * grad
        if on_epoch is not None:
            on_epoch(epoch, w)

    return ReadoutModel(w_out=w, class_labels=class_labels), losses


def save_model(model: ReadoutModel, path) -> None:
    """Write weights in the flat binary layout: magic, version byte, row and
    column counts as little-endian u64, row-major float64 entries."""
    rows, cols = model.w_out.shape
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<B", MODEL_VERSION))
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(np.ascontiguousarray(model.w_out, dtype="<f8").tobytes())


def load_model(path, class_labels=None) -> ReadoutModel:
    """Read a weights file written by save_model; exact round trip.

    The file carries no class identifiers, so class_labels may be supplied;
    rows default to indices 0..n_classes-1.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    header = len(MODEL_MAGIC) + 1 + 16
    if len(blob) < header:
        raise DataFormatError(f"{path}: too short for a weights file header")
    if blob[:4] != MODEL_MAGIC:
        raise DataFormatError(f"{path}: bad magic {blob[:4]!r}, expected {MODEL_MAGIC!r}")
    version = blob[4]
    if version != MODEL_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    rows, cols = struct.unpack("<QQ", blob[5:21])
    expected = header + rows * cols * 8
    if len(blob) != expected:
        raise DataFormatError(
            f"{path}: payload is {len(blob)} bytes, header promises {expected}"
        )
    w = np.frombuffer(blob[header:], dtype="<f8").reshape(rows, cols).copy()
    return ReadoutModel(w_out=w, class_labels=class_labels)
