"""Toy federated training at desk scale.

Default model is multinomial logistic (softmax) regression on a flat real
parameter vector; a one-hidden-layer tanh perceptron is available for
nonconvex sanity runs. Devices compute model changes (trained-minus-global
differences), which are what the over-the-air channel aggregates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UsageError


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # N x F
    labels: np.ndarray  # N, ints in [0, C)

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise DimensionError("features must be N x F with N labels")
        if x.shape[0] < 1:
            raise UsageError("dataset must be nonempty")
        if np.any(y < 0):
            raise UsageError("labels must be nonnegative class indices")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.features.shape[0]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class PartitionSpec:
    mode: str  # iid | shard | dirichlet
    samples_per_device: int
    shards_per_device: int = 1
    alpha: float = 0.5

    def __post_init__(self):
        if self.mode not in ("iid", "shard", "dirichlet"):
            raise UsageError(f"unknown partition mode {self.mode!r}")
        if self.samples_per_device < 1:
            raise UsageError("samples_per_device must be >= 1")
        if self.mode == "shard":
            if self.shards_per_device < 1:
                raise UsageError("shards_per_device must be >= 1")
            if self.samples_per_device % self.shards_per_device:
                raise UsageError(
                    "samples_per_device must be divisible by shards_per_device"
                )
        if self.mode == "dirichlet" and not self.alpha > 0:
            raise UsageError("dirichlet alpha must be > 0")


@dataclass(frozen=True)
class TrainSpec:
    local_epochs: int
    batch_size: int
    learning_rate: float
    rounds: int

    def __post_init__(self):
        if self.local_epochs < 1 or self.batch_size < 1 or self.rounds < 0:
            raise UsageError("train spec counts must be positive")
        if self.learning_rate < 0:
            raise UsageError("learning rate must be nonnegative")


# ---------------------------------------------------------------------------
# Models on flat parameter vectors
# ---------------------------------------------------------------------------


class SoftmaxModel:
    """Multinomial logistic regression; d = F*C + C."""

    def __init__(self, num_features: int, num_classes: int):
        self.F = num_features
        self.C = num_classes

    @property
    def dim(self) -> int:
        return self.F * self.C + self.C

    def _unpack(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape != (self.dim,):
            raise DimensionError(
                f"expected parameter vector of length {self.dim}, "
                f"got {params.shape}"
            )
        W = params[: self.F * self.C].reshape(self.F, self.C)
        b = params[self.F * self.C :]
        return W, b

    def logits(self, params, x) -> np.ndarray:
        W, b = self._unpack(params)
        return x @ W + b

    def loss_and_gradient(self, params, data: Dataset):
        x, y = data.features, data.labels
        if x.shape[1] != self.F:
            raise DimensionError("feature width does not match the model")
        if np.any(y >= self.C):
            raise DimensionError("label outside [0, C)")
        z = self.logits(params, x)
        z -= z.max(axis=1, keepdims=True)
        expz = np.exp(z)
        p = expz / expz.sum(axis=1, keepdims=True)
        n = len(data)
        loss = -float(np.mean(np.log(p[np.arange(n), y] + 1e-300)))
        delta = p
        delta[np.arange(n), y] -= 1.0
        delta /= n
        grad_w = x.T @ delta
        grad_b = delta.sum(axis=0)
        return loss, np.concatenate([grad_w.ravel(), grad_b])


class MlpModel:
    """One-hidden-layer tanh perceptron with a softmax head."""

    def __init__(self, num_features: int, num_classes: int, hidden: int):
        if hidden < 1:
            raise UsageError("hidden width must be >= 1")
        self.F = num_features
        self.C = num_classes
        self.H = hidden

    @property
    def dim(self) -> int:
        return self.F * self.H + self.H + self.H * self.C + self.C

    def _unpack(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape != (self.dim,):
            raise DimensionError(f"expected length {self.dim}, got {params.shape}")
        i = 0
        W1 = params[i : i + self.F * self.H].reshape(self.F, self.H)
        i += self.F * self.H
        b1 = params[i : i + self.H]
        i += self.H
        W2 = params[i : i + self.H * self.C].reshape(self.H, self.C)
        i += self.H * self.C
        b2 = params[i:]
        return W1, b1, W2, b2

    def logits(self, params, x) -> np.ndarray:
        W1, b1, W2, b2 = self._unpack(params)
        return np.tanh(x @ W1 + b1) @ W2 + b2

    def loss_and_gradient(self, params, data: Dataset):
        W1, b1, W2, b2 = self._unpack(params)
        x, y = data.features, data.labels
        if x.shape[1] != self.F:
            raise DimensionError("feature width does not match the model")
        a = np.tanh(x @ W1 + b1)
        z = a @ W2 + b2
        z -= z.max(axis=1, keepdims=True)
        expz = np.exp(z)
        p = expz / expz.sum(axis=1, keepdims=True)
        n = len(data)
        loss = -float(np.mean(np.log(p[np.arange(n), y] + 1e-300)))
        delta = p
        delta[np.arange(n), y] -= 1.0
        delta /= n
        grad_W2 = a.T @ delta
        grad_b2 = delta.sum(axis=0)
        back = (delta @ W2.T) * (1.0 - a**2)
        grad_W1 = x.T @ back
        grad_b1 = back.sum(axis=0)
        return loss, np.concatenate(
            [grad_W1.ravel(), grad_b1, grad_W2.ravel(), grad_b2]
        )


def make_model(kind: str, num_features: int, num_classes: int, hidden: int = 16):
    if kind == "softmax":
        return SoftmaxModel(num_features, num_classes)
    if kind == "mlp":
        return MlpModel(num_features, num_classes, hidden)
    raise UsageError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# Data generation and partitioning
# ---------------------------------------------------------------------------


def make_synthetic_task(
    num_classes: int,
    num_features: int,
    train_samples: int,
    test_samples: int,
    rng: np.random.Generator,
    separation: float = 2.0,
) -> tuple[Dataset, Dataset]:
    """Gaussian mixture with class means on a sphere of radius `separation`."""
    if num_classes < 2 or num_features < 1:
        raise UsageError("need at least 2 classes and 1 feature")
    means = rng.standard_normal((num_classes, num_features))
    means *= separation / np.linalg.norm(means, axis=1, keepdims=True)

    def draw(n):
        y = rng.integers(0, num_classes, size=n)
        x = means[y] + rng.standard_normal((n, num_features))
        return Dataset(x, y)

    return draw(train_samples), draw(test_samples)


def partition(
    data: Dataset, K: int, spec: PartitionSpec, rng: np.random.Generator
) -> list[Dataset]:
    """Split `data` into K disjoint per-device datasets."""
    n_needed = K * spec.samples_per_device
    if n_needed > len(data):
        raise UsageError(
            f"need {n_needed} samples for {K} devices, have {len(data)}"
        )
    spd = spec.samples_per_device

    if spec.mode == "iid":
        idx = rng.permutation(len(data))[:n_needed]
        return [data.subset(idx[k * spd : (k + 1) * spd]) for k in range(K)]

    if spec.mode == "shard":
        shard_size = spd // spec.shards_per_device
        n_shards = K * spec.shards_per_device
        by_label = np.argsort(data.labels, kind="stable")[: n_shards * shard_size]
        shards = by_label.reshape(n_shards, shard_size)
        order = rng.permutation(n_shards)
        out = []
        for k in range(K):
            mine = order[
                k * spec.shards_per_device : (k + 1) * spec.shards_per_device
            ]
            out.append(data.subset(np.concatenate([shards[s] for s in mine])))
        return out

    # dirichlet: per-device class proportions, drawn without replacement
    classes = np.unique(data.labels)
    pools = {c: list(rng.permutation(np.flatnonzero(data.labels == c)))
             for c in classes}
    out = []
    for _ in range(K):
        props = rng.dirichlet(np.full(classes.size, spec.alpha))
        counts = np.floor(props * spd).astype(int)
        while counts.sum() < spd:
            counts[rng.integers(0, classes.size)] += 1
        chosen = []
        for ci, c in enumerate(classes):
            take = min(counts[ci], len(pools[c]))
            chosen.extend(pools[c][:take])
            del pools[c][:take]
        # top up from whatever remains when a class pool ran dry
        while len(chosen) < spd:
            for c in classes:
                if pools[c]:
                    chosen.append(pools[c].pop(0))
                    if len(chosen) == spd:
                        break
        out.append(data.subset(np.array(chosen[:spd])))
    return out


# ---------------------------------------------------------------------------
# Training loop pieces
# ---------------------------------------------------------------------------


def local_update(
    global_params: np.ndarray,
    data: Dataset,
    spec: TrainSpec,
    model,
    rng: np.random.Generator,
) -> np.ndarray:
    """Mini-batch SGD from the global model; returns the model change."""
    if len(data) < 1:
        raise UsageError("local dataset is empty")
    params = np.asarray(global_params, dtype=float).copy()
    n = len(data)
    batch = min(spec.batch_size, n)
    n_batches = n // batch  # remainder dropped
    for _ in range(spec.local_epochs):
        perm = rng.permutation(n)
        for b in range(n_batches):
            sl = perm[b * batch : (b + 1) * batch]
            _, grad = model.loss_and_gradient(params, data.subset(sl))
            params -= spec.learning_rate * grad
    return params - np.asarray(global_params, dtype=float)


def global_update(global_params: np.ndarray, aggregated: np.ndarray) -> np.ndarray:
    g = np.asarray(global_params, dtype=float)
    a = np.asarray(aggregated, dtype=float)
    if g.shape != a.shape:
        raise DimensionError("aggregated update does not match the model")
    return g + a


def evaluate(params: np.ndarray, test: Dataset, model) -> float:
    """Fraction of argmax-correct predictions (ties to the lowest class)."""
    if len(test) < 1:
        raise UsageError("test set is empty")
    pred = np.argmax(model.logits(params, test.features), axis=1)
    return float(np.mean(pred == test.labels))
