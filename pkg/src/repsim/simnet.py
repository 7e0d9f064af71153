"""Toy feedforward ReLU networks trained with plain minibatch SGD.

Supports the training recipes compared in the similarity experiments:

* ``standard``: every parameter is updated on every step;
* ``untrained``: the random initialization is returned as is;
* ``freeze``: layers stop training one at a time in depth order, so that by
  the last epochs only the output layer is still updated;
* ``random_above(n)``: layers 1..n keep their initialization forever;
* ``transfer_freeze(source)``: start from ``source`` (trained on another
  task) and apply the freeze schedule on the new task.

Weights are stored as (fan_in, fan_out) matrices and activations as rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeMismatch
from .metrics import DataMatrix

VARIANTS = ("standard", "untrained", "freeze", "random_above", "transfer_freeze")


@dataclass(frozen=True)
class NetSpec:
    layer_widths: tuple[int, ...]
    nonlinearity: str = "relu"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 4:
            raise ConfigError("a network needs at least 3 weight layers")
        if min(widths) < 1:
            raise ConfigError(f"layer widths must be positive, got {widths}")
        if self.nonlinearity != "relu":
            raise ConfigError(f"unsupported nonlinearity {self.nonlinearity!r}")
        object.__setattr__(self, "layer_widths", widths)

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def layer_names(self) -> list[str]:
        return [f"l{i}" for i in range(1, self.n_layers + 1)]


@dataclass
class Params:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int | None = None

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def copy(self) -> Params:
        return Params([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.seed)

    def matches(self, spec: NetSpec) -> bool:
        return self.widths == spec.layer_widths

    def equal(self, other: Params) -> bool:
        """Bitwise equality of all weights and biases."""
        return self.n_layers == other.n_layers and all(
            np.array_equal(a, b) for a, b in zip(self.weights + self.biases, other.weights + other.biases)
        )


@dataclass(frozen=True)
class Recipe:
    variant: str = "standard"
    n: int | None = None
    epochs_per_freeze: int | None = None
    source: Params | None = field(default=None, compare=False, repr=False)

    @classmethod
    def standard(cls):
        return cls("standard")

    @classmethod
    def untrained(cls):
        return cls("untrained")

    @classmethod
    def freeze(cls, epochs_per_freeze=None):
        return cls("freeze", epochs_per_freeze=epochs_per_freeze)

    @classmethod
    def random_above(cls, n):
        return cls("random_above", n=n)

    @classmethod
    def transfer_freeze(cls, source, epochs_per_freeze=None):
        return cls("transfer_freeze", source=source, epochs_per_freeze=epochs_per_freeze)

    @property
    def n_random_layers(self) -> int:
        return self.n if self.variant == "random_above" else 0

    def validate(self, spec: NetSpec):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown recipe {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == "random_above":
            if self.n is None or not 1 <= self.n <= spec.n_layers - 1:
                raise ConfigError(
                    f"random_above needs 1 <= n <= {spec.n_layers - 1}, got {self.n}"
                )
        if self.variant == "transfer_freeze":
            if self.source is None:
                raise ConfigError("transfer_freeze needs source parameters")
            if not self.source.matches(spec):
                raise ConfigError(
                    f"source widths {self.source.widths} do not match {spec.layer_widths}"
                )
        if self.epochs_per_freeze is not None and self.epochs_per_freeze < 0:
            raise ConfigError("epochs_per_freeze must be >= 0")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0
    n_train: int = 2000

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0 or self.n_train < 1:
            raise ConfigError(f"invalid training config {self}")


@dataclass(frozen=True, eq=False)
class Task:
    """Gaussian cluster classification: each class is a mixture of isotropic blobs.

    ``means`` has shape (n_classes, clusters_per_class, input_dim).
    """

    means: np.ndarray
    noise: float = 1.0
    name: str = "task"

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    @property
    def input_dim(self) -> int:
        return self.means.shape[2]

    def sample(self, count: int, seed: int):
        """Draw ``count`` labelled points; classes are balanced to within one sample."""
        rng = np.random.default_rng(seed)
        labels = rng.permutation(np.arange(count) % self.n_classes)
        cluster = rng.integers(0, self.means.shape[1], size=count)
        x = self.means[labels, cluster] + self.noise * rng.standard_normal((count, self.input_dim))
        return x, labels


def make_task(n_classes: int, input_dim: int, seed: int, *, clusters_per_class: int = 1,
              separation: float = 3.0, noise: float = 1.0, base: Task | None = None,
              mix: float = 0.0, name: str = "task") -> Task:
    """Build a seeded task.

    With ``base`` given, the new class means are ``mix * base.means +
    sqrt(1 - mix**2) * fresh``, so the two tasks share structure in
    proportion to ``mix``.
    """
    rng = np.random.default_rng(seed)
    fresh = separation * rng.standard_normal((n_classes, clusters_per_class, input_dim))
    if base is None:
        return Task(fresh, noise, name)
    if base.means.shape != fresh.shape:
        raise ConfigError("a related task must match the base task's shape")
    if not 0.0 <= mix <= 1.0:
        raise ConfigError(f"mix must lie in [0, 1], got {mix}")
    return Task(mix * base.means + math.sqrt(1.0 - mix * mix) * fresh, noise, name)


def init_params(spec: NetSpec, seed: int) -> Params:
    """He-normal weights (std sqrt(2 / fan_in)) and zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * math.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return Params(weights, biases, seed)


def _forward(p: Params, x: np.ndarray):
    """Pre-activations and activations per layer; the last layer stays linear."""
    if x.ndim != 2 or x.shape[1] != p.weights[0].shape[0]:
        raise ShapeMismatch(
            f"input has shape {x.shape}, network expects width {p.weights[0].shape[0]}"
        )
    pre, post = [], []
    h = x
    last = p.n_layers - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w + b
        h = z if i == last else np.maximum(z, 0.0)
        pre.append(z)
        post.append(h)
    return pre, post


def forward_collect(p: Params, inputs, names=None) -> list[DataMatrix]:
    """Post-ReLU hidden activations and pre-softmax logits, in depth order."""
    _, post = _forward(p, np.asarray(inputs, dtype=np.float64))
    names = names or [f"l{i}" for i in range(1, p.n_layers + 1)]
    return [DataMatrix(h, name) for h, name in zip(post, names)]


def predict(p: Params, inputs) -> np.ndarray:
    _, post = _forward(p, np.asarray(inputs, dtype=np.float64))
    return np.argmax(post[-1], axis=1)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss(p: Params, x, y) -> float:
    """Mean softmax cross-entropy."""
    _, post = _forward(p, np.asarray(x, dtype=np.float64))
    z = post[-1] - post[-1].max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-np.mean(logp[np.arange(len(y)), y]))


def gradients(p: Params, x, y, lowest: int = 0):
    """Gradients of mean cross-entropy w.r.t. each weight and bias.

    Layers below index ``lowest`` (0-based) get ``None`` so frozen prefixes
    are not back-propagated through.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if len(y) == 0:
        raise ValueError("empty batch")
    pre, post = _forward(p, x)
    n_layers = p.n_layers
    delta = _softmax(post[-1])
    delta[np.arange(len(y)), y] -= 1.0
    delta /= len(y)
    gw = [None] * n_layers
    gb = [None] * n_layers
    for i in range(n_layers - 1, lowest - 1, -1):
        below = post[i - 1] if i > 0 else x
        gw[i] = below.T @ delta
        gb[i] = delta.sum(axis=0)
        if i > lowest:
            delta = (delta @ p.weights[i].T) * (pre[i - 1] > 0)
    return gw, gb


def freeze_epochs(recipe: Recipe, n_layers: int, epochs: int) -> list[float]:
    """Epoch at whose start each layer (in depth order) stops training.

    ``inf`` means never frozen; 0 means never trained.
    """
    if recipe.variant == "untrained":
        return [0] * n_layers
    if recipe.variant == "random_above":
        return [0] * recipe.n + [math.inf] * (n_layers - recipe.n)
    if recipe.variant in ("freeze", "transfer_freeze"):
        if recipe.epochs_per_freeze is None:
            at = [(i * epochs) // n_layers for i in range(1, n_layers)]
        else:
            at = [i * recipe.epochs_per_freeze for i in range(1, n_layers)]
        return at + [math.inf]
    return [math.inf] * n_layers


def train(spec: NetSpec, task: Task, recipe: Recipe, config: TrainConfig, *,
          init: Params | None = None) -> Params:
    """Minibatch SGD on softmax cross-entropy under ``recipe``.

    Initialization uses ``config.seed`` unless ``init`` is given (or the
    recipe is transfer_freeze, which starts from its source).
    """
    recipe.validate(spec)
    if task.input_dim != spec.layer_widths[0] or task.n_classes != spec.layer_widths[-1]:
        raise ConfigError(
            f"task ({task.input_dim} inputs, {task.n_classes} classes) does not fit "
            f"widths {spec.layer_widths}"
        )
    if recipe.variant == "transfer_freeze":
        p = recipe.source.copy()
    elif init is not None:
        if not init.matches(spec):
            raise ConfigError(f"init widths {init.widths} do not match {spec.layer_widths}")
        p = init.copy()
    else:
        p = init_params(spec, config.seed)
    if recipe.variant == "untrained":
        return p

    stop = freeze_epochs(recipe, spec.n_layers, config.epochs)
    x, y = task.sample(config.n_train, seed=[config.seed, 2])
    rng = np.random.default_rng([config.seed, 1])
    lr = config.learning_rate
    for epoch in range(config.epochs):
        live = [i for i in range(spec.n_layers) if epoch < stop[i]]
        order = rng.permutation(config.n_train)
        if not live:
            continue
        for start in range(0, config.n_train, config.batch_size):
            idx = order[start:start + config.batch_size]
            gw, gb = gradients(p, x[idx], y[idx], lowest=live[0])
            for i in live:
                p.weights[i] -= lr * gw[i]
                p.biases[i] -= lr * gb[i]
    return p


def evaluate_accuracy(p: Params, task: Task, n_samples: int, seed: int) -> float:
    """Top-1 accuracy on a freshly sampled evaluation set."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x, y = task.sample(n_samples, seed)
    return float(np.mean(predict(p, x) == y))
