"""Desk-scale similarity experiments built on :mod:`repsim.simnet`.

Two related synthetic tasks stand in for two languages: task ``a`` is the
target task (and supplies the shared probe set), task ``b`` is the source
task for transfer.  Suites:

``untrained_vs_trained``
    untrained, standard and transfer-freeze (b -> a) networks.
``transfer_freeze``
    standard on a, standard on b, transfer-freeze (b -> a).
``random_features``
    the standard network on a plus random_above(n) for n = 1 .. L-1.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .activation_io import ActivationSet, write_activation_set
from .simnet import (
    NetSpec, Params, Recipe, Task, TrainConfig, evaluate_accuracy, forward_collect,
    init_params, make_task, train,
)

logger = logging.getLogger(__name__)

SUITES = ("untrained_vs_trained", "transfer_freeze", "random_features")
ACCURACY_COLUMNS = ("network", "recipe", "n_random_layers", "top1")


@dataclass(frozen=True)
class ExperimentConfig:
    # defaults were picked so that two standard nets show clear diagonal dominance
    input_dim: int = 8
    n_classes: int = 10
    clusters_per_class: int = 6
    separation: float = 2.0
    noise: float = 1.0
    task_mix: float = 0.5
    hidden: tuple[int, ...] = (64, 64, 64, 64, 64)
    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 0.02
    n_train: int = 2000
    n_probe: int = 500
    n_eval: int = 2000
    seed: int = 0

    @property
    def spec(self) -> NetSpec:
        return NetSpec((self.input_dim, *self.hidden, self.n_classes))

    def tasks(self) -> tuple[Task, Task]:
        a = make_task(self.n_classes, self.input_dim, self.seed + 1,
                      clusters_per_class=self.clusters_per_class,
                      separation=self.separation, noise=self.noise, name="a")
        b = make_task(self.n_classes, self.input_dim, self.seed + 2,
                      clusters_per_class=self.clusters_per_class,
                      separation=self.separation, noise=self.noise,
                      base=a, mix=self.task_mix, name="b")
        return a, b

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(self.epochs, self.batch_size, self.learning_rate, seed, self.n_train)

    @property
    def probe_id(self) -> str:
        return f"task-a/seed{self.seed}/n{self.n_probe}"


@dataclass
class Network:
    name: str
    recipe: Recipe
    task: str
    params: Params
    top1: float
    trained: bool = True


@dataclass
class ExperimentResult:
    suite: str
    config: ExperimentConfig
    networks: dict[str, Network]
    sets: dict[str, ActivationSet]
    accuracy: list[dict] = field(default_factory=list)


class Lab:
    """Trains and caches the networks shared by several suites."""

    def __init__(self, config: ExperimentConfig | None = None):
        self.config = config or ExperimentConfig()
        self.spec = self.config.spec
        self.task_a, self.task_b = self.config.tasks()
        self.probe, _ = self.task_a.sample(self.config.n_probe, seed=[self.config.seed, 99])
        self._nets: dict[str, Network] = {}

    def _fit(self, name, recipe, task, seed) -> Network:
        if name not in self._nets:
            logger.info("training %s (%s)", name, recipe.variant)
            params = train(self.spec, task, recipe, self.config.train_config(seed))
            top1 = evaluate_accuracy(params, task, self.config.n_eval, seed=[self.config.seed, 98])
            self._nets[name] = Network(name, recipe, task.name, params, top1,
                                       trained=recipe.variant != "untrained")
        return self._nets[name]

    def standard(self, task="a", replica=0) -> Network:
        t = self.task_a if task == "a" else self.task_b
        offset = {"a": 11, "b": 13}[task] + 100 * replica
        suffix = f"_r{replica}" if replica else ""
        return self._fit(f"standard_{task}{suffix}", Recipe.standard(), t, self.config.seed + offset)

    def untrained(self) -> Network:
        return self._fit("untrained", Recipe.untrained(), self.task_a, self.config.seed + 15)

    def freeze(self, task="a") -> Network:
        t = self.task_a if task == "a" else self.task_b
        return self._fit(f"freeze_{task}", Recipe.freeze(), t, self.config.seed + 16)

    def transfer_freeze(self) -> Network:
        source = self.standard("b").params
        return self._fit("transfer_freeze_b_to_a", Recipe.transfer_freeze(source),
                         self.task_a, self.config.seed + 14)

    def random_above(self, n: int) -> Network:
        return self._fit(f"random_{n}", Recipe.random_above(n), self.task_a,
                         self.config.seed + 20 + n)

    def activations(self, net: Network) -> ActivationSet:
        layers = forward_collect(net.params, self.probe, self.spec.layer_names)
        return ActivationSet(self.config.probe_id, tuple(layers))

    def init_params(self, net: Network) -> Params:
        """The initialization a network started from (its source, for transfer)."""
        if net.recipe.variant == "transfer_freeze":
            return net.recipe.source
        return init_params(self.spec, net.params.seed)


def accuracy_row(net: Network) -> dict:
    return {
        "network": net.name,
        "recipe": net.recipe.variant,
        "n_random_layers": net.recipe.n_random_layers,
        "top1": f"{net.top1:.6f}",
    }


def write_accuracy_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=ACCURACY_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def read_accuracy_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def run_experiment(suite: str, out_dir=None, config: ExperimentConfig | None = None,
                   lab: Lab | None = None) -> ExperimentResult:
    """Train the networks a suite needs and measure them on the shared probe set.

    With ``out_dir`` set, each network's activations go to
    ``out_dir/<network>/`` (RSAM files + manifest.json) and the accuracy
    table to ``out_dir/accuracy.csv``.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    lab = lab or Lab(config)
    L = lab.spec.n_layers
    if suite == "untrained_vs_trained":
        shown = [lab.untrained(), lab.standard("a"), lab.transfer_freeze()]
        reported = [lab.standard("a"), lab.standard("b"), lab.transfer_freeze()]
    elif suite == "transfer_freeze":
        shown = [lab.standard("a"), lab.standard("b"), lab.transfer_freeze()]
        reported = shown
    else:
        randoms = [lab.random_above(n) for n in range(1, L)]
        shown = [lab.standard("a"), *randoms]
        reported = randoms

    networks = {net.name: net for net in shown}
    sets = {net.name: lab.activations(net) for net in shown}
    rows = [accuracy_row(net) for net in reported]
    result = ExperimentResult(suite, lab.config, networks, sets, rows)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, aset in sets.items():
            write_activation_set(out_dir / name, aset)
        write_accuracy_csv(out_dir / "accuracy.csv", rows)
    return result
