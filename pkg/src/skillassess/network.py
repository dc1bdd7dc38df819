"""The mastery-prediction network, trained from scratch.

Fully-connected feed-forward net: ReLU hidden layers, sigmoid outputs.
Input and output width both equal the ontology size; the input is the
encoded assessment state, the output a per-skill mastery probability.
Training is plain seeded mini-batch gradient descent with backpropagation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from skillassess.ontology import encode_input
from skillassess.simulate import TrainingExample

MODEL_FORMAT = "mastery-network/1"

LOSS_KINDS = ("squared", "absolute")


class NumericFaultError(ArithmeticError):
    """A forward pass produced a non-finite value."""


class TrainingFault(ArithmeticError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training loss became non-finite in epoch {epoch}")


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkArchitecture:
    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 3:
            raise ValueError("need at least one hidden layer")
        if sizes[0] != sizes[-1]:
            raise ValueError("input and output width must both equal the skill count")
        if any(s < 1 for s in sizes):
            raise ValueError("layer sizes must be positive")

    @property
    def n_skills(self) -> int:
        return self.layer_sizes[0]

    @classmethod
    def default_for(cls, n_skills: int, hidden_layers: int = 2) -> "NetworkArchitecture":
        hidden = (2 * n_skills,) * hidden_layers
        return cls((n_skills, *hidden, n_skills))


@dataclass(frozen=True)
class TrainingConfig:
    loss_kind: str = "squared"
    learning_rate: float = 0.8
    epochs: int = 60
    batch_size: int = 32
    rng_seed: int = 0
    init_scale: float = 1.0

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("learning_rate, epochs and batch_size must be positive")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")


@dataclass(frozen=True)
class TrainedModel:
    architecture: NetworkArchitecture
    weights: tuple[np.ndarray, ...]  # per layer, shape (out, in)
    biases: tuple[np.ndarray, ...]  # per layer, shape (out,)
    provenance: dict = field(default_factory=dict)

    @property
    def n_skills(self) -> int:
        return self.architecture.n_skills


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_parameters(
    arch: NetworkArchitecture, rng: np.random.Generator, init_scale: float = 1.0
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Symmetric uniform init scaled by 1/sqrt(fan_in)."""
    weights, biases = [], []
    sizes = arch.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = init_scale / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def zero_model(n_skills: int, hidden: int = 1) -> TrainedModel:
    """All-zero parameters: outputs are 0.5 everywhere (sigmoid of 0)."""
    arch = NetworkArchitecture((n_skills, hidden, n_skills))
    weights = (np.zeros((hidden, n_skills)), np.zeros((n_skills, hidden)))
    biases = (np.zeros(hidden), np.zeros(n_skills))
    return TrainedModel(arch, weights, biases, provenance={"kind": "zero-stub"})


def _forward_batch(
    weights: Sequence[np.ndarray], biases: Sequence[np.ndarray], x: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Returns (pre-activations, activations); activations[0] is the input."""
    pre: list[np.ndarray] = []
    acts: list[np.ndarray] = [x]
    a = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w.T + b
        pre.append(z)
        a = _sigmoid(z) if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return pre, acts


def forward(model: TrainedModel, assessment: np.ndarray) -> np.ndarray:
    """Mastery probabilities for one assessment state."""
    x = encode_input(assessment)[None, :]
    _, acts = _forward_batch(model.weights, model.biases, x)
    out = acts[-1][0]
    if not np.all(np.isfinite(out)):
        raise NumericFaultError("non-finite network output")
    return out


def apriori(model: TrainedModel) -> np.ndarray:
    """Probabilities for the entirely unassessed state: the learned prior."""
    return forward(model, np.zeros(model.n_skills, dtype=np.int8))


def loss(output: np.ndarray, target: np.ndarray, loss_kind: str = "squared") -> float:
    output = np.asarray(output, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if output.shape != target.shape:
        raise ValueError("output and target lengths differ")
    diff = output - target
    if loss_kind == "squared":
        return float(np.mean(diff * diff))
    if loss_kind == "absolute":
        return float(np.mean(np.abs(diff)))
    raise ValueError(f"unknown loss kind {loss_kind!r}")


def _loss_grad(output: np.ndarray, target: np.ndarray, loss_kind: str) -> np.ndarray:
    n = output.shape[-1]
    diff = output - target
    if loss_kind == "squared":
        return 2.0 * diff / n
    return np.sign(diff) / n


def _backprop(
    weights: Sequence[np.ndarray],
    pre: Sequence[np.ndarray],
    acts: Sequence[np.ndarray],
    targets: np.ndarray,
    loss_kind: str,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of the batch-mean loss w.r.t. every weight and bias."""
    batch = targets.shape[0]
    out = acts[-1]
    delta = _loss_grad(out, targets, loss_kind) * out * (1.0 - out) / batch
    grads_w: list[np.ndarray] = [np.empty(0)] * len(weights)
    grads_b: list[np.ndarray] = [np.empty(0)] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = delta.T @ acts[layer]
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer]) * (pre[layer - 1] > 0)
    return grads_w, grads_b


def dataset_matrices(dataset: Sequence[TrainingExample]) -> tuple[np.ndarray, np.ndarray]:
    inputs = np.stack([encode_input(ex.input) for ex in dataset])
    targets = np.stack([ex.target for ex in dataset])
    return inputs, targets


def dataset_fingerprint(dataset: Sequence[TrainingExample]) -> str:
    digest = hashlib.sha256()
    for ex in dataset:
        digest.update(np.asarray(ex.input, dtype=np.int8).tobytes())
        digest.update(np.asarray(ex.target, dtype=np.float64).tobytes())
    return digest.hexdigest()


def train(
    dataset: Sequence[TrainingExample],
    arch: NetworkArchitecture,
    config: TrainingConfig,
    provenance_extra: dict | None = None,
) -> TrainedModel:
    """Seeded mini-batch gradient descent on the simulated dataset."""
    if not dataset:
        raise ValueError("dataset is empty")
    inputs, targets = dataset_matrices(dataset)
    if inputs.shape[1] != arch.n_skills:
        raise ValueError("dataset width does not match architecture")
    rng = np.random.default_rng(config.rng_seed)
    weights, biases = init_parameters(arch, rng, config.init_scale)

    def full_loss() -> float:
        _, acts = _forward_batch(weights, biases, inputs)
        return loss(acts[-1].ravel(), targets.ravel(), config.loss_kind)

    initial_loss = full_loss()
    count = inputs.shape[0]
    final_epoch_loss = initial_loss
    for epoch in range(config.epochs):
        order = rng.permutation(count)
        epoch_loss = 0.0
        for start in range(0, count, config.batch_size):
            batch = order[start : start + config.batch_size]
            x, t = inputs[batch], targets[batch]
            pre, acts = _forward_batch(weights, biases, x)
            batch_loss = loss(acts[-1].ravel(), t.ravel(), config.loss_kind)
            if not np.isfinite(batch_loss):
                raise TrainingFault(epoch)
            epoch_loss += batch_loss * len(batch)
            grads_w, grads_b = _backprop(weights, pre, acts, t, config.loss_kind)
            for layer in range(len(weights)):
                weights[layer] -= config.learning_rate * grads_w[layer]
                biases[layer] -= config.learning_rate * grads_b[layer]
        final_epoch_loss = epoch_loss / count

    provenance = {
        "config": {
            "loss_kind": config.loss_kind,
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "rng_seed": config.rng_seed,
            "init_scale": config.init_scale,
        },
        "dataset_fingerprint": dataset_fingerprint(dataset),
        "example_count": count,
        "initial_loss": initial_loss,
        "final_epoch_loss": final_epoch_loss,
        "final_loss": full_loss(),
    }
    if provenance_extra:
        provenance.update(provenance_extra)
    return TrainedModel(
        architecture=arch,
        weights=tuple(w.copy() for w in weights),
        biases=tuple(b.copy() for b in biases),
        provenance=provenance,
    )


def grad_check(
    arch: NetworkArchitecture,
    example: TrainingExample,
    step: float = 1e-5,
    loss_kind: str = "squared",
    rng_seed: int = 0,
    params: tuple[Sequence[np.ndarray], Sequence[np.ndarray]] | None = None,
) -> float:
    """Max relative discrepancy between analytic and central-difference grads."""
    if step <= 0:
        raise ValueError("step must be positive")
    if params is None:
        rng = np.random.default_rng(rng_seed)
        weights, biases = init_parameters(arch, rng)
    else:
        weights = [np.array(w, dtype=np.float64) for w in params[0]]
        biases = [np.array(b, dtype=np.float64) for b in params[1]]
    x = encode_input(example.input)[None, :]
    t = example.target[None, :]
    pre, acts = _forward_batch(weights, biases, x)
    grads_w, grads_b = _backprop(weights, pre, acts, t, loss_kind)

    def loss_at() -> float:
        _, a = _forward_batch(weights, biases, x)
        return loss(a[-1][0], t[0], loss_kind)

    worst = 0.0
    for analytic, param in zip(grads_w + grads_b, list(weights) + list(biases)):
        flat_param = param.reshape(-1)
        flat_grad = analytic.reshape(-1)
        for i in range(flat_param.size):
            orig = flat_param[i]
            flat_param[i] = orig + step
            up = loss_at()
            flat_param[i] = orig - step
            down = loss_at()
            flat_param[i] = orig
            numeric = (up - down) / (2.0 * step)
            denom = max(abs(numeric), abs(flat_grad[i]), 1e-8)
            worst = max(worst, abs(numeric - flat_grad[i]) / denom)
    return worst


# ---------------------------------------------------------------------------
# Model file format (JSON, exact float round-trip)


def save_model(model: TrainedModel, path) -> None:
    if not model.provenance:
        raise ModelFormatError("refusing to save a model without provenance")
    doc = {
        "format": MODEL_FORMAT,
        "layer_sizes": list(model.architecture.layer_sizes),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "provenance": model.provenance,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"unsupported model format {doc.get('format')!r}")
    if "provenance" not in doc or not isinstance(doc["provenance"], dict) or not doc["provenance"]:
        raise ModelFormatError("model file is missing its provenance block")
    arch = NetworkArchitecture(tuple(doc["layer_sizes"]))
    sizes = arch.layer_sizes
    weights, biases = [], []
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        try:
            w = np.asarray(doc["weights"][layer], dtype=np.float64)
            b = np.asarray(doc["biases"][layer], dtype=np.float64)
        except (ValueError, IndexError, TypeError) as exc:
            raise ModelFormatError(f"layer {layer}: malformed parameters") from exc
        if w.shape != (fan_out, fan_in) or b.shape != (fan_out,):
            raise ModelFormatError(
                f"layer {layer}: stored shapes {w.shape}/{b.shape} do not match "
                f"declared sizes {(fan_out, fan_in)}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ModelFormatError(f"layer {layer}: non-finite parameters")
        weights.append(w)
        biases.append(b)
    return TrainedModel(arch, tuple(weights), tuple(biases), provenance=doc["provenance"])
