"""Mini-batch training of embedding models against partial clusterings.

The pipeline per step: embed the batch, build pairwise similarities, take
the Monte-Carlo partial loss and its similarity gradient, chain it back to
the parameters, and apply one first-order update.  Optimizers are written
out here (plain SGD and Adam) so the package has no autodiff or deep
learning dependency.

Supervision comes either as per-point labels (entries may be None for
unlabeled points, and labeled_fraction can mask labels off globally) or as
a full PartialMembership whose batch restrictions are taken per step.
Batches whose constraints cannot be satisfied with k clusters (for example
a fully labeled batch that drew fewer than k classes) are skipped with a
warning and counted, not fatal.

Everything downstream of config.seed is deterministic, including across
thread counts: batch order comes from a private Generator, the Monte-Carlo
loss has its own counter-based streams, and evaluation walks fixed blocks.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    InfeasibleConstraints,
    PartialMembership,
    clustering_error,
    membership_from_labels,
    partial_from_labeled_subset,
)
from .losses import perturbed_partial_fy_loss
from .models import (
    model_from_arch,
    pairwise_similarity,
    similarity_grad_to_embedding_grad,
)
from .perturb import PerturbationConfig
from .solver import max_spanning_forest

log = logging.getLogger(__name__)

_OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True)
class TrainConfig:
    """Everything the training loop needs besides the model and data.

    labeled_fraction masks labels globally (once, from the config seed)
    before any batching, so a point is either labeled for the whole run or
    never; use_bias picks the constrained solver's search mode for the loss
    gradient (on by default for training, see partial_fy_loss for the
    trade-off); stop_on_zero_val_error ends the run at the first evaluation
    whose validation error is exactly zero.
    """

    k: int
    batch_size: int
    learning_rate: float
    perturbation: PerturbationConfig
    optimizer: str = "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.0
    max_steps: int = 100
    eval_every: int = 25
    seed: int = 0
    labeled_fraction: float = 1.0
    use_bias: bool = True
    stop_on_zero_val_error: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.k > self.batch_size:
            raise ValueError(
                f"k={self.k} exceeds batch_size={self.batch_size}; "
                "batches could never hold k clusters"
            )
        if not self.learning_rate >= 0.0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in _OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {_OPTIMIZERS}")
        if not 0.0 < self.beta1 < 1.0 or not 0.0 < self.beta2 < 1.0:
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be >= 0")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if not 0.0 <= self.labeled_fraction <= 1.0:
            raise ValueError("labeled_fraction must lie in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


@dataclass
class EvalPoint:
    step: int
    train_error: float
    val_error: float | None


@dataclass
class TrainReport:
    """Loss trace, evaluation history, and the run's bookkeeping.

    optimizer and rng are the live objects in their end-of-run state, kept
    so a caller can checkpoint exactly where training stopped.
    """

    losses: list = field(default_factory=list)
    evals: list = field(default_factory=list)
    steps_run: int = 0
    skipped_batches: int = 0
    final_params: np.ndarray | None = None
    wall_clock_seconds: float = 0.0
    optimizer: object | None = None
    rng: np.random.Generator | None = None

    def final_val_error(self) -> float | None:
        for point in reversed(self.evals):
            if point.val_error is not None:
                return point.val_error
        return None


class SGD:
    """Vanilla gradient step; weight decay enters as an L2 gradient term."""

    kind = "sgd"

    def __init__(self, learning_rate: float, weight_decay: float = 0.0):
        self.learning_rate = float(learning_rate)
        self.weight_decay = float(weight_decay)

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.weight_decay:
            grad = grad + self.weight_decay * params
        return params - self.learning_rate * grad

    def state(self) -> dict:
        return {
            "kind": self.kind,
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
        }

    @classmethod
    def from_state(cls, state: dict) -> "SGD":
        return cls(state["learning_rate"], state["weight_decay"])


class Adam:
    """Adam with bias correction; weight decay enters as an L2 gradient term
    (classic Adam rather than the decoupled variant)."""

    kind = "adam"

    def __init__(
        self,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        weight_decay: float = 0.0,
        eps: float = 1e-8,
    ):
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.weight_decay = float(weight_decay)
        self.eps = float(eps)
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.weight_decay:
            grad = grad + self.weight_decay * params
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)

    def state(self) -> dict:
        return {
            "kind": self.kind,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "weight_decay": self.weight_decay,
            "eps": self.eps,
            "t": self.t,
            "m": None if self.m is None else self.m.tolist(),
            "v": None if self.v is None else self.v.tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "Adam":
        opt = cls(
            state["learning_rate"],
            state["beta1"],
            state["beta2"],
            state["weight_decay"],
            state["eps"],
        )
        opt.t = int(state["t"])
        if state["m"] is not None:
            opt.m = np.asarray(state["m"], dtype=np.float64)
            opt.v = np.asarray(state["v"], dtype=np.float64)
        return opt


def make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return SGD(config.learning_rate, config.weight_decay)
    return Adam(config.learning_rate, config.beta1, config.beta2, config.weight_decay)


def optimizer_from_state(state: dict):
    if state["kind"] == "sgd":
        return SGD.from_state(state)
    if state["kind"] == "adam":
        return Adam.from_state(state)
    raise ValueError(f"unknown optimizer kind {state['kind']!r}")


def loss_and_weight_grad(
    model,
    X_batch: np.ndarray,
    partial_batch: PartialMembership,
    k: int,
    perturbation: PerturbationConfig,
    use_bias: bool = True,
    threads: int = 1,
):
    """One batch's loss and flat parameter gradient.

    Chains the Monte-Carlo similarity gradient through the negated squared
    distances and the model's reverse pass; see the models module for the
    per-factor conventions.
    """
    embeddings, cache = model.embed_with_cache(X_batch)
    sigma = pairwise_similarity(embeddings)
    loss = perturbed_partial_fy_loss(
        sigma, k, partial_batch, perturbation, use_bias=use_bias, threads=threads
    )
    d_embeddings = similarity_grad_to_embedding_grad(loss.grad_sigma, embeddings)
    return loss.value, model.weight_grad(cache, d_embeddings)


def _batch_partial(labels_or_partial, indices) -> PartialMembership:
    if isinstance(labels_or_partial, PartialMembership):
        return labels_or_partial.restrict(indices)
    batch_labels = [labels_or_partial[i] for i in indices]
    return partial_from_labeled_subset(batch_labels)


def _masked_labels(labels, fraction: float, rng: np.random.Generator):
    """Keep a fixed random fraction of the labels, dropping the rest to None.
    The kept set is drawn once per run, so masking is stable across epochs."""
    if fraction >= 1.0:
        return list(labels)
    n = len(labels)
    keep_count = int(np.floor(fraction * n))
    keep = set(rng.permutation(n)[:keep_count].tolist())
    return [labels[i] if i in keep else None for i in range(n)]


def evaluate_clustering(model, X: np.ndarray, labels, k: int, batch_size: int) -> float:
    """Hard clustering error over fixed sequential blocks, weighted by each
    block's entry count.  Blocks shorter than k are dropped (no k-forest
    exists there)."""
    n = X.shape[0]
    if labels is None or len(labels) != n or any(lbl is None for lbl in labels):
        raise ValueError("evaluation needs one non-None label per point")
    truth_all = np.asarray(labels)
    wrong = 0.0
    total = 0
    for lo in range(0, n, batch_size):
        hi = min(lo + batch_size, n)
        if hi - lo < k:
            continue
        block = slice(lo, hi)
        sigma = pairwise_similarity(model.embed(X[block]))
        predicted = max_spanning_forest(sigma, k).membership
        truth = membership_from_labels(truth_all[block])
        entries = (hi - lo) ** 2
        wrong += clustering_error(predicted, truth) * entries
        total += entries
    if total == 0:
        raise ValueError("no evaluation block is at least k points long")
    return wrong / total


def train(
    model,
    X: np.ndarray,
    labels_or_partial,
    config: TrainConfig,
    X_val: np.ndarray | None = None,
    val_labels=None,
    threads: int = 1,
) -> TrainReport:
    """Mini-batch first-order training; see the module docstring.

    Evaluation runs after every eval_every-th step and once more after the
    final step, on the training data and, when provided, the validation
    data.  Training labels are used for evaluation even where the loss saw
    them masked off, since evaluation measures recovery of the true
    clustering.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 1:
        raise ValueError("dataset is empty")
    if config.batch_size > n:
        raise ValueError(f"batch_size={config.batch_size} exceeds dataset size {n}")
    eval_labels = None
    if not isinstance(labels_or_partial, PartialMembership):
        if labels_or_partial is None or len(labels_or_partial) != n:
            raise ValueError("need one label entry (possibly None) per data point")
        eval_labels = list(labels_or_partial)
        if any(lbl is None for lbl in eval_labels):
            eval_labels = None
    if X_val is not None:
        X_val = np.asarray(X_val, dtype=np.float64)
        if val_labels is None or len(val_labels) != X_val.shape[0]:
            raise ValueError("validation data needs a full label vector")

    rng = np.random.default_rng(config.seed)
    supervision = labels_or_partial
    if not isinstance(labels_or_partial, PartialMembership):
        supervision = _masked_labels(labels_or_partial, config.labeled_fraction, rng)

    optimizer = make_optimizer(config)
    report = TrainReport()
    start = time.perf_counter()

    def run_eval(step: int) -> EvalPoint:
        train_error = (
            evaluate_clustering(model, X, eval_labels, config.k, config.batch_size)
            if eval_labels is not None
            else float("nan")
        )
        val_error = None
        if X_val is not None:
            val_error = evaluate_clustering(
                model, X_val, val_labels, config.k, config.batch_size
            )
        point = EvalPoint(step, train_error, val_error)
        report.evals.append(point)
        return point

    step = 0
    stop = config.max_steps == 0
    while not stop:
        order = rng.permutation(n)
        feasible_in_epoch = 0
        for lo in range(0, n, config.batch_size):
            indices = order[lo : lo + config.batch_size]
            if len(indices) < config.batch_size and len(indices) < config.k:
                break
            try:
                partial = _batch_partial(supervision, indices)
                loss_value, grad = loss_and_weight_grad(
                    model,
                    X[indices],
                    partial,
                    config.k,
                    config.perturbation,
                    use_bias=config.use_bias,
                    threads=threads,
                )
            except InfeasibleConstraints as exc:
                report.skipped_batches += 1
                log.warning("skipping infeasible batch at step %d: %s", step, exc)
                continue
            feasible_in_epoch += 1
            model.set_params(optimizer.step(model.get_params(), grad))
            step += 1
            report.losses.append(loss_value)
            if step % config.eval_every == 0:
                point = run_eval(step)
                if (
                    config.stop_on_zero_val_error
                    and point.val_error is not None
                    and point.val_error == 0.0
                ):
                    stop = True
                    break
            if step >= config.max_steps:
                stop = True
                break
        else:
            if feasible_in_epoch == 0:
                raise InfeasibleConstraints(
                    "every batch of an entire epoch was infeasible"
                )

    report.steps_run = step
    if not report.evals or report.evals[-1].step != step:
        if step > 0 or config.max_steps == 0:
            run_eval(step)
    report.final_params = model.get_params()
    report.optimizer = optimizer
    report.rng = rng
    report.wall_clock_seconds = time.perf_counter() - start
    return report


CHECKPOINT_FORMAT = 1


def save_checkpoint(path, model, optimizer, rng: np.random.Generator, step: int) -> None:
    """JSON checkpoint: architecture, flat weights, optimizer state, RNG
    state, and the step counter.  Field order is fixed for diffability."""
    blob = {
        "format": CHECKPOINT_FORMAT,
        "arch": model.arch,
        "params": model.get_params().tolist(),
        "optimizer": optimizer.state(),
        "rng_state": rng.bit_generator.state,
        "step": int(step),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path):
    """Returns (model, optimizer, rng, step) rebuilt from save_checkpoint."""
    with open(path, "r", encoding="utf-8") as fh:
        blob = json.load(fh)
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {blob.get('format')!r}")
    model = model_from_arch(blob["arch"], blob["params"])
    optimizer = optimizer_from_state(blob["optimizer"])
    state = blob["rng_state"]
    rng = np.random.default_rng()
    if state["bit_generator"] != rng.bit_generator.state["bit_generator"]:
        raise ValueError(
            f"checkpoint uses RNG {state['bit_generator']!r}; this build expects "
            f"{rng.bit_generator.state['bit_generator']!r}"
        )
    rng.bit_generator.state = state
    return model, optimizer, rng, int(blob["step"])
