"""Softmax classifier with cross-entropy training and class re-weighting.

Training is plain gradient descent (full batch by default, optional seeded
mini-batches).  Predicted scores can be re-weighted by per-class positive
factors before the argmax; the default weight vector used by the experiment
configs reflects square-root class frequencies of an emotion corpus.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, EmptyDataset
from .numeric import check_mat, check_vec, softmax
from .rng import Rng

# square-root sample-count weights for the 7 emotion classes
DEFAULT_CLASS_WEIGHTS = (0.15, 0.097, 0.129, 0.185, 0.138, 0.082, 0.215)


@dataclass
class SoftmaxParams:
    weight: np.ndarray  # (C, d_in)
    bias: np.ndarray    # (C,)

    @property
    def classes(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def init(cls, classes: int, d_in: int, rng: Rng) -> "SoftmaxParams":
        scale = 1.0 / np.sqrt(d_in)
        return cls(weight=rng.uniform_mat(classes, d_in, -scale, scale),
                   bias=np.zeros(classes))


@dataclass
class ClassWeights:
    weights: np.ndarray  # (C,), strictly positive

    def __post_init__(self):
        self.weights = check_vec(self.weights, "class weights")
        if np.any(self.weights <= 0.0):
            raise ValueError("class weights must be strictly positive")


@dataclass
class ClassScores:
    probs: np.ndarray  # (C,), nonnegative, sums to 1

    def __post_init__(self):
        self.probs = check_vec(self.probs, "class scores")
        if np.any(self.probs < 0.0) or abs(float(np.sum(self.probs)) - 1.0) > 1e-9:
            raise ValueError("class scores must be a probability vector")


def softmax_forward(x: np.ndarray, params: SoftmaxParams) -> ClassScores:
    x = check_vec(x, "classifier input")
    w = check_mat(params.weight, "classifier weight")
    if w.shape[1] != x.shape[0]:
        raise DimMismatch(f"input dim {x.shape[0]} != weight cols {w.shape[1]}")
    return ClassScores(probs=softmax(w @ x + params.bias))


def xent_loss_grad(x: np.ndarray, label: int, params: SoftmaxParams):
    """Single-sample cross-entropy loss and hand-derived gradients.

    Returns (loss, d_weight, d_bias, d_x); d_logits = probs - onehot(label).
    """
    scores = softmax_forward(x, params)
    probs = scores.probs
    loss = -float(np.log(max(probs[label], 1e-300)))
    d_logits = probs.copy()
    d_logits[label] -= 1.0
    d_weight = np.outer(d_logits, x)
    d_bias = d_logits
    d_x = params.weight.T @ d_logits
    return loss, d_weight, d_bias, d_x


def train(features, labels, params: SoftmaxParams, lr: float, epochs: int,
          rng: Rng | None = None, batch_size: int | None = None):
    """Gradient-descent training; returns (trained params, per-epoch loss curve).

    Full-batch by default.  With ``batch_size`` set, sample order is shuffled
    each epoch by the supplied rng (required then) for mini-batch steps.
    """
    xs = [check_vec(x, "feature") for x in features]
    ys = list(labels)
    if len(xs) == 0:
        raise EmptyDataset("no training samples")
    if len(xs) != len(ys):
        raise DimMismatch(f"{len(xs)} features but {len(ys)} labels")
    if lr < 0:
        raise ValueError("lr must be >= 0")
    if batch_size is not None and rng is None:
        raise ValueError("mini-batch training needs an rng for shuffling")

    weight = params.weight.copy()
    bias = params.bias.copy()
    curve = []
    n = len(xs)
    for _ in range(epochs):
        order = list(range(n))
        if batch_size is not None:
            rng.shuffle(order)
        batches = ([order] if batch_size is None else
                   [order[i:i + batch_size] for i in range(0, n, batch_size)])
        total = 0.0
        for batch in batches:
            p = SoftmaxParams(weight=weight, bias=bias)
            gw = np.zeros_like(weight)
            gb = np.zeros_like(bias)
            for i in batch:
                loss, dw, db, _ = xent_loss_grad(xs[i], ys[i], p)
                total += loss
                gw += dw
                gb += db
            weight = weight - lr * gw / len(batch)
            bias = bias - lr * gb / len(batch)
        curve.append(total / n)
    return SoftmaxParams(weight=weight, bias=bias), curve


def apply_class_weights(scores: ClassScores, weights: ClassWeights):
    """Multiply scores by per-class weights (no renormalization) and argmax.

    Ties break toward the lowest index.  Returns (reweighted, predicted).
    """
    probs = scores.probs
    w = weights.weights
    if probs.shape != w.shape:
        raise DimMismatch(f"scores dim {probs.shape} != weights dim {w.shape}")
    reweighted = probs * w
    return reweighted, int(np.argmax(reweighted))
