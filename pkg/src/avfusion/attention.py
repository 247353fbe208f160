"""Intra-modal attention pooling.

Three mechanisms collapse a FeatureSet {f_1..f_n} into one vector:

* self-attention: a_i = sigmoid(f_i . w0), pooled = sum(a_i f_i) / sum(a_j)
* relation-attention: b_i = sigmoid([f_i : f_s] . w1) on top of the
  self-attention global vector f_s; pooled = sum(a_i b_i [f_i : f_s]) /
  sum(a_j b_j), dimension 2d.  Because f_s is common to every concatenated
  term, the trailing d entries of the pooled vector are f_s itself; the
  forward exploits that and copies f_s in exactly.
* transformer-attention: g_i = exp(u . tanh(W2 f_i + bias)), pooled =
  sum(g_i f_i) / sum(g_j); the normalized weights are computed in log space
  with max-subtraction so a uniform rescale of g can never overflow

Normalized weights are formed before pooling, so a single feature pools to
itself exactly (w_1 = a_1/a_1 = 1.0 in floating point too).  All three are
set functions: permuting the inputs permutes the returned weights and leaves
the pooled vector unchanged.  Every forward returns a cache; the matching
backward consumes it and produces hand-derived gradients for all parameters
and all input features.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, MissingForwardCache
from .features import FeatureSet
from .numeric import check_vec, sigmoid
from .rng import Rng


@dataclass
class SelfAttnParams:
    w0: np.ndarray  # (d,)

    @classmethod
    def init(cls, dim: int, rng: Rng) -> "SelfAttnParams":
        scale = 1.0 / np.sqrt(dim)
        return cls(w0=rng.uniform_vec(dim, -scale, scale))


@dataclass
class RelationAttnParams:
    w1: np.ndarray  # (2d,) applied to [f_i : f_s]

    @classmethod
    def init(cls, dim: int, rng: Rng) -> "RelationAttnParams":
        scale = 1.0 / np.sqrt(2 * dim)
        return cls(w1=rng.uniform_vec(2 * dim, -scale, scale))


@dataclass
class TransformerAttnParams:
    w2: np.ndarray  # (m, d)
    b: np.ndarray   # (m,)
    u: np.ndarray   # (m,)

    @classmethod
    def init(cls, dim: int, hidden: int, rng: Rng) -> "TransformerAttnParams":
        scale = 1.0 / np.sqrt(dim)
        w2 = rng.uniform_mat(hidden, dim, -scale, scale)
        return cls(w2=w2, b=np.zeros(hidden), u=np.zeros(hidden))


@dataclass
class SelfAttnCache:
    features: np.ndarray   # (n, d)
    w0: np.ndarray
    alpha: np.ndarray      # (n,) raw sigmoid gates
    alpha_sum: float
    norm_weights: np.ndarray
    pooled: np.ndarray


@dataclass
class SelfAttnResult:
    pooled: np.ndarray
    weights: np.ndarray
    cache: SelfAttnCache


def self_attend(fs: FeatureSet, params: SelfAttnParams) -> SelfAttnResult:
    w0 = check_vec(params.w0, "w0")
    if w0.shape[0] != fs.dim:
        raise DimMismatch(f"w0 has dim {w0.shape[0]}, features have dim {fs.dim}")
    feats = fs.vectors
    alpha = sigmoid(feats @ w0)
    asum = float(np.sum(alpha))  # sigmoid > 0, so asum > 0 always
    norm_weights = alpha / asum
    pooled = norm_weights @ feats
    cache = SelfAttnCache(feats, w0, alpha, asum, norm_weights, pooled)
    return SelfAttnResult(pooled=pooled, weights=alpha, cache=cache)


def self_attend_backward(cache: SelfAttnCache | None, d_pooled: np.ndarray,
                         d_alpha: np.ndarray | None = None):
    """Gradients of the self-attention pooling.

    ``d_alpha`` lets a caller (relation-attention) inject an extra upstream
    gradient on the raw gates.  Returns (d_w0, d_features).
    """
    if cache is None:
        raise MissingForwardCache("self_attend_backward needs the forward cache")
    feats, w0 = cache.features, cache.w0
    alpha, asum, pooled = cache.alpha, cache.alpha_sum, cache.pooled
    d_pooled = np.asarray(d_pooled, dtype=np.float64)
    # pooled = sum(alpha_i f_i) / asum;  d pooled / d alpha_i = (f_i - pooled)/asum
    g_alpha = (feats - pooled) @ d_pooled / asum
    if d_alpha is not None:
        g_alpha = g_alpha + np.asarray(d_alpha, dtype=np.float64)
    g_score = g_alpha * alpha * (1.0 - alpha)
    d_w0 = feats.T @ g_score
    d_feats = np.outer(cache.norm_weights, d_pooled) + np.outer(g_score, w0)
    return d_w0, d_feats


@dataclass
class RelationAttnCache:
    self_cache: SelfAttnCache
    concat: np.ndarray     # (n, 2d) rows [f_i : f_s]
    w1: np.ndarray
    beta: np.ndarray
    norm_weights: np.ndarray  # alpha*beta normalized
    weight_sum: float
    pooled_lo: np.ndarray     # weighted average of the f_i


@dataclass
class RelationAttnResult:
    pooled: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    cache: RelationAttnCache


def relation_attend(fs: FeatureSet, p0: SelfAttnParams,
                    p1: RelationAttnParams) -> RelationAttnResult:
    """Second-stage attention on [f_i : f_s]; pooled output has dimension 2d."""
    w1 = check_vec(p1.w1, "w1")
    if w1.shape[0] != 2 * fs.dim:
        raise DimMismatch(f"w1 has dim {w1.shape[0]}, expected {2 * fs.dim}")
    sa = self_attend(fs, p0)
    feats = fs.vectors
    concat = np.hstack([feats, np.tile(sa.pooled, (fs.n, 1))])
    beta = sigmoid(concat @ w1)
    weights = sa.weights * beta
    wsum = float(np.sum(weights))
    norm_weights = weights / wsum
    pooled_lo = norm_weights @ feats
    pooled = np.concatenate([pooled_lo, sa.pooled])
    cache = RelationAttnCache(sa.cache, concat, w1, beta, norm_weights, wsum, pooled_lo)
    return RelationAttnResult(pooled=pooled, alpha=sa.weights, beta=beta, cache=cache)


def relation_attend_backward(cache: RelationAttnCache | None, d_pooled: np.ndarray):
    """Returns (d_w0, d_w1, d_features)."""
    if cache is None:
        raise MissingForwardCache("relation_attend_backward needs the forward cache")
    feats = cache.self_cache.features
    d = feats.shape[1]
    alpha = cache.self_cache.alpha
    beta, wsum = cache.beta, cache.weight_sum
    d_pooled = np.asarray(d_pooled, dtype=np.float64)
    g_lo, g_hi = d_pooled[:d], d_pooled[d:]

    # low block: weighted average of the f_i under weights alpha*beta
    g_weight = (feats - cache.pooled_lo) @ g_lo / wsum
    d_feats = np.outer(cache.norm_weights, g_lo)
    g_beta = alpha * g_weight
    g_alpha = beta * g_weight
    g_score = g_beta * beta * (1.0 - beta)
    d_w1 = cache.concat.T @ g_score
    # scores t_i = [f_i : f_s] . w1 touch both f_i and f_s
    d_feats += np.outer(g_score, cache.w1[:d])
    d_fs = g_hi + np.sum(g_score) * cache.w1[d:]

    d_w0, d_feats_sa = self_attend_backward(cache.self_cache, d_fs, d_alpha=g_alpha)
    return d_w0, d_w1, d_feats + d_feats_sa


@dataclass
class TransformerAttnCache:
    features: np.ndarray
    params: TransformerAttnParams
    tanh_h: np.ndarray    # (n, m)
    weights: np.ndarray   # normalized (n,)
    pooled: np.ndarray


@dataclass
class TransformerAttnResult:
    pooled: np.ndarray
    gamma: np.ndarray
    cache: TransformerAttnCache


def transformer_attend(fs: FeatureSet, params: TransformerAttnParams) -> TransformerAttnResult:
    w2 = np.asarray(params.w2, dtype=np.float64)
    b = check_vec(params.b, "b")
    u = check_vec(params.u, "u")
    if w2.ndim != 2 or w2.shape[1] != fs.dim:
        raise DimMismatch(f"w2 shape {w2.shape} does not match feature dim {fs.dim}")
    if b.shape[0] != w2.shape[0] or u.shape[0] != w2.shape[0]:
        raise DimMismatch("b and u must match the hidden dim of w2")
    feats = fs.vectors
    tanh_h = np.tanh(feats @ w2.T + b)
    scores = tanh_h @ u
    # normalized weights via max-subtraction; gamma itself is returned raw
    shifted = np.exp(scores - np.max(scores))
    weights = shifted / np.sum(shifted)
    gamma = np.exp(scores)
    pooled = weights @ feats
    cache = TransformerAttnCache(feats, params, tanh_h, weights, pooled)
    return TransformerAttnResult(pooled=pooled, gamma=gamma, cache=cache)


def transformer_attend_backward(cache: TransformerAttnCache | None, d_pooled: np.ndarray):
    """Returns (d_w2, d_b, d_u, d_features)."""
    if cache is None:
        raise MissingForwardCache("transformer_attend_backward needs the forward cache")
    feats, tanh_h = cache.features, cache.tanh_h
    weights = cache.weights
    w2, u = cache.params.w2, cache.params.u
    d_pooled = np.asarray(d_pooled, dtype=np.float64)

    g_weight = feats @ d_pooled
    # softmax backward: d score_i = w_i (g_i - sum_j w_j g_j)
    g_score = weights * (g_weight - np.dot(weights, g_weight))
    d_u = tanh_h.T @ g_score
    g_h = np.outer(g_score, u) * (1.0 - tanh_h ** 2)
    d_w2 = g_h.T @ feats
    d_b = np.sum(g_h, axis=0)
    d_feats = np.outer(weights, d_pooled) + g_h @ w2
    return d_w2, d_b, d_u, d_feats
