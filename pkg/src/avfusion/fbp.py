"""Cross-modal fusion: factorized bilinear pooling and plain concatenation.

FBP fuses an audio vector a (dim m) and a visual vector v (dim n) through two
linear projections followed by an element-wise product, dropout, sum pooling
over non-overlapping windows of width k, and l2 normalization:

    h = (U~' a) * (V~' v)            # k*o entries
    z_i = sum of window i of h       # o entries
    out = z / ||z||                  # zero vector passes through unchanged

Each output entry is implicitly a bilinear form a' W_i v with
W_i = sum_j u_col[(i-1)k+j] v_col[(i-1)k+j]'; ``fbp_expand`` materializes
those matrices so the factorized path can be checked against the explicit
bilinear model.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, MissingForwardCache
from .numeric import check_vec
from .rng import Rng


@dataclass
class FBPParams:
    u_tilde: np.ndarray  # (m, k*o)
    v_tilde: np.ndarray  # (n, k*o)
    k: int               # pooling window width == rank of each implicit W_i
    o: int               # fused output dim
    dropout_p: float = 0.3

    def __post_init__(self):
        if self.k < 1 or self.o < 1:
            raise DimMismatch(f"k and o must be >= 1, got k={self.k}, o={self.o}")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ValueError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        ko = self.k * self.o
        if self.u_tilde.shape[1] != ko or self.v_tilde.shape[1] != ko:
            raise DimMismatch(
                f"projections must have k*o={ko} columns, got "
                f"{self.u_tilde.shape} and {self.v_tilde.shape}")

    @classmethod
    def init(cls, m: int, n: int, k: int, o: int, dropout_p: float, rng: Rng) -> "FBPParams":
        u = rng.uniform_mat(m, k * o, -1.0 / np.sqrt(m), 1.0 / np.sqrt(m))
        v = rng.uniform_mat(n, k * o, -1.0 / np.sqrt(n), 1.0 / np.sqrt(n))
        return cls(u_tilde=u, v_tilde=v, k=k, o=o, dropout_p=dropout_p)


@dataclass
class FusedVec:
    values: np.ndarray
    norm_applied: bool


@dataclass
class FBPCache:
    a: np.ndarray
    v: np.ndarray
    params: FBPParams
    proj_a: np.ndarray        # U~' a
    proj_v: np.ndarray        # V~' v
    mask_scale: np.ndarray    # dropout mask / (1 - p), or ones in eval mode
    z: np.ndarray             # pre-norm pooled vector
    z_norm: float
    normalized: bool


@dataclass
class FBPResult:
    fused: FusedVec
    cache: FBPCache


def fbp_fuse(a: np.ndarray, v: np.ndarray, params: FBPParams, mode: str = "eval",
             rng: Rng | None = None, normalize: bool = True,
             dropout_mask: np.ndarray | None = None) -> FBPResult:
    """Fuse two modality vectors.

    ``mode`` is "train" (dropout active) or "eval".  In train mode the
    dropout mask is drawn from ``rng`` unless an explicit ``dropout_mask`` is
    supplied (gradient checks freeze the mask this way).  Survivors are
    rescaled by 1/(1-p) so the expectation is unchanged.
    """
    a = check_vec(a, "audio vector")
    v = check_vec(v, "visual vector")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if a.shape[0] != params.u_tilde.shape[0]:
        raise DimMismatch(f"audio dim {a.shape[0]} != u_tilde rows {params.u_tilde.shape[0]}")
    if v.shape[0] != params.v_tilde.shape[0]:
        raise DimMismatch(f"visual dim {v.shape[0]} != v_tilde rows {params.v_tilde.shape[0]}")

    proj_a = params.u_tilde.T @ a
    proj_v = params.v_tilde.T @ v
    h = proj_a * proj_v

    ko = params.k * params.o
    if mode == "train" and params.dropout_p > 0.0:
        if dropout_mask is None:
            if rng is None:
                raise ValueError("train mode with dropout needs an rng or a frozen mask")
            dropout_mask = np.array([rng.uniform() >= params.dropout_p for _ in range(ko)],
                                    dtype=np.float64)
        mask_scale = np.asarray(dropout_mask, dtype=np.float64) / (1.0 - params.dropout_p)
    else:
        mask_scale = np.ones(ko)
    h = h * mask_scale

    z = h.reshape(params.o, params.k).sum(axis=1)
    z_norm = float(np.linalg.norm(z))
    if normalize and z_norm > 0.0:
        out = z / z_norm
    else:
        out = z.copy()
    fused = FusedVec(values=out, norm_applied=normalize)
    cache = FBPCache(a, v, params, proj_a, proj_v, mask_scale, z, z_norm,
                     normalized=normalize and z_norm > 0.0)
    return FBPResult(fused=fused, cache=cache)


def fbp_backward(cache: FBPCache, upstream: np.ndarray):
    """Returns (d_u_tilde, d_v_tilde, d_a, d_v) for a frozen forward pass."""
    if cache is None:
        raise MissingForwardCache("fbp_backward needs the forward cache")
    params = cache.params
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != (params.o,):
        raise DimMismatch(f"upstream must have shape ({params.o},), got {g.shape}")

    if cache.normalized:
        # out = z/|z|: d_z = (g - (g.out) out) / |z|
        out = cache.z / cache.z_norm
        d_z = (g - np.dot(g, out) * out) / cache.z_norm
    else:
        d_z = g
    d_h = np.repeat(d_z, params.k) * cache.mask_scale
    d_proj_a = d_h * cache.proj_v
    d_proj_v = d_h * cache.proj_a
    d_u = np.outer(cache.a, d_proj_a)
    d_v_tilde = np.outer(cache.v, d_proj_v)
    d_a = params.u_tilde @ d_proj_a
    d_v = params.v_tilde @ d_proj_v
    return d_u, d_v_tilde, d_a, d_v


def fbp_expand(params: FBPParams) -> list[np.ndarray]:
    """Materialize the o implicit bilinear matrices W_i (each m x n).

    For all a, v: a' W_i v equals the pre-dropout, pre-normalization z_i of
    ``fbp_fuse``.
    """
    mats = []
    for i in range(params.o):
        cols = slice(i * params.k, (i + 1) * params.k)
        mats.append(params.u_tilde[:, cols] @ params.v_tilde[:, cols].T)
    return mats


def concat_fuse(a: np.ndarray, v: np.ndarray) -> FusedVec:
    """Plain concatenation [a : v]; no normalization."""
    a = check_vec(a, "audio vector")
    v = check_vec(v, "visual vector")
    return FusedVec(values=np.concatenate([a, v]), norm_applied=False)
