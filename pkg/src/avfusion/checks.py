"""Seeded gradient-check instances for every trainable module.

Each checker builds randomized instances (sizes drawn from a seeded rng),
runs the hand-derived backward pass, and validates it against central
differences.  The CLI ``gradcheck`` subcommand and the acceptance tests both
run these.
"""

import numpy as np

from . import attention, audio, fbp
from .classifier import SoftmaxParams, xent_loss_grad
from .config import ExperimentConfig
from .experiment import FusionPipeline
from .features import FeatureSet
from .gradcheck import grad_check
from .rng import Rng

GRAD_TOL = 1e-4
MODULES = ("self", "relation", "transformer", "fbp", "classifier", "patch")


def _sizes(rng: Rng):
    return rng.randint(5) + 2, rng.randint(7) + 2  # n in [2,6], d in [2,8]


def check_self_attention(seed: int) -> float:
    rng = Rng(seed)
    n, d = _sizes(rng)
    feats = rng.normal_mat(n, d)
    upstream = rng.normal_vec(d)
    params = {"w0": rng.uniform_vec(d, -0.5, 0.5)}

    def loss(ps):
        res = attention.self_attend(FeatureSet(feats), attention.SelfAttnParams(ps["w0"]))
        d_w0, _ = attention.self_attend_backward(res.cache, upstream)
        return float(res.pooled @ upstream), {"w0": d_w0}

    return grad_check(loss, params)


def check_relation_attention(seed: int) -> float:
    rng = Rng(seed)
    n, d = _sizes(rng)
    feats = rng.normal_mat(n, d)
    upstream = rng.normal_vec(2 * d)
    params = {"w0": rng.uniform_vec(d, -0.5, 0.5),
              "w1": rng.uniform_vec(2 * d, -0.5, 0.5)}

    def loss(ps):
        res = attention.relation_attend(FeatureSet(feats),
                                        attention.SelfAttnParams(ps["w0"]),
                                        attention.RelationAttnParams(ps["w1"]))
        d_w0, d_w1, _ = attention.relation_attend_backward(res.cache, upstream)
        return float(res.pooled @ upstream), {"w0": d_w0, "w1": d_w1}

    return grad_check(loss, params)


def check_transformer_attention(seed: int) -> float:
    rng = Rng(seed)
    n, d = _sizes(rng)
    hidden = rng.randint(5) + 2
    feats = rng.normal_mat(n, d)
    upstream = rng.normal_vec(d)
    params = {"w2": rng.uniform_mat(hidden, d, -0.5, 0.5),
              "b": rng.normal_vec(hidden, 0.0, 0.3),
              "u": rng.normal_vec(hidden, 0.0, 0.5)}

    def loss(ps):
        res = attention.transformer_attend(
            FeatureSet(feats),
            attention.TransformerAttnParams(ps["w2"], ps["b"], ps["u"]))
        d_w2, d_b, d_u, _ = attention.transformer_attend_backward(res.cache, upstream)
        return float(res.pooled @ upstream), {"w2": d_w2, "b": d_b, "u": d_u}

    return grad_check(loss, params)


def check_fbp(seed: int, with_dropout: bool | None = None) -> float:
    """FBP gradients; odd seeds run with a frozen dropout mask by default."""
    rng = Rng(seed)
    if with_dropout is None:
        with_dropout = bool(seed % 2)
    m, n = rng.randint(7) + 2, rng.randint(7) + 2
    k, o = rng.randint(4) + 1, rng.randint(3) + 1
    dropout_p = 0.3 if with_dropout else 0.0
    a = rng.normal_vec(m)
    v = rng.normal_vec(n)
    upstream = rng.normal_vec(o)
    params = {"u_tilde": rng.uniform_mat(m, k * o, -0.5, 0.5),
              "v_tilde": rng.uniform_mat(n, k * o, -0.5, 0.5)}
    mask = (np.array([rng.uniform() >= dropout_p for _ in range(k * o)], dtype=np.float64)
            if with_dropout else None)

    def loss(ps):
        fp = fbp.FBPParams(u_tilde=ps["u_tilde"], v_tilde=ps["v_tilde"],
                           k=k, o=o, dropout_p=dropout_p)
        res = fbp.fbp_fuse(a, v, fp, mode="train" if with_dropout else "eval",
                           dropout_mask=mask)
        d_u, d_v, _, _ = fbp.fbp_backward(res.cache, upstream)
        return float(res.fused.values @ upstream), {"u_tilde": d_u, "v_tilde": d_v}

    return grad_check(loss, params)


def check_classifier(seed: int) -> float:
    rng = Rng(seed)
    classes, d_in = rng.randint(6) + 2, rng.randint(7) + 2
    x = rng.normal_vec(d_in)
    label = rng.randint(classes)
    params = {"weight": rng.uniform_mat(classes, d_in, -0.5, 0.5),
              "bias": rng.normal_vec(classes, 0.0, 0.3)}

    def loss(ps):
        p = SoftmaxParams(weight=ps["weight"], bias=ps["bias"])
        value, d_w, d_b, _ = xent_loss_grad(x, label, p)
        return value, {"weight": d_w, "bias": d_b}

    return grad_check(loss, params)


def check_patch_embed(seed: int) -> float:
    rng = Rng(seed)
    grid_h, grid_w = rng.randint(3) + 1, rng.randint(3) + 1
    patch_h, patch_w = rng.randint(3) + 2, rng.randint(3) + 2
    channels = rng.randint(5) + 2
    spec = audio.Spectrogram(values=rng.normal_mat(grid_h * patch_h, grid_w * patch_w))
    upstream = rng.normal_mat(grid_h * grid_w, channels)
    init = audio.PatchEmbedParams.init(grid_h, grid_w, patch_h, patch_w, channels, rng)
    params = {"projection": init.projection, "bias": init.bias}

    def loss(ps):
        p = audio.PatchEmbedParams(grid_h=grid_h, grid_w=grid_w, channels=channels,
                                   projection=ps["projection"], bias=ps["bias"])
        out, cache = audio.patch_embed(spec, p)
        d_proj, d_bias = audio.patch_embed_backward(cache, upstream)
        return float(np.sum(out.vectors * upstream)), {"projection": d_proj, "bias": d_bias}

    return grad_check(loss, params)


def check_pipeline(seed: int, cross_mode: str = "fbp",
                   audio_fusion: str = "transformer",
                   visual_fusion: str = "transformer") -> float:
    """End-to-end fusion -> classifier -> cross-entropy, dropout off."""
    rng = Rng(seed)
    cfg = ExperimentConfig(seed=seed, audio_dim=3, audio_frames=3, visual_dim=3,
                           visual_frames=2, audio_fusion=audio_fusion,
                           visual_fusion=visual_fusion, cross_mode=cross_mode,
                           fbp_k=2, fbp_o=4, fbp_dropout=0.0, attn_hidden=3,
                           classes=3, samples=3)
    model = FusionPipeline(cfg, rng)
    audio_fs = FeatureSet(rng.normal_mat(cfg.audio_frames, cfg.audio_dim))
    visual_fs = FeatureSet(rng.normal_mat(cfg.visual_frames, cfg.visual_dim))
    label = rng.randint(cfg.classes)
    tensors = model.tensors()

    def loss(ps):
        model.set_tensors(ps)
        return model.sample_loss(audio_fs, visual_fs, label)

    return grad_check(loss, {k: v.copy() for k, v in tensors.items()})


_CHECKERS = {
    "self": check_self_attention,
    "relation": check_relation_attention,
    "transformer": check_transformer_attention,
    "fbp": check_fbp,
    "classifier": check_classifier,
    "patch": check_patch_embed,
}


def run_module_checks(module: str = "all", instances: int = 10,
                      seed_base: int = 90000) -> dict:
    """Max relative gradient error per requested module over seeded instances."""
    names = MODULES if module == "all" else (module,)
    results = {}
    for name in names:
        checker = _CHECKERS[name]
        results[name] = max(checker(seed_base + i) for i in range(instances))
    return results
