"""Synthetic two-modality labeled datasets for desk-scale experiments.

Two generator modes:

* ``clustered``: each class gets a Gaussian prototype per modality and every
  frame is prototype + noise, so any fusion scheme separates the classes.
* ``interaction``: each sample carries a signed latent along a fixed
  direction per modality and the (binary) label is the sign of the product
  of the two latents.  Neither modality alone predicts the label; only a
  model that can represent the cross-modal product can.

Visual frames are optionally enhanced at generation time: each base frame
feature spawns a bag of per-transform variants (conditioned deterministically
on the rotation/scale/flip descriptors) which the configured aggregator
collapses.  The identity transform reproduces the base feature exactly.
"""

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .enhance import TtaTransform, enumerate_tta, f_ar_mean, f_mean, f_meanstd, f_normfft
from .errors import InvalidConfig
from .features import FeatureBag, FeatureSet
from .rng import Rng


@dataclass
class SyntheticDataset:
    samples: list  # (audio FeatureSet, visual FeatureSet, label) triples
    classes: int


def enhanced_dim(base_dim: int, mode: str) -> int:
    """Feature dimension after the configured enhancement."""
    if mode in ("none", "mean"):
        return base_dim
    if mode in ("meanstd", "normfft", "ar_mean"):
        return 2 * base_dim
    raise InvalidConfig(f"unknown enhancement mode {mode!r}")


class _TtaConditioner:
    """Deterministic per-transform feature perturbations.

    Stands in for re-extracting CNN features from warped frames: scaling
    multiplies the feature, rotation and flipping shift it along fixed
    dataset-level directions.  The identity descriptor is a no-op.
    """

    def __init__(self, dim: int, rng: Rng):
        self.rot_dir = rng.normal_vec(dim, 0.0, 0.02)
        self.flip_dir = rng.normal_vec(dim, 0.0, 0.05)

    def variant(self, x: np.ndarray, t: TtaTransform) -> np.ndarray:
        out = t.scale * x + t.rotation_deg * self.rot_dir
        if t.flipped:
            out = out + self.flip_dir
        return out

    def bag(self, x: np.ndarray, transforms) -> FeatureBag:
        return FeatureBag([self.variant(x, t) for t in transforms])


def _make_enhancer(cfg: ExperimentConfig, rng: Rng):
    """Returns a function mapping a base visual frame feature to its enhanced form."""
    if cfg.enhance_mode == "none":
        return lambda x: x
    if cfg.enhance_mode == "normfft":
        return f_normfft
    transforms = enumerate_tta(cfg.tta_rotations, cfg.tta_scales, flip=True)
    cond = _TtaConditioner(cfg.visual_dim, rng)
    if cfg.enhance_mode == "mean":
        return lambda x: f_mean(cond.bag(x, transforms))
    if cfg.enhance_mode == "meanstd":
        return lambda x: f_meanstd(cond.bag(x, transforms))
    # ar_mean: two extractor views with their own conditioning directions
    cond_r = _TtaConditioner(cfg.visual_dim, rng)
    return lambda x: f_ar_mean(f_mean(cond.bag(x, transforms)),
                               f_mean(cond_r.bag(x, transforms)))


def gen_synthetic(cfg: ExperimentConfig, rng: Rng) -> SyntheticDataset:
    """Generate a dataset; identical config and rng seed give identical bytes."""
    if cfg.data_mode == "clustered":
        return _gen_clustered(cfg, rng)
    if cfg.data_mode == "interaction":
        return _gen_interaction(cfg, rng)
    raise InvalidConfig(f"unknown data mode {cfg.data_mode!r}")


def _gen_clustered(cfg: ExperimentConfig, rng: Rng) -> SyntheticDataset:
    if cfg.samples < cfg.classes:
        raise InvalidConfig("need at least one sample per class")
    protos_a = rng.normal_mat(cfg.classes, cfg.audio_dim)
    protos_v = rng.normal_mat(cfg.classes, cfg.visual_dim)
    enhancer = _make_enhancer(cfg, rng)
    samples = []
    for i in range(cfg.samples):
        label = i % cfg.classes
        audio = protos_a[label] + cfg.noise * rng.normal_mat(cfg.audio_frames, cfg.audio_dim)
        visual_base = protos_v[label] + cfg.noise * rng.normal_mat(cfg.visual_frames,
                                                                   cfg.visual_dim)
        visual = np.array([enhancer(frame) for frame in visual_base])
        samples.append((FeatureSet(audio), FeatureSet(visual), label))
    return SyntheticDataset(samples=samples, classes=cfg.classes)


def _gen_interaction(cfg: ExperimentConfig, rng: Rng) -> SyntheticDataset:
    if cfg.classes != 2:
        raise InvalidConfig("interaction data is binary; set classifier.classes=2")
    p = rng.normal_vec(cfg.audio_dim)
    p /= np.linalg.norm(p)
    q = rng.normal_vec(cfg.visual_dim)
    q /= np.linalg.norm(q)
    enhancer = _make_enhancer(cfg, rng)
    samples = []
    for i in range(cfg.samples):
        if i < 2:
            # pin the first two samples to one label each so both classes
            # are always present
            sign_a, sign_v = 1.0, (1.0 if i == 0 else -1.0)
        else:
            sign_a = 1.0 if rng.uniform() < 0.5 else -1.0
            sign_v = 1.0 if rng.uniform() < 0.5 else -1.0
        mag_a = rng.uniform(0.5, 1.5)
        mag_v = rng.uniform(0.5, 1.5)
        latent_a = sign_a * mag_a * p
        latent_v = sign_v * mag_v * q
        audio = latent_a + cfg.noise * rng.normal_mat(cfg.audio_frames, cfg.audio_dim)
        visual_base = latent_v + cfg.noise * rng.normal_mat(cfg.visual_frames, cfg.visual_dim)
        visual = np.array([enhancer(frame) for frame in visual_base])
        label = 1 if sign_a * sign_v > 0 else 0
        samples.append((FeatureSet(audio), FeatureSet(visual), label))
    return SyntheticDataset(samples=samples, classes=2)
