"""End-to-end experiment harness.

A FusionPipeline composes one intra-modal attention per modality, a
cross-modal fusion (factorized bilinear pooling or concatenation), and a
softmax classifier.  Gradients are chained by hand through all stages, so
the whole pipeline passes the central-difference gradient check.

``run_experiment`` generates a synthetic dataset, trains the pipeline with
gradient descent on a seeded 80/20 split, evaluates with class-reweighted
predictions, and optionally writes a flat text report, a confusion-matrix
CSV, and a binary checkpoint.  Identical config and seed give byte-identical
outputs.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import attention, fbp
from .classifier import (ClassWeights, SoftmaxParams, apply_class_weights,
                         softmax_forward, xent_loss_grad)
from .config import ExperimentConfig, config_summary, resolved_class_weights
from .errors import DimMismatch, EmptyDataset, NumericalDivergence
from .features import FeatureSet
from .featfile import save_checkpoint
from .rng import Rng
from .synthetic import SyntheticDataset, enhanced_dim, gen_synthetic


@dataclass
class Metrics:
    accuracy: float
    per_class_recall: np.ndarray  # (C,)
    confusion: np.ndarray         # (C, C) ints, rows = true class


def compute_metrics(y_true, y_pred, classes: int) -> Metrics:
    confusion = np.zeros((classes, classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[t, p] += 1
    total = int(confusion.sum())
    accuracy = float(np.trace(confusion)) / total if total else 0.0
    row_sums = confusion.sum(axis=1)
    recall = np.where(row_sums > 0, np.diag(confusion) / np.maximum(row_sums, 1), 0.0)
    return Metrics(accuracy=accuracy, per_class_recall=recall, confusion=confusion)


class IntraStage:
    """One modality's attention pooling with a uniform forward/backward API."""

    def __init__(self, kind: str, in_dim: int, hidden: int, rng: Rng):
        self.kind = kind
        self.in_dim = in_dim
        if kind == "self":
            self.params = {"w0": attention.SelfAttnParams.init(in_dim, rng).w0}
            self.out_dim = in_dim
        elif kind == "relation":
            self.params = {"w0": attention.SelfAttnParams.init(in_dim, rng).w0,
                           "w1": attention.RelationAttnParams.init(in_dim, rng).w1}
            self.out_dim = 2 * in_dim
        elif kind == "transformer":
            p = attention.TransformerAttnParams.init(in_dim, hidden, rng)
            self.params = {"w2": p.w2, "b": p.b, "u": p.u}
            self.out_dim = in_dim
        else:
            raise ValueError(f"unknown intra fusion kind {kind!r}")

    def forward(self, fs: FeatureSet):
        if self.kind == "self":
            res = attention.self_attend(fs, attention.SelfAttnParams(self.params["w0"]))
        elif self.kind == "relation":
            res = attention.relation_attend(fs,
                                            attention.SelfAttnParams(self.params["w0"]),
                                            attention.RelationAttnParams(self.params["w1"]))
        else:
            res = attention.transformer_attend(
                fs, attention.TransformerAttnParams(self.params["w2"],
                                                    self.params["b"], self.params["u"]))
        return res.pooled, res.cache

    def backward(self, cache, d_pooled) -> dict:
        if self.kind == "self":
            d_w0, _ = attention.self_attend_backward(cache, d_pooled)
            return {"w0": d_w0}
        if self.kind == "relation":
            d_w0, d_w1, _ = attention.relation_attend_backward(cache, d_pooled)
            return {"w0": d_w0, "w1": d_w1}
        d_w2, d_b, d_u, _ = attention.transformer_attend_backward(cache, d_pooled)
        return {"w2": d_w2, "b": d_b, "u": d_u}


class FusionPipeline:
    """Attention pooling per modality -> cross-modal fusion -> softmax."""

    def __init__(self, cfg: ExperimentConfig, rng: Rng):
        self.cfg = cfg
        visual_in = enhanced_dim(cfg.visual_dim, cfg.enhance_mode)
        self.audio = IntraStage(cfg.audio_fusion, cfg.audio_dim, cfg.attn_hidden, rng)
        self.visual = IntraStage(cfg.visual_fusion, visual_in, cfg.attn_hidden, rng)
        m, n = self.audio.out_dim, self.visual.out_dim
        if cfg.cross_mode == "fbp":
            self.fbp_params = fbp.FBPParams.init(m, n, cfg.fbp_k, cfg.fbp_o,
                                                 cfg.fbp_dropout, rng)
            clf_in = cfg.fbp_o
        else:
            self.fbp_params = None
            clf_in = m + n
        self.clf = SoftmaxParams.init(cfg.classes, clf_in, rng)
        self.class_weights = ClassWeights(np.array(resolved_class_weights(cfg)))

    # --- parameter registry -------------------------------------------------
    def tensors(self) -> dict:
        out = {}
        for prefix, stage in (("audio", self.audio), ("visual", self.visual)):
            for name, arr in stage.params.items():
                out[f"{prefix}.{name}"] = arr
        if self.fbp_params is not None:
            out["fbp.u_tilde"] = self.fbp_params.u_tilde
            out["fbp.v_tilde"] = self.fbp_params.v_tilde
        out["clf.weight"] = self.clf.weight
        out["clf.bias"] = self.clf.bias
        return out

    def set_tensors(self, tensors: dict) -> None:
        current = self.tensors()
        if set(tensors) != set(current):
            missing = set(current) - set(tensors)
            extra = set(tensors) - set(current)
            raise DimMismatch(f"checkpoint tensors do not match model "
                              f"(missing {sorted(missing)}, unexpected {sorted(extra)})")
        for name, arr in tensors.items():
            arr = np.asarray(arr, dtype=np.float64)
            target = current[name]
            if arr.size != target.size:
                raise DimMismatch(f"tensor {name!r} has {arr.size} entries, "
                                  f"model expects {target.size}")
            target[...] = arr.reshape(target.shape)

    # --- forward / backward -------------------------------------------------
    def sample_loss(self, audio_fs, visual_fs, label, train: bool = False,
                    rng: Rng | None = None, dropout_mask=None):
        """Loss, probabilities, and hand-chained gradients for one sample."""
        a_vec, a_cache = self.audio.forward(audio_fs)
        v_vec, v_cache = self.visual.forward(visual_fs)
        if self.fbp_params is not None:
            mode = "train" if train else "eval"
            res = fbp.fbp_fuse(a_vec, v_vec, self.fbp_params, mode=mode, rng=rng,
                               dropout_mask=dropout_mask)
            fused = res.fused.values
        else:
            fused = fbp.concat_fuse(a_vec, v_vec).values
        loss, d_weight, d_bias, d_fused = xent_loss_grad(fused, label, self.clf)
        grads = {"clf.weight": d_weight, "clf.bias": d_bias}
        if self.fbp_params is not None:
            d_u, d_v_tilde, d_a, d_v = fbp.fbp_backward(res.cache, d_fused)
            grads["fbp.u_tilde"] = d_u
            grads["fbp.v_tilde"] = d_v_tilde
        else:
            d_a = d_fused[:self.audio.out_dim]
            d_v = d_fused[self.audio.out_dim:]
        for prefix, stage, cache, d_vec in (("audio", self.audio, a_cache, d_a),
                                            ("visual", self.visual, v_cache, d_v)):
            for name, g in stage.backward(cache, d_vec).items():
                grads[f"{prefix}.{name}"] = g
        return loss, grads

    def predict(self, audio_fs, visual_fs) -> int:
        a_vec, _ = self.audio.forward(audio_fs)
        v_vec, _ = self.visual.forward(visual_fs)
        if self.fbp_params is not None:
            fused = fbp.fbp_fuse(a_vec, v_vec, self.fbp_params, mode="eval").fused.values
        else:
            fused = fbp.concat_fuse(a_vec, v_vec).values
        scores = softmax_forward(fused, self.clf)
        _, predicted = apply_class_weights(scores, self.class_weights)
        return predicted


def train_pipeline(model: FusionPipeline, samples, epochs: int, lr: float,
                   rng: Rng, batch_size: int = 0) -> list:
    """Gradient descent over (audio, visual, label) triples; returns loss curve."""
    if not samples:
        raise EmptyDataset("no training samples")
    tensors = model.tensors()
    curve = []
    n = len(samples)
    for epoch in range(epochs):
        order = list(range(n))
        if batch_size:
            rng.shuffle(order)
            batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
        else:
            batches = [order]
        total = 0.0
        for batch in batches:
            acc = {name: np.zeros_like(arr) for name, arr in tensors.items()}
            for i in batch:
                audio_fs, visual_fs, label = samples[i]
                loss, grads = model.sample_loss(audio_fs, visual_fs, label,
                                                train=True, rng=rng)
                total += loss
                for name, g in grads.items():
                    acc[name] += g
            for name, arr in tensors.items():
                arr -= lr * acc[name] / len(batch)
        avg = total / n
        if not np.isfinite(avg):
            raise NumericalDivergence(f"training loss became {avg} at epoch {epoch}")
        curve.append(avg)
    return curve


def split_indices(n: int, rng: Rng, train_frac: float = 0.8):
    """Seeded shuffle split; returns (train_idx, test_idx)."""
    order = list(range(n))
    rng.shuffle(order)
    cut = int(round(train_frac * n))
    return order[:cut], order[cut:]


def experiment_rngs(seed: int) -> dict:
    """Fixed derivation order for the per-purpose child generators."""
    root = Rng(seed)
    return {"data": root.split(), "split": root.split(),
            "init": root.split(), "train": root.split()}


@dataclass
class ExperimentResult:
    metrics: Metrics
    loss_curve: list
    model: FusionPipeline
    report_path: str | None = None
    confusion_path: str | None = None
    checkpoint_path: str | None = None


def prepare_dataset(cfg: ExperimentConfig):
    """Dataset plus the split both train and eval agree on."""
    rngs = experiment_rngs(cfg.seed)
    dataset = gen_synthetic(cfg, rngs["data"])
    train_idx, test_idx = split_indices(len(dataset.samples), rngs["split"])
    return dataset, train_idx, test_idx, rngs


def evaluate_pipeline(model: FusionPipeline, dataset: SyntheticDataset, indices) -> Metrics:
    y_true = [dataset.samples[i][2] for i in indices]
    y_pred = [model.predict(dataset.samples[i][0], dataset.samples[i][1])
              for i in indices]
    return compute_metrics(y_true, y_pred, dataset.classes)


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None,
                   train_on_all: bool = False) -> ExperimentResult:
    dataset, train_idx, test_idx, rngs = prepare_dataset(cfg)
    model = FusionPipeline(cfg, rngs["init"])
    chosen = list(range(len(dataset.samples))) if train_on_all else train_idx
    train_samples = [dataset.samples[i] for i in chosen]
    curve = train_pipeline(model, train_samples, cfg.epochs, cfg.lr,
                           rngs["train"], cfg.batch_size)
    metrics = evaluate_pipeline(model, dataset, test_idx)
    result = ExperimentResult(metrics=metrics, loss_curve=curve, model=model)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        result.report_path = os.path.join(out_dir, "report.txt")
        result.confusion_path = os.path.join(out_dir, "confusion.csv")
        result.checkpoint_path = os.path.join(out_dir, "checkpoint.bin")
        with open(result.report_path, "w", encoding="utf-8") as fh:
            fh.write(render_report(cfg, metrics, curve, len(chosen), len(test_idx)))
        with open(result.confusion_path, "w", encoding="utf-8") as fh:
            for row in metrics.confusion:
                fh.write(",".join(str(int(v)) for v in row) + "\n")
        save_checkpoint(result.checkpoint_path, model.tensors())
    return result


def render_report(cfg: ExperimentConfig, metrics: Metrics, curve, n_train, n_test) -> str:
    lines = [f"accuracy={metrics.accuracy!r}",
             f"samples.train={n_train}",
             f"samples.test={n_test}"]
    if curve:
        lines.append(f"loss.first={curve[0]!r}")
        lines.append(f"loss.last={curve[-1]!r}")
    for c, r in enumerate(metrics.per_class_recall):
        lines.append(f"recall.{c}={float(r)!r}")
    lines.append("")
    lines.append("[config]")
    lines.append(config_summary(cfg))
    lines.append("")
    return "\n".join(lines)
