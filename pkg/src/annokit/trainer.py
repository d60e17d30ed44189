"""Reliability-weighted classifier training at desk scale.

A single linear layer plus softmax over hashed bag-of-words features stands
in for a large fine-tuned model; the point is the loss, not the backbone.
The per-sample weighted cross-entropy

    loss_i = -weight_i * sum_c target_c * ln(pred_c)

takes soft or one-hot targets and scales each sample by the reliability of
the annotator(s) who labeled it, so samples from annotators who agree with
the group (and with themselves) count more. Optimization is full-batch
gradient descent with a fixed learning rate and L2 penalty on the weights.
Evaluation reports macro-F1 and top-label expected calibration error.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .core import LabelSet, Sample, ValidationError
from .labeling import LabeledSample

PROB_FLOOR = 1e-12

# intra_weight of the reliability computation backing each weighting source
RELIABILITY_SOURCE_INTRA_WEIGHT = {"inter": 0.0, "intra": 1.0, "inter_intra": 0.5}


@dataclass(frozen=True)
class FeatureConfig:
    """Hashed bag-of-words settings: 1-2 word n-grams over lowercased
    whitespace tokens, hashed into a fixed number of buckets."""

    dim: int = 2 ** 14
    max_ngram: int = 2

    def __post_init__(self):
        if self.dim < 2 or self.max_ngram < 1:
            raise ValidationError("feature dim must be >= 2 and max_ngram >= 1")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.5
    l2: float = 1e-4
    seed: int = 0
    label_mode: str = "soft"
    weighting: str = "reliability"
    reliability_source: str = "inter_intra"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.label_mode not in ("hard", "soft"):
            raise ValidationError(f"label_mode must be 'hard' or 'soft', got {self.label_mode!r}")
        if self.weighting not in ("none", "reliability"):
            raise ValidationError(f"weighting must be 'none' or 'reliability', got {self.weighting!r}")
        if self.reliability_source not in RELIABILITY_SOURCE_INTRA_WEIGHT:
            raise ValidationError(
                f"reliability_source must be one of {sorted(RELIABILITY_SOURCE_INTRA_WEIGHT)}"
            )

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "l2": self.l2,
            "seed": self.seed,
            "label_mode": self.label_mode,
            "weighting": self.weighting,
            "reliability_source": self.reliability_source,
        }


def _bucket(token: str, dim: int) -> int:
    # stable across runs and platforms, unlike the builtin salted hash
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


def featurize_text(text: str, config: FeatureConfig) -> np.ndarray:
    tokens = text.lower().split()
    vec = np.zeros(config.dim)
    for n in range(1, config.max_ngram + 1):
        for i in range(len(tokens) - n + 1):
            vec[_bucket(" ".join(tokens[i:i + n]), config.dim)] += 1.0
    return vec


def featurize_samples(samples, config: FeatureConfig) -> np.ndarray:
    """Feature matrix for claim+post text pairs, one row per sample."""
    return np.stack([
        featurize_text(f"{s.claim_text} {s.post_text}", config) for s in samples
    ])


def sample_weight(sample: LabeledSample, reliabilities: dict[str, float]) -> float:
    """Training weight: the mean reliability of the contributing annotators."""
    missing = [a for a in sample.annotator_ids if a not in reliabilities]
    if missing:
        raise ValidationError(f"no reliability score for annotator(s) {missing}")
    weights = [reliabilities[a] for a in sample.annotator_ids]
    value = float(np.mean(weights))
    if value <= 0:
        raise ValidationError(f"non-positive sample weight {value} for {sample.sample_id!r}")
    return value


def assign_weights(samples, reliabilities: dict[str, float]) -> list[LabeledSample]:
    """Fill each LabeledSample's training weight from annotator reliability."""
    for s in samples:
        s.weight = sample_weight(s, reliabilities)
    return samples


def weighted_cross_entropy(pred_probs, target, weight: float) -> float:
    """-weight * sum(target * ln(pred)), predictions floored at 1e-12."""
    pred = np.clip(np.asarray(pred_probs, dtype=float), PROB_FLOOR, None)
    target = np.asarray(target, dtype=float)
    return float(-weight * np.sum(target * np.log(pred)))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


@dataclass(eq=False)
class TrainedModel:
    """Linear softmax classifier with its training provenance."""

    weights: np.ndarray
    bias: np.ndarray
    label_set: LabelSet
    feature_config: FeatureConfig
    config: TrainConfig
    loss_trace: list[float] = field(default_factory=list)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(np.asarray(X, dtype=float) @ self.weights + self.bias)

    def predict(self, X: np.ndarray) -> list[str]:
        probs = self.predict_proba(X)
        return [self.label_set.labels[i] for i in np.argmax(probs, axis=1)]


def loss_and_gradient(weights, bias, X, targets, sample_weights, l2):
    """Objective and analytic gradient of mean weighted CE plus L2.

    Objective: (1/N) sum_i w_i * CE(softmax(x_i W + b), t_i) + (l2/2)*||W||^2.
    Per-sample gradient w.r.t. the logits is w_i * (softmax(z_i) - t_i).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    probs = softmax(X @ weights + bias)
    ce = -np.sum(targets * np.log(np.clip(probs, PROB_FLOOR, None)), axis=1)
    loss = float(np.mean(sample_weights * ce) + 0.5 * l2 * np.sum(weights ** 2))
    grad_logits = (sample_weights[:, None] * (probs - targets)) / n
    grad_w = X.T @ grad_logits + l2 * weights
    grad_b = grad_logits.sum(axis=0)
    return loss, grad_w, grad_b


def loss_gradient(model: TrainedModel, X, targets, sample_weights):
    """Gradient of the model's objective on a batch, as (dW, db)."""
    _, grad_w, grad_b = loss_and_gradient(
        model.weights, model.bias, X, np.asarray(targets, dtype=float),
        np.asarray(sample_weights, dtype=float), model.config.l2,
    )
    return grad_w, grad_b


def _targets(samples, label_set: LabelSet, label_mode: str) -> np.ndarray:
    if label_mode == "soft":
        return np.stack([np.asarray(s.soft_label, dtype=float) for s in samples])
    targets = np.zeros((len(samples), label_set.num_classes))
    for i, s in enumerate(samples):
        targets[i, label_set.index(s.hard_label)] = 1.0
    return targets


def train_classifier(labeled, samples, label_set: LabelSet, config: TrainConfig,
                     feature_config: FeatureConfig | None = None) -> TrainedModel:
    """Fit the linear softmax classifier by full-batch gradient descent.

    labeled supplies targets and weights; samples supply the texts (matched
    by sample_id). Deterministic given config.seed, which controls only the
    small random weight initialization.
    """
    feature_config = feature_config or FeatureConfig()
    by_id = {s.sample_id: s for s in samples}
    missing = [s.sample_id for s in labeled if s.sample_id not in by_id]
    if missing:
        raise ValidationError(f"no sample text for ID(s) {missing[:5]}")
    if len({s.hard_label for s in labeled}) < 2:
        raise ValidationError("training set contains a single class; nothing to separate")

    X = featurize_samples([by_id[s.sample_id] for s in labeled], feature_config)
    targets = _targets(labeled, label_set, config.label_mode)
    if config.weighting == "none":
        sample_weights = np.ones(len(labeled))
    else:
        sample_weights = np.array([s.weight for s in labeled], dtype=float)
        if np.any(sample_weights <= 0):
            raise ValidationError("reliability weighting requires positive sample weights")

    rng = np.random.default_rng(config.seed)
    weights = rng.normal(0.0, 0.01, size=(feature_config.dim, label_set.num_classes))
    bias = np.zeros(label_set.num_classes)
    trace = []
    for _ in range(config.epochs):
        loss, grad_w, grad_b = loss_and_gradient(
            weights, bias, X, targets, sample_weights, config.l2
        )
        trace.append(loss)
        weights -= config.learning_rate * grad_w
        bias -= config.learning_rate * grad_b
    return TrainedModel(
        weights=weights,
        bias=bias,
        label_set=label_set,
        feature_config=feature_config,
        config=config,
        loss_trace=trace,
    )


def macro_f1(predictions, gold) -> float:
    """Unweighted mean of per-class F1 over the classes present in gold.

    A class with zero precision and recall denominators scores 0; classes
    absent from both predictions and gold do not participate.
    """
    predictions, gold = list(predictions), list(gold)
    if len(predictions) != len(gold):
        raise ValidationError(
            f"{len(predictions)} predictions for {len(gold)} gold labels"
        )
    if not gold:
        raise ValidationError("empty evaluation set")
    scores = []
    for cls in sorted(set(gold)):
        tp = sum(1 for p, g in zip(predictions, gold) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(predictions, gold) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(predictions, gold) if p != cls and g == cls)
        scores.append(2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0)
    return float(np.mean(scores))


def expected_calibration_error(pred_probs, gold, label_set: LabelSet,
                               num_bins: int = 10) -> float:
    """Top-label ECE over equal-width confidence bins.

    Predictions are binned by their maximum probability; each bin
    contributes its size-weighted |accuracy - mean confidence|.
    """
    if num_bins < 1:
        raise ValidationError("num_bins must be >= 1")
    pred_probs = np.asarray(list(pred_probs), dtype=float)
    gold = list(gold)
    if pred_probs.size == 0 or not gold:
        raise ValidationError("empty evaluation set")
    if len(pred_probs) != len(gold):
        raise ValidationError(f"{len(pred_probs)} predictions for {len(gold)} gold labels")
    confidences = pred_probs.max(axis=1)
    predicted = np.argmax(pred_probs, axis=1)
    gold_idx = np.array([label_set.index(g) for g in gold])
    correct = predicted == gold_idx
    bins = np.minimum((confidences * num_bins).astype(int), num_bins - 1)
    ece = 0.0
    for b in range(num_bins):
        mask = bins == b
        if not np.any(mask):
            continue
        ece += mask.mean() * abs(correct[mask].mean() - confidences[mask].mean())
    return float(ece)


@dataclass
class EvalReport:
    """Classification quality summary on a test split."""

    macro_f1: float
    ece: float
    per_class_f1: dict[str, float]
    confusion: list[list[int]]
    n_test: int

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "ece": self.ece,
            "per_class_f1": self.per_class_f1,
            "confusion": self.confusion,
            "n_test": self.n_test,
        }


def evaluate_model(model: TrainedModel, samples, gold) -> EvalReport:
    """Evaluate on (samples, gold label names): macro-F1, ECE, confusion."""
    gold = list(gold)
    X = featurize_samples(samples, model.feature_config)
    probs = model.predict_proba(X)
    predictions = [model.label_set.labels[i] for i in np.argmax(probs, axis=1)]
    labels = model.label_set.labels
    confusion = [[0] * len(labels) for _ in labels]
    for p, g in zip(predictions, gold):
        confusion[model.label_set.index(g)][model.label_set.index(p)] += 1
    per_class = {}
    for cls in sorted(set(gold)):
        tp = sum(1 for p, g in zip(predictions, gold) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(predictions, gold) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(predictions, gold) if p != cls and g == cls)
        per_class[cls] = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0
    return EvalReport(
        macro_f1=macro_f1(predictions, gold),
        ece=expected_calibration_error(probs, gold, model.label_set),
        per_class_f1=per_class,
        confusion=confusion,
        n_test=len(gold),
    )
