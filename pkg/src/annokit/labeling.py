"""Soft labels from confidence-scored annotations.

A primary label with confidence C on an n-class task becomes the probability

    P = 1/n + (n-1)/n * (C-1)/(MaxC-1)

so minimal confidence gives the uniform 1/n and maximal confidence gives
certainty. The secondary label (when given, and with more than two classes)
receives min(P, 1-P) and whatever remains is spread evenly over the other
classes; with no secondary label the whole remainder 1-P is spread evenly.
Double annotations are combined by a reliability-weighted mean of the two
soft labels; argmax (ties to the lowest class index) recovers hard labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import Annotation, AnnotationStore, LabelSet, Phase, ValidationError

GOLD_MIN_CONFIDENCE = 3


def confidence_to_probability(confidence: int, num_classes: int, max_confidence: int) -> float:
    """Map a 1..MaxC confidence to a primary-label probability in [1/n, 1]."""
    if num_classes < 2:
        raise ValidationError(f"num_classes must be >= 2, got {num_classes}")
    if max_confidence < 2:
        raise ValidationError(f"max_confidence must be >= 2, got {max_confidence}")
    if not 1 <= confidence <= max_confidence:
        raise ValidationError(f"confidence {confidence} outside [1, {max_confidence}]")
    n = num_classes
    return 1.0 / n + (n - 1.0) / n * (confidence - 1.0) / (max_confidence - 1.0)


def annotation_to_soft_label(annotation: Annotation, label_set: LabelSet,
                             max_confidence: int) -> np.ndarray:
    """Soft label (probability vector in label_set order) for one annotation."""
    annotation.validate(label_set, max_confidence)
    n = label_set.num_classes
    p = confidence_to_probability(annotation.confidence, n, max_confidence)
    probs = np.zeros(n)
    primary = label_set.index(annotation.primary_label)
    probs[primary] = p
    if n == 2:
        probs[1 - primary] = 1.0 - p
    elif annotation.secondary_label is not None:
        secondary = label_set.index(annotation.secondary_label)
        q = min(p, 1.0 - p)
        probs[secondary] = q
        rest = [i for i in range(n) if i not in (primary, secondary)]
        probs[rest] = (1.0 - p - q) / len(rest)
    else:
        rest = [i for i in range(n) if i != primary]
        probs[rest] = (1.0 - p) / len(rest)
    return probs


def aggregate_soft_labels(entries) -> np.ndarray:
    """Reliability-weighted mean of soft labels, renormalized to sum 1.

    entries is a sequence of (probs, reliability) pairs; a single entry is
    returned unchanged (up to renormalization). Dividing by the total
    reliability makes the result invariant to rescaling all reliabilities.
    """
    entries = list(entries)
    if not entries:
        raise ValidationError("nothing to aggregate")
    total_weight = 0.0
    acc = np.zeros_like(np.asarray(entries[0][0], dtype=float))
    for probs, reliability in entries:
        if reliability <= 0.0:
            raise ValidationError(f"annotator reliability must be > 0, got {reliability}")
        acc += reliability * np.asarray(probs, dtype=float)
        total_weight += reliability
    if total_weight <= 0.0:
        raise ValidationError("total reliability weight is zero")
    out = acc / total_weight
    return out / out.sum()


def soft_to_hard(probs, label_set: LabelSet) -> str:
    """Label with maximal probability; ties break to the lowest label index."""
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (label_set.num_classes,):
        raise ValidationError(
            f"soft label has {probs.shape} entries for {label_set.num_classes} classes"
        )
    return label_set.labels[int(np.argmax(probs))]


@dataclass(eq=False)
class LabeledSample:
    """A sample with its soft label, derived hard label, and provenance."""

    sample_id: str
    soft_label: np.ndarray
    hard_label: str
    annotator_ids: tuple[str, ...]
    weight: float = 1.0
    gold: bool = False

    def to_json_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "soft_label": [float(p) for p in self.soft_label],
            "hard_label": self.hard_label,
            "annotators": list(self.annotator_ids),
            "gold": self.gold,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "LabeledSample":
        return cls(
            sample_id=d["sample_id"],
            soft_label=np.asarray(d["soft_label"], dtype=float),
            hard_label=d["hard_label"],
            annotator_ids=tuple(d["annotators"]),
            gold=bool(d["gold"]),
        )


def labeled_to_jsonl(samples) -> str:
    return "".join(json.dumps(s.to_json_dict()) + "\n" for s in samples)


def jsonl_to_labeled(text: str) -> list[LabeledSample]:
    return [LabeledSample.from_json_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def label_dataset(store: AnnotationStore, reliabilities: dict[str, float] | None = None) -> list[LabeledSample]:
    """Soft-label every sample from its first-phase annotations.

    Single-annotated samples take the annotation's own soft label;
    double-annotated samples take the reliability-weighted mean of the two
    (reliability 1.0 for every annotator when no map is given). Samples
    meeting the gold rule are flagged. Results in sample_id order.
    """
    out = []
    for sample_id, anns in sorted(store.first_phase_by_sample().items()):
        entries = []
        for ann in anns:
            probs = annotation_to_soft_label(ann, store.label_set, store.max_confidence)
            r = 1.0 if reliabilities is None else reliabilities.get(ann.annotator_id)
            if r is None:
                raise ValidationError(f"no reliability score for annotator {ann.annotator_id!r}")
            entries.append((probs, r))
        soft = aggregate_soft_labels(entries)
        out.append(
            LabeledSample(
                sample_id=sample_id,
                soft_label=soft,
                hard_label=soft_to_hard(soft, store.label_set),
                annotator_ids=tuple(a.annotator_id for a in anns),
                gold=_is_gold(anns),
            )
        )
    return out


def _is_gold(anns) -> bool:
    return (
        len(anns) == 2
        and anns[0].primary_label == anns[1].primary_label
        and all(a.confidence >= GOLD_MIN_CONFIDENCE for a in anns)
    )


def extract_gold_set(store: AnnotationStore,
                     reliabilities: dict[str, float] | None = None) -> list[LabeledSample]:
    """High-agreement subset usable as gold-standard test data.

    A double-annotated sample qualifies when both first-phase annotations
    share the primary label with confidence >= 3; the gold hard label is
    that shared primary. Re-annotations never create gold samples.
    """
    return [s for s in label_dataset(store, reliabilities) if s.gold]


def merged_label_set(label_set: LabelSet, mapping: dict[str, str]) -> LabelSet:
    """Label set after merging, ordered by first appearance of each target."""
    _check_mapping(label_set, mapping)
    seen: list[str] = []
    for label in label_set:
        target = mapping[label]
        if target not in seen:
            seen.append(target)
    return LabelSet(seen)


def _check_mapping(label_set: LabelSet, mapping: dict[str, str]) -> None:
    missing = [lab for lab in label_set if lab not in mapping]
    if missing:
        raise ValidationError(f"merge mapping does not cover label(s) {missing}")


def merge_soft_label(probs, label_set: LabelSet, mapping: dict[str, str]) -> np.ndarray:
    """Soft label over the merged label set; merged classes sum their mass."""
    new_set = merged_label_set(label_set, mapping)
    probs = np.asarray(probs, dtype=float)
    out = np.zeros(new_set.num_classes)
    for i, label in enumerate(label_set):
        out[new_set.index(mapping[label])] += probs[i]
    return out


def merge_labels(data, mapping: dict[str, str], label_set: LabelSet | None = None):
    """Remap labels through a (total) old-label -> new-label mapping.

    Accepts an AnnotationStore (annotations get remapped primaries and
    secondaries, dropping a secondary that collapses into the primary), a
    list of LabeledSample (soft labels merged by summing probabilities, hard
    labels recomputed by argmax), or a bare probability vector. The latter
    two need the original label_set. Agreement values computed before the
    merge are stale afterwards; recomputing them is the caller's job.
    """
    if isinstance(data, AnnotationStore):
        return _merge_store(data, mapping)
    if label_set is None:
        raise ValidationError("label_set is required when merging labels outside a store")
    new_set = merged_label_set(label_set, mapping)
    if isinstance(data, np.ndarray):
        return merge_soft_label(data, label_set, mapping)
    merged = []
    for sample in data:
        soft = merge_soft_label(sample.soft_label, label_set, mapping)
        merged.append(
            LabeledSample(
                sample_id=sample.sample_id,
                soft_label=soft,
                hard_label=soft_to_hard(soft, new_set),
                annotator_ids=sample.annotator_ids,
                weight=sample.weight,
                gold=sample.gold,
            )
        )
    return merged


def _merge_store(store: AnnotationStore, mapping: dict[str, str]) -> AnnotationStore:
    new_set = merged_label_set(store.label_set, mapping)
    annotations = []
    for ann in store.annotations:
        primary = mapping[ann.primary_label]
        secondary = mapping[ann.secondary_label] if ann.secondary_label else None
        if secondary == primary:
            secondary = None
        annotations.append(
            Annotation(
                sample_id=ann.sample_id,
                annotator_id=ann.annotator_id,
                phase=ann.phase,
                primary_label=primary,
                confidence=ann.confidence,
                secondary_label=secondary,
            )
        )
    return AnnotationStore(annotations, new_set, store.max_confidence)
