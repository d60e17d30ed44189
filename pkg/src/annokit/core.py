"""Shared data model: labels, annotations, samples, campaign parameters.

Annotation CSV columns (exact header):
    sample_id,annotator_id,phase,primary_label,confidence,secondary_label
with phase in {"first", "re"} and secondary_label possibly empty.
Samples CSV columns: sample_id,claim_text,post_text.
Both are UTF-8, comma-separated, RFC-4180 quoted.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from enum import Enum

ANNOTATION_COLUMNS = (
    "sample_id",
    "annotator_id",
    "phase",
    "primary_label",
    "confidence",
    "secondary_label",
)
SAMPLE_COLUMNS = ("sample_id", "claim_text", "post_text")

DEFAULT_MAX_CONFIDENCE = 5


class ValidationError(ValueError):
    """Raised when input data or parameters violate a documented constraint."""


class Phase(str, Enum):
    """Annotation phase: first pass or the later re-annotation pass."""

    FIRST = "first"
    RE = "re"


@dataclass(frozen=True)
class LabelSet:
    """Ordered, fixed set of class names.

    The ordering is significant: index i of any probability vector produced
    downstream refers to ``labels[i]``.
    """

    labels: tuple[str, ...]

    def __init__(self, labels):
        object.__setattr__(self, "labels", tuple(labels))
        if len(self.labels) < 2:
            raise ValidationError("label set needs at least 2 labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"duplicate label names in {self.labels}")

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown label {label!r}; expected one of {self.labels}") from None

    def __contains__(self, label) -> bool:
        return label in self.labels

    def __iter__(self):
        return iter(self.labels)


@dataclass(frozen=True)
class Annotation:
    """One annotator's judgment on one sample."""

    sample_id: str
    annotator_id: str
    phase: Phase
    primary_label: str
    confidence: int
    secondary_label: str | None = None

    def validate(self, label_set: LabelSet, max_confidence: int) -> None:
        if self.primary_label not in label_set:
            raise ValidationError(
                f"unknown primary label {self.primary_label!r}; expected one of {label_set.labels}"
            )
        if not 1 <= self.confidence <= max_confidence:
            raise ValidationError(
                f"confidence {self.confidence} outside [1, {max_confidence}]"
            )
        if self.secondary_label is not None:
            if self.secondary_label not in label_set:
                raise ValidationError(
                    f"unknown secondary label {self.secondary_label!r}; expected one of {label_set.labels}"
                )
            if self.secondary_label == self.primary_label:
                raise ValidationError("secondary label must differ from primary label")


@dataclass(frozen=True)
class Sample:
    """A claim/post text pair. Texts are only required for training."""

    sample_id: str
    claim_text: str = ""
    post_text: str = ""


@dataclass(frozen=True)
class CampaignParams:
    """Parameters of an annotation campaign.

    num_annotators annotators each spend time_per_annotator hours annotating
    at annotation_rate annotations/hour; double_prop of the unique samples
    are double-annotated and reanno_prop of each annotator's single project
    is re-annotated later.
    """

    num_annotators: int
    time_per_annotator: float
    annotation_rate: float
    double_prop: float
    reanno_prop: float
    max_confidence: int = DEFAULT_MAX_CONFIDENCE

    def __post_init__(self):
        # the ring construction links each annotator to 4 others, which
        # requires at least 5 annotators
        if self.num_annotators < 5:
            raise ValidationError(
                f"num_annotators must be >= 5, got {self.num_annotators}"
            )
        if self.time_per_annotator <= 0 or self.annotation_rate <= 0:
            raise ValidationError("time_per_annotator and annotation_rate must be > 0")
        if not 0.0 <= self.double_prop <= 1.0:
            raise ValidationError(f"double_prop {self.double_prop} outside [0, 1]")
        if not 0.0 <= self.reanno_prop <= 1.0:
            raise ValidationError(f"reanno_prop {self.reanno_prop} outside [0, 1]")
        if self.max_confidence < 2:
            raise ValidationError("max_confidence must be >= 2")

    def to_dict(self) -> dict:
        return {
            "num_annotators": self.num_annotators,
            "time_per_annotator": self.time_per_annotator,
            "annotation_rate": self.annotation_rate,
            "double_prop": self.double_prop,
            "reanno_prop": self.reanno_prop,
            "max_confidence": self.max_confidence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignParams":
        return cls(**d)


@dataclass(frozen=True)
class AnnotationStore:
    """Validated, immutable collection of annotations.

    Annotations are kept in canonical (sample_id, annotator_id, phase) order,
    with at most one annotation per such triple.
    """

    annotations: tuple[Annotation, ...]
    label_set: LabelSet
    max_confidence: int = DEFAULT_MAX_CONFIDENCE
    _index: dict = field(init=False, repr=False, compare=False)

    def __init__(self, annotations, label_set, max_confidence=DEFAULT_MAX_CONFIDENCE):
        annotations = tuple(
            sorted(annotations, key=lambda a: (a.sample_id, a.annotator_id, a.phase.value))
        )
        object.__setattr__(self, "annotations", annotations)
        object.__setattr__(self, "label_set", label_set)
        object.__setattr__(self, "max_confidence", max_confidence)
        index = {}
        for ann in annotations:
            ann.validate(label_set, max_confidence)
            key = (ann.sample_id, ann.annotator_id, ann.phase)
            if key in index:
                raise ValidationError(
                    f"duplicate annotation for sample {ann.sample_id!r} by "
                    f"{ann.annotator_id!r} in phase {ann.phase.value!r}"
                )
            index[key] = ann
        object.__setattr__(self, "_index", index)
        self._check_reannotation_structure()

    def _check_reannotation_structure(self):
        # A re-annotation only makes sense on a sample the same annotator
        # single-annotated first; the distribution scheme never re-annotates
        # double-annotated samples, so both situations are data errors.
        first_by_sample: dict[str, list[str]] = {}
        for ann in self.annotations:
            if ann.phase is Phase.FIRST:
                first_by_sample.setdefault(ann.sample_id, []).append(ann.annotator_id)
        for ann in self.annotations:
            if ann.phase is not Phase.RE:
                continue
            firsts = first_by_sample.get(ann.sample_id, [])
            if ann.annotator_id not in firsts:
                raise ValidationError(
                    f"re-annotation of sample {ann.sample_id!r} by {ann.annotator_id!r} "
                    "has no matching first-phase annotation"
                )
            if len(firsts) > 1:
                raise ValidationError(
                    f"sample {ann.sample_id!r} is both double-annotated and re-annotated"
                )

    def __len__(self) -> int:
        return len(self.annotations)

    def get(self, sample_id: str, annotator_id: str, phase: Phase) -> Annotation | None:
        return self._index.get((sample_id, annotator_id, phase))

    def annotator_ids(self) -> list[str]:
        return sorted({a.annotator_id for a in self.annotations})

    def sample_ids(self) -> list[str]:
        return sorted({a.sample_id for a in self.annotations})

    def first_phase_by_sample(self) -> dict[str, list[Annotation]]:
        """First-phase annotations grouped by sample, annotator order within."""
        out: dict[str, list[Annotation]] = {}
        for ann in self.annotations:
            if ann.phase is Phase.FIRST:
                out.setdefault(ann.sample_id, []).append(ann)
        return out

    def annotations_by(self, annotator_id: str, phase: Phase) -> list[Annotation]:
        return [
            a
            for a in self.annotations
            if a.annotator_id == annotator_id and a.phase is phase
        ]


def _decode(file_bytes) -> str:
    if isinstance(file_bytes, bytes):
        return file_bytes.decode("utf-8")
    return file_bytes


def parse_annotations(file_bytes, label_set: LabelSet,
                      max_confidence: int = DEFAULT_MAX_CONFIDENCE) -> AnnotationStore:
    """Parse annotation CSV content into a validated AnnotationStore.

    Raises ValidationError naming the offending row for malformed rows,
    out-of-range confidences, unknown labels, and duplicate
    (sample, annotator, phase) triples. A missing secondary label with
    confidence <= 3 is suspicious but tolerated: real annotation exports
    often lack it, so it only triggers a warning.
    """
    reader = csv.DictReader(io.StringIO(_decode(file_bytes)))
    if reader.fieldnames is None:
        raise ValidationError("annotation CSV is empty")
    if tuple(reader.fieldnames) != ANNOTATION_COLUMNS:
        raise ValidationError(
            f"annotation CSV header must be {','.join(ANNOTATION_COLUMNS)}, "
            f"got {','.join(reader.fieldnames)}"
        )
    annotations = []
    seen: set[tuple[str, str, Phase]] = set()
    low_conf_missing_secondary = 0
    for row_num, row in enumerate(reader, start=2):  # row 1 is the header
        try:
            annotations.append(_parse_annotation_row(row, label_set, max_confidence))
        except ValidationError as exc:
            raise ValidationError(f"row {row_num}: {exc}") from None
        ann = annotations[-1]
        key = (ann.sample_id, ann.annotator_id, ann.phase)
        if key in seen:
            raise ValidationError(
                f"row {row_num}: duplicate annotation for sample {ann.sample_id!r} "
                f"by {ann.annotator_id!r} in phase {ann.phase.value!r}"
            )
        seen.add(key)
        if ann.confidence <= 3 and ann.secondary_label is None:
            low_conf_missing_secondary += 1
    if low_conf_missing_secondary:
        warnings.warn(
            f"{low_conf_missing_secondary} annotation(s) with confidence <= 3 "
            "carry no secondary label; the remaining probability mass will be "
            "spread evenly over the non-primary classes",
            stacklevel=2,
        )
    return AnnotationStore(annotations, label_set, max_confidence)


def _parse_annotation_row(row: dict, label_set: LabelSet, max_confidence: int) -> Annotation:
    missing = [c for c in ANNOTATION_COLUMNS if row.get(c) is None and c != "secondary_label"]
    if missing or row.get(None):
        raise ValidationError("wrong number of fields")
    if not row["sample_id"] or not row["annotator_id"]:
        raise ValidationError("sample_id and annotator_id must be non-empty")
    try:
        phase = Phase(row["phase"])
    except ValueError:
        raise ValidationError(
            f"phase must be 'first' or 're', got {row['phase']!r}"
        ) from None
    try:
        confidence = int(row["confidence"])
    except ValueError:
        raise ValidationError(f"confidence must be an integer, got {row['confidence']!r}") from None
    secondary = row.get("secondary_label") or None
    ann = Annotation(
        sample_id=row["sample_id"],
        annotator_id=row["annotator_id"],
        phase=phase,
        primary_label=row["primary_label"],
        confidence=confidence,
        secondary_label=secondary,
    )
    ann.validate(label_set, max_confidence)
    return ann


def serialize_annotations(store: AnnotationStore) -> str:
    """Render a store back to CSV text; parse_annotations round-trips it."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ANNOTATION_COLUMNS)
    for ann in store.annotations:
        writer.writerow(
            [
                ann.sample_id,
                ann.annotator_id,
                ann.phase.value,
                ann.primary_label,
                ann.confidence,
                ann.secondary_label or "",
            ]
        )
    return buf.getvalue()


def parse_samples(file_bytes) -> list[Sample]:
    """Parse a samples CSV (sample_id,claim_text,post_text) into Sample records."""
    reader = csv.DictReader(io.StringIO(_decode(file_bytes)))
    if reader.fieldnames is None:
        raise ValidationError("samples CSV is empty")
    if tuple(reader.fieldnames) != SAMPLE_COLUMNS:
        raise ValidationError(
            f"samples CSV header must be {','.join(SAMPLE_COLUMNS)}, "
            f"got {','.join(reader.fieldnames)}"
        )
    samples = []
    seen = set()
    for row_num, row in enumerate(reader, start=2):
        sid = row.get("sample_id")
        if not sid:
            raise ValidationError(f"row {row_num}: sample_id must be non-empty")
        if sid in seen:
            raise ValidationError(f"row {row_num}: duplicate sample_id {sid!r}")
        seen.add(sid)
        samples.append(Sample(sid, row.get("claim_text") or "", row.get("post_text") or ""))
    return samples


def serialize_samples(samples) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SAMPLE_COLUMNS)
    for s in samples:
        writer.writerow([s.sample_id, s.claim_text, s.post_text])
    return buf.getvalue()


def infer_label_set(file_bytes) -> LabelSet:
    """Infer a LabelSet from an annotation CSV: sorted unique label names.

    Sorting makes the ordering deterministic and independent of row order;
    pass an explicit LabelSet instead when a specific class order matters.
    """
    reader = csv.DictReader(io.StringIO(_decode(file_bytes)))
    labels = set()
    for row in reader:
        if row.get("primary_label"):
            labels.add(row["primary_label"])
        if row.get("secondary_label"):
            labels.add(row["secondary_label"])
    if len(labels) < 2:
        raise ValidationError("need at least 2 distinct labels to infer a label set")
    return LabelSet(sorted(labels))
