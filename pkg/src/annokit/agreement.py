"""Krippendorff's alpha (nominal) for paired annotations.

Only the two-rater, complete-data case is needed here: every agreement
quantity in the reliability graph is computed over the samples shared by
exactly two annotation passes (two annotators, or one annotator's first
pass against their re-annotation pass).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .core import AnnotationStore, Phase, ValidationError


@dataclass(frozen=True)
class PairedLabels:
    """Aligned label pairs over a common set of samples."""

    pairs: tuple[tuple[str, str], ...]

    def __init__(self, pairs):
        pairs = tuple((str(a), str(b)) for a, b in pairs)
        if not pairs:
            raise ValidationError("paired labels must be non-empty")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def krippendorff_alpha_nominal(paired: PairedLabels) -> float:
    """Nominal-level Krippendorff's alpha for two raters, alpha = 1 - D_o/D_e.

    Uses the coincidence-matrix formulation where each unit of two values
    contributes the reciprocal pairs (a,b) and (b,a). For nominal data over
    complete two-rater units this reduces to value frequencies:

        D_o = fraction of disagreeing units
        D_e = (M^2 - sum_c n_c^2) / (M * (M - 1)),  M = 2 * num units

    where n_c counts occurrences of value c across both raters. When every
    value is identical (D_e = 0) there is no disagreement to correct for and
    alpha is defined as 1.0 rather than NaN; that convention keeps perfectly
    consistent annotators from poisoning downstream reliability scores.
    """
    n_units = len(paired.pairs)
    disagreements = sum(1 for a, b in paired.pairs if a != b)
    value_counts = Counter()
    for a, b in paired.pairs:
        value_counts[a] += 1
        value_counts[b] += 1
    m = 2 * n_units
    expected_pairs = m * m - sum(c * c for c in value_counts.values())
    if expected_pairs == 0:
        return 1.0
    d_o = disagreements / n_units
    d_e = expected_pairs / (m * (m - 1))
    return 1.0 - d_o / d_e


def pairwise_agreement(store: AnnotationStore, annotator_x: str, annotator_y: str) -> float:
    """Alpha between two annotators on the samples both have labeled.

    For distinct annotators the pairing uses both annotators' first-phase
    primary labels (the double-annotated samples). With annotator_x ==
    annotator_y the pairing is the annotator's first-phase labels against
    their re-annotation labels, i.e. intra-annotator agreement.
    """
    paired = extract_paired_labels(store, annotator_x, annotator_y)
    return krippendorff_alpha_nominal(paired)


def extract_paired_labels(store: AnnotationStore, annotator_x: str, annotator_y: str) -> PairedLabels:
    known = set(store.annotator_ids())
    for annotator in (annotator_x, annotator_y):
        if annotator not in known:
            raise ValidationError(f"unknown annotator {annotator!r}")
    if annotator_x == annotator_y:
        phase_x, phase_y = Phase.FIRST, Phase.RE
    else:
        phase_x = phase_y = Phase.FIRST
    pairs = []
    for ann in store.annotations:
        if ann.annotator_id != annotator_x or ann.phase is not phase_x:
            continue
        other = store.get(ann.sample_id, annotator_y, phase_y)
        if other is not None:
            pairs.append((ann.primary_label, other.primary_label))
    if not pairs:
        raise ValidationError(
            f"annotators {annotator_x!r} and {annotator_y!r} share no samples"
        )
    return PairedLabels(pairs)
