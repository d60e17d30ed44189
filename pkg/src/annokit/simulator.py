"""Synthetic annotation campaigns with known ground truth.

Annotators are modeled by three knobs: accuracy (probability of emitting
the true label), a confidence model (distribution over confidence scores
conditioned on whether the emitted label is correct), and consistency
(probability that a re-annotation repeats the first-phase label instead of
being drawn fresh). Running a full campaign through the real distribution
and reliability machinery gives an oracle for how well reliability scores
recover true annotator quality, and synthesized sample texts let the same
campaigns drive end-to-end training experiments.

RNG discipline: every random decision runs on its own child stream of the
scenario seed, keyed by purpose plus the annotator ID and/or a stable hash
of the sample ID ("allocation", "truth", "annotation", "text"). Adding
annotators or samples therefore never perturbs existing draws.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import (
    AnnotationStore,
    Annotation,
    CampaignParams,
    LabelSet,
    Phase,
    Sample,
    ValidationError,
)
from .distribution import DistributionPlan, allocate_samples, project_sizes

SECONDARY_MAX_CONFIDENCE = 3  # emit a secondary label at or below this


def _key_words(part) -> tuple[int, ...]:
    if isinstance(part, (int, np.integer)):
        return (int(part) & 0xFFFFFFFF,)
    digest = hashlib.blake2b(str(part).encode("utf-8"), digest_size=8).digest()
    return (
        int.from_bytes(digest[:4], "little"),
        int.from_bytes(digest[4:], "little"),
    )


def _stream(seed: int, *parts) -> np.random.Generator:
    key = tuple(w for part in parts for w in _key_words(part))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _child_seed(seed: int, purpose: str) -> int:
    return int(_stream(seed, purpose).integers(0, 2 ** 63))


@dataclass(frozen=True)
class ConfidenceModel:
    """Confidence distributions over 1..MaxC conditioned on correctness.

    Defaults: a correct judgment feels sure (uniform over {4, 5}); an
    incorrect one feels shaky (uniform over {2, 3}), which also triggers a
    secondary label under the confidence <= 3 rule.
    """

    correct: tuple[float, ...] = (0.0, 0.0, 0.0, 0.5, 0.5)
    incorrect: tuple[float, ...] = (0.0, 0.5, 0.5, 0.0, 0.0)

    def __post_init__(self):
        for name, dist in (("correct", self.correct), ("incorrect", self.incorrect)):
            if abs(sum(dist) - 1.0) > 1e-9 or min(dist) < 0:
                raise ValidationError(f"confidence distribution {name!r} is not a distribution")

    def draw(self, rng: np.random.Generator, correct: bool) -> int:
        dist = self.correct if correct else self.incorrect
        return int(rng.choice(len(dist), p=np.asarray(dist) / sum(dist))) + 1

    def to_dict(self) -> dict:
        return {"correct": list(self.correct), "incorrect": list(self.incorrect)}

    @classmethod
    def from_dict(cls, d: dict) -> "ConfidenceModel":
        return cls(correct=tuple(d["correct"]), incorrect=tuple(d["incorrect"]))


@dataclass(frozen=True)
class SyntheticAnnotator:
    annotator_id: str
    accuracy: float
    consistency: float = 1.0
    confidence_model: ConfidenceModel = field(default_factory=ConfidenceModel)

    def __post_init__(self):
        if not 0.0 < self.accuracy <= 1.0:
            raise ValidationError(f"accuracy {self.accuracy} outside (0, 1]")
        if not 0.0 < self.consistency <= 1.0:
            raise ValidationError(f"consistency {self.consistency} outside (0, 1]")

    def to_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "accuracy": self.accuracy,
            "consistency": self.consistency,
            "confidence_model": self.confidence_model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticAnnotator":
        return cls(
            annotator_id=d["annotator_id"],
            accuracy=d["accuracy"],
            consistency=d["consistency"],
            confidence_model=ConfidenceModel.from_dict(d["confidence_model"]),
        )


@dataclass(frozen=True)
class TextModel:
    """Synthetic claim/post texts with a tunable class signal.

    Each class owns vocab_per_class tokens; a post token comes from the true
    class's vocabulary with probability signal, otherwise from a shared
    filler vocabulary, so a bag-of-words model can learn the classes without
    the task being trivial.
    """

    vocab_per_class: int = 30
    filler_vocab: int = 60
    post_length: int = 12
    claim_length: int = 6
    signal: float = 0.55


@dataclass(frozen=True)
class SimScenario:
    campaign: CampaignParams
    label_set: LabelSet
    class_prior: tuple[float, ...]
    annotators: tuple[SyntheticAnnotator, ...]
    seed: int
    text_model: TextModel = field(default_factory=TextModel)

    def __post_init__(self):
        object.__setattr__(self, "annotators", tuple(self.annotators))
        object.__setattr__(self, "class_prior", tuple(self.class_prior))
        if len(self.annotators) != self.campaign.num_annotators:
            raise ValidationError(
                f"{len(self.annotators)} annotators for a "
                f"{self.campaign.num_annotators}-annotator campaign"
            )
        if len(self.class_prior) != self.label_set.num_classes:
            raise ValidationError("class_prior length must match the label set")
        if abs(sum(self.class_prior) - 1.0) > 1e-9 or min(self.class_prior) < 0:
            raise ValidationError("class_prior is not a distribution")
        ids = [a.annotator_id for a in self.annotators]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate annotator IDs in scenario")

    def to_dict(self) -> dict:
        return {
            "campaign": self.campaign.to_dict(),
            "label_set": list(self.label_set.labels),
            "class_prior": list(self.class_prior),
            "annotators": [a.to_dict() for a in self.annotators],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimScenario":
        return cls(
            campaign=CampaignParams.from_dict(d["campaign"]),
            label_set=LabelSet(d["label_set"]),
            class_prior=tuple(d["class_prior"]),
            annotators=tuple(SyntheticAnnotator.from_dict(a) for a in d["annotators"]),
            seed=int(d["seed"]),
        )


def scenario_to_json(scenario: SimScenario) -> str:
    return json.dumps(scenario.to_dict(), indent=2) + "\n"


def scenario_from_json(text: str) -> SimScenario:
    return SimScenario.from_dict(json.loads(text))


@dataclass
class SimulationResult:
    """Everything a simulated campaign produced."""

    store: AnnotationStore
    ground_truth: dict[str, str]
    plan: DistributionPlan
    samples: list[Sample]


def _emit(annotator: SyntheticAnnotator, rng: np.random.Generator, true_label: str,
          labels: tuple[str, ...]) -> tuple[str, bool]:
    correct = bool(rng.random() < annotator.accuracy)
    if correct:
        return true_label, True
    wrong = [lab for lab in labels if lab != true_label]
    return wrong[int(rng.integers(len(wrong)))], False


def _annotate(annotator: SyntheticAnnotator, rng: np.random.Generator, sample_id: str,
              phase: Phase, true_label: str, labels: tuple[str, ...],
              first_label: str | None = None) -> Annotation:
    if phase is Phase.RE and first_label is not None and rng.random() < annotator.consistency:
        label = first_label
        correct = label == true_label
    else:
        label, correct = _emit(annotator, rng, true_label, labels)
    confidence = annotator.confidence_model.draw(rng, correct)
    secondary = None
    if confidence <= SECONDARY_MAX_CONFIDENCE:
        others = [lab for lab in labels if lab != label]
        secondary = others[int(rng.integers(len(others)))]
    return Annotation(
        sample_id=sample_id,
        annotator_id=annotator.annotator_id,
        phase=phase,
        primary_label=label,
        confidence=confidence,
        secondary_label=secondary,
    )


def simulate_campaign(scenario: SimScenario) -> SimulationResult:
    """Run a full synthetic campaign: distribute, label, re-annotate.

    Deterministic given the scenario seed. True labels are drawn from the
    class prior per sample; each assigned annotation emits the true label
    with the annotator's accuracy (else a uniformly chosen wrong label) and
    a confidence from the annotator's confidence model. Re-annotations
    repeat the first-phase label with the annotator's consistency, else
    re-draw. Secondary labels accompany any confidence <= 3.
    """
    campaign = scenario.campaign
    labels = scenario.label_set.labels
    annotators = {a.annotator_id: a for a in scenario.annotators}

    double_size, single_size, _ = project_sizes(
        campaign, _k_for(campaign)
    )
    n = campaign.num_annotators
    pool_size = max(_k_for(campaign), n * single_size + 2 * n * double_size)
    sample_ids = [f"s{i:05d}" for i in range(pool_size)]
    plan = allocate_samples(
        sample_ids, campaign, seed=_child_seed(scenario.seed, "allocation"),
        annotator_ids=[a.annotator_id for a in scenario.annotators],
    )

    prior = np.asarray(scenario.class_prior)
    ground_truth = {}
    for sid in sorted(plan.assigned_sample_ids()):
        rng = _stream(scenario.seed, "truth", sid)
        ground_truth[sid] = labels[int(rng.choice(len(labels), p=prior))]

    annotations: list[Annotation] = []
    first_labels: dict[tuple[str, str], str] = {}
    for aid in plan.annotator_ids:
        annotator = annotators[aid]
        first_ids = list(plan.single[aid])
        for partner, ids in plan.double[aid].items():
            first_ids.extend(ids)
        for sid in first_ids:
            rng = _stream(scenario.seed, "annotation", aid, sid, "first")
            ann = _annotate(annotator, rng, sid, Phase.FIRST, ground_truth[sid], labels)
            annotations.append(ann)
            first_labels[(aid, sid)] = ann.primary_label
        for sid in plan.reannotate[aid]:
            rng = _stream(scenario.seed, "annotation", aid, sid, "re")
            annotations.append(
                _annotate(annotator, rng, sid, Phase.RE, ground_truth[sid], labels,
                          first_label=first_labels[(aid, sid)])
            )

    store = AnnotationStore(annotations, scenario.label_set, campaign.max_confidence)
    samples = synthesize_samples(ground_truth, scenario.label_set, scenario.seed,
                                 scenario.text_model)
    return SimulationResult(store=store, ground_truth=ground_truth, plan=plan, samples=samples)


def _k_for(campaign: CampaignParams) -> int:
    from .distribution import compute_sample_count

    return compute_sample_count(campaign)


def synthesize_samples(ground_truth: dict[str, str], label_set: LabelSet, seed: int,
                       text_model: TextModel | None = None) -> list[Sample]:
    """Generate claim/post texts whose post tokens carry the true label's signal."""
    tm = text_model or TextModel()
    fillers = [f"filler{j}" for j in range(tm.filler_vocab)]
    class_vocab = {
        lab: [f"{lab}.w{j}" for j in range(tm.vocab_per_class)] for lab in label_set
    }
    samples = []
    for sid in sorted(ground_truth):
        rng = _stream(seed, "text", sid)
        vocab = class_vocab[ground_truth[sid]]
        post_tokens = [
            vocab[int(rng.integers(len(vocab)))]
            if rng.random() < tm.signal
            else fillers[int(rng.integers(len(fillers)))]
            for _ in range(tm.post_length)
        ]
        claim_tokens = [fillers[int(rng.integers(len(fillers)))] for _ in range(tm.claim_length)]
        samples.append(Sample(sid, " ".join(claim_tokens), " ".join(post_tokens)))
    return samples


def evaluate_recovery(reliabilities: dict[str, float], scenario: SimScenario) -> float:
    """Spearman rank correlation between reliability and true accuracy.

    Returns a value in [-1, 1] (NaN if either vector is constant, which
    cannot be ranked against anything).
    """
    if len(scenario.annotators) < 3:
        raise ValidationError("rank correlation needs at least 3 annotators")
    missing = [a.annotator_id for a in scenario.annotators if a.annotator_id not in reliabilities]
    if missing:
        raise ValidationError(f"no reliability score for annotator(s) {missing}")
    ordered = sorted(scenario.annotators, key=lambda a: a.annotator_id)
    scores = [reliabilities[a.annotator_id] for a in ordered]
    accuracies = [a.accuracy for a in ordered]
    return float(stats.spearmanr(scores, accuracies).correlation)


STANDARD_ACCURACIES = (0.95, 0.90, 0.85, 0.80, 0.75, 0.60)


def standard_scenario(seed: int, num_samples: int = 600) -> SimScenario:
    """The 6-annotator benchmark scenario used throughout the test suite.

    Accuracies span 0.95 down to 0.60. Consistency is a constant 0.25: most
    re-annotations are fresh draws, so self-agreement measures how
    reproducible each annotator's labeling is, which tracks accuracy.
    Campaign proportions lean on double and re-annotation (d=1/2, r=1) to
    give the agreement estimates enough shared samples at this small scale,
    and the annotation rate is back-solved so the unique-sample budget
    equals num_samples.
    """
    n = len(STANDARD_ACCURACIES)
    d, r = 0.5, 1.0
    denom = 2 * d + (1 + r) * (1 - d)
    campaign = CampaignParams(
        num_annotators=n,
        time_per_annotator=1.0,
        annotation_rate=(num_samples + 0.5) * denom / n,
        double_prop=d,
        reanno_prop=r,
    )
    annotators = tuple(
        SyntheticAnnotator(annotator_id=f"a{i + 1}", accuracy=acc, consistency=0.25)
        for i, acc in enumerate(STANDARD_ACCURACIES)
    )
    label_set = LabelSet(("misinfo", "debunk", "other"))
    prior = (1 / 3, 1 / 3, 1 / 3)
    return SimScenario(
        campaign=campaign,
        label_set=label_set,
        class_prior=prior,
        annotators=annotators,
        seed=seed,
    )
