"""annokit: annotation campaign planning, annotator reliability, soft labels,
and reliability-weighted classifier training."""

from .agreement import PairedLabels, krippendorff_alpha_nominal, pairwise_agreement
from .core import (
    Annotation,
    AnnotationStore,
    CampaignParams,
    LabelSet,
    Phase,
    Sample,
    ValidationError,
    infer_label_set,
    parse_annotations,
    parse_samples,
    serialize_annotations,
    serialize_samples,
)
from .distribution import (
    DistributionPlan,
    PlanReport,
    allocate_samples,
    compute_sample_count,
    verify_plan,
)
from .labeling import (
    LabeledSample,
    aggregate_soft_labels,
    annotation_to_soft_label,
    confidence_to_probability,
    extract_gold_set,
    label_dataset,
    merge_labels,
    merged_label_set,
    soft_to_hard,
)
from .reliability import (
    AnnotatorGraph,
    ReliabilityConfig,
    build_graph,
    compute_reliability,
    export_dot,
    inter_agreement,
    reliability_report,
)
from .simulator import (
    ConfidenceModel,
    SimScenario,
    SimulationResult,
    SyntheticAnnotator,
    evaluate_recovery,
    simulate_campaign,
    standard_scenario,
    synthesize_samples,
)
from .trainer import (
    EvalReport,
    FeatureConfig,
    TrainConfig,
    TrainedModel,
    assign_weights,
    evaluate_model,
    expected_calibration_error,
    macro_f1,
    sample_weight,
    train_classifier,
    weighted_cross_entropy,
)

__version__ = "0.1.0"
