"""Campaign sample distribution over the annotator ring.

Given n annotators, each annotator is paired with annotators (i+1) mod n and
(i+2) mod n for double annotation, so every annotator ends up linked to 4
others. The unique-sample budget is

    k = floor( rate * time * n / (2*d + (1 + r)*(1 - d)) )

where d is the double-annotated proportion of k and r the proportion of each
single project that gets re-annotated. Single/double/re-annotation project
sizes are real-valued in that formulation; sizes here use round-half-up per
project and k uses floor, with residual samples left unassigned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CampaignParams, ValidationError

# Workload per annotator deviates from rate*time only through rounding:
# +-0.5 on the single project, +-(0.5 + r*0.5) on the re-annotation subset,
# 4 * +-0.5 on double projects, and < 0.4 from flooring k. Bounded by 4.
WORKLOAD_TOLERANCE = 4.0

_SIZING_NOTE = (
    "double projects hold round(double_prop * k / (2 * num_annotators)) samples "
    "each; for the reference configuration n=6, t=10h, rate=60/h, "
    "double_prop=1/3, reanno_prop=1/2 (k=2160) that is 60 samples per project, "
    "the only size consistent with the rate*time budget of 600 annotations per "
    "annotator (an 80-sample reading of d*k/(2n) would put the workload at 680 "
    "and is not used)"
)
_REANNOTATION_NOTE = (
    "schedule the re-annotation pass after a multi-week gap from the first "
    "pass so self-agreement measures consistency rather than recall; the gap "
    "is an operational recommendation, not enforced by the plan"
)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def compute_sample_count(params: CampaignParams) -> int:
    """Unique-sample budget k for a campaign, floored to an integer."""
    d, r = params.double_prop, params.reanno_prop
    denom = 2.0 * d + (1.0 + r) * (1.0 - d)
    k = math.floor(params.annotation_rate * params.time_per_annotator * params.num_annotators / denom)
    if k <= 0:
        raise ValidationError(f"campaign parameters yield k={k}; nothing to annotate")
    return k


def default_annotator_ids(n: int) -> tuple[str, ...]:
    return tuple(f"a{i + 1}" for i in range(n))


@dataclass(frozen=True)
class DistributionPlan:
    """Assignment of sample IDs to single/double/re-annotation projects."""

    params: CampaignParams
    k: int
    seed: int
    annotator_ids: tuple[str, ...]
    single: dict[str, tuple[str, ...]]
    reannotate: dict[str, tuple[str, ...]]
    double: dict[str, dict[str, tuple[str, ...]]]
    metadata: dict = field(default_factory=dict)

    def workload(self, annotator_id: str) -> int:
        """Annotations this annotator performs: singles + re + incident doubles."""
        return (
            len(self.single[annotator_id])
            + len(self.reannotate[annotator_id])
            + sum(len(ids) for ids in self.double[annotator_id].values())
        )

    def assigned_sample_ids(self) -> set[str]:
        out: set[str] = set()
        for ids in self.single.values():
            out.update(ids)
        for partners in self.double.values():
            for ids in partners.values():
                out.update(ids)
        return out

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "k": self.k,
            "seed": self.seed,
            "annotators": {
                a: {
                    "single": list(self.single[a]),
                    "reannotate": list(self.reannotate[a]),
                    "double": {p: list(ids) for p, ids in sorted(self.double[a].items())},
                }
                for a in self.annotator_ids
            },
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionPlan":
        annotators = d["annotators"]
        return cls(
            params=CampaignParams.from_dict(d["params"]),
            k=int(d["k"]),
            seed=int(d["seed"]),
            annotator_ids=tuple(annotators.keys()),
            single={a: tuple(v["single"]) for a, v in annotators.items()},
            reannotate={a: tuple(v["reannotate"]) for a, v in annotators.items()},
            double={
                a: {p: tuple(ids) for p, ids in v["double"].items()}
                for a, v in annotators.items()
            },
            metadata=d.get("metadata", {}),
        )


def project_sizes(params: CampaignParams, k: int) -> tuple[int, int, int]:
    """(double project, single project, re-annotation subset) sizes."""
    n = params.num_annotators
    double_size = _round_half_up(params.double_prop * k / (2 * n))
    single_size = _round_half_up((1.0 - params.double_prop) * k / n)
    reanno_size = _round_half_up(params.reanno_prop * single_size)
    return double_size, single_size, reanno_size


def allocate_samples(sample_ids, params: CampaignParams, seed: int,
                     annotator_ids=None) -> DistributionPlan:
    """Randomly assign samples to single/double/re-annotation projects.

    Sampling is without replacement from the shared pool and deterministic
    given the seed. RNG discipline: a single numpy default_rng(seed) (PCG64)
    stream permutes the pool once; double projects are cut from the permuted
    pool for pairs (i, i+1 mod n) then (i, i+2 mod n) in ascending i, then
    single projects in ascending i, and finally each annotator's
    re-annotation subset is drawn from their own single project in ascending
    i. Raises when the pool cannot cover the computed project sizes.
    """
    sample_ids = [str(s) for s in sample_ids]
    if len(set(sample_ids)) != len(sample_ids):
        raise ValidationError("sample pool contains duplicate IDs")
    n = params.num_annotators
    if annotator_ids is None:
        annotator_ids = default_annotator_ids(n)
    else:
        annotator_ids = tuple(annotator_ids)
        if len(annotator_ids) != n:
            raise ValidationError(
                f"got {len(annotator_ids)} annotator IDs for {n} annotators"
            )
    k = compute_sample_count(params)
    double_size, single_size, reanno_size = project_sizes(params, k)
    required = n * single_size + 2 * n * double_size
    if len(sample_ids) < max(k, required):
        raise ValidationError(
            f"sample pool has {len(sample_ids)} samples; campaign requires "
            f"k={k} unique samples ({required} after per-project rounding)"
        )

    rng = np.random.default_rng(seed)
    pool = [sample_ids[i] for i in rng.permutation(len(sample_ids))]
    cursor = 0

    def take(count: int) -> tuple[str, ...]:
        nonlocal cursor
        chunk = tuple(sorted(pool[cursor:cursor + count]))
        cursor += count
        return chunk

    double: dict[str, dict[str, tuple[str, ...]]] = {a: {} for a in annotator_ids}
    for offset in (1, 2):
        for i in range(n):
            j = (i + offset) % n
            ids = take(double_size)
            double[annotator_ids[i]][annotator_ids[j]] = ids
            double[annotator_ids[j]][annotator_ids[i]] = ids

    single = {annotator_ids[i]: take(single_size) for i in range(n)}

    reannotate = {}
    for i in range(n):
        own = single[annotator_ids[i]]
        picked = rng.choice(len(own), size=reanno_size, replace=False) if reanno_size else []
        reannotate[annotator_ids[i]] = tuple(sorted(own[j] for j in picked))

    metadata = {
        "sizes": {"double_project": double_size, "single_project": single_size,
                  "reannotation_subset": reanno_size},
        "workload_per_annotator": single_size + reanno_size + 4 * double_size,
        "time_budget_per_annotator": params.annotation_rate * params.time_per_annotator,
        "notes": {"double_project_sizing": _SIZING_NOTE,
                  "reannotation_scheduling": _REANNOTATION_NOTE},
    }
    return DistributionPlan(
        params=params,
        k=k,
        seed=seed,
        annotator_ids=annotator_ids,
        single=single,
        reannotate=reannotate,
        double=double,
        metadata=metadata,
    )


@dataclass
class PlanReport:
    """Outcome of auditing a DistributionPlan against its invariants."""

    ok: bool
    violations: list[str]
    workloads: dict[str, int]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": self.violations, "workloads": self.workloads}


def verify_plan(plan: DistributionPlan) -> PlanReport:
    """Audit a plan: ring structure, disjointness, sizes, and time budget."""
    violations: list[str] = []
    params = plan.params
    n = params.num_annotators
    ids = plan.annotator_ids
    if len(ids) != n:
        violations.append(f"plan lists {len(ids)} annotators, params say {n}")

    expected_k = compute_sample_count(params)
    if plan.k != expected_k:
        violations.append(f"k={plan.k} but parameters give {expected_k}")
    double_size, single_size, reanno_size = project_sizes(params, plan.k)

    # ring structure: partners of i are (i +- 1) mod n and (i +- 2) mod n
    for i, a in enumerate(ids):
        expected_partners = {ids[(i + off) % n] for off in (1, 2, n - 1, n - 2)}
        actual = set(plan.double.get(a, {}))
        if actual != expected_partners:
            violations.append(
                f"{a}: double partners {sorted(actual)} != ring partners {sorted(expected_partners)}"
            )

    # symmetric pair projects
    for a, partners in plan.double.items():
        for p, samples in partners.items():
            if plan.double.get(p, {}).get(a) != samples:
                violations.append(f"double project {a}/{p} not mirrored on {p}")

    # every sample in exactly one project group
    groups: list[tuple[str, tuple[str, ...]]] = [
        (f"single[{a}]", s) for a, s in plan.single.items()
    ]
    seen_pairs = set()
    for a, partners in plan.double.items():
        for p, samples in partners.items():
            key = frozenset((a, p))
            if key not in seen_pairs:
                seen_pairs.add(key)
                groups.append((f"double[{a},{p}]", samples))
    assigned: dict[str, str] = {}
    for group_name, samples in groups:
        for s in samples:
            if s in assigned:
                violations.append(f"sample {s!r} in both {assigned[s]} and {group_name}")
            else:
                assigned[s] = group_name

    for a in ids:
        singles = set(plan.single.get(a, ()))
        extra = set(plan.reannotate.get(a, ())) - singles
        if extra:
            violations.append(f"{a}: re-annotation ids not in own singles: {sorted(extra)}")

    # project sizes
    for a in ids:
        if len(plan.single.get(a, ())) != single_size:
            violations.append(f"{a}: single project size {len(plan.single.get(a, ()))} != {single_size}")
        if len(plan.reannotate.get(a, ())) != reanno_size:
            violations.append(f"{a}: re-annotation size {len(plan.reannotate.get(a, ()))} != {reanno_size}")
        for p, samples in plan.double.get(a, {}).items():
            if len(samples) != double_size:
                violations.append(f"{a}/{p}: double project size {len(samples)} != {double_size}")

    # time budget
    budget = params.annotation_rate * params.time_per_annotator
    workloads = {a: plan.workload(a) for a in ids if a in plan.single and a in plan.double}
    for a, w in workloads.items():
        if abs(w - budget) > WORKLOAD_TOLERANCE:
            violations.append(f"{a}: workload {w} deviates from budget {budget:g} by more than {WORKLOAD_TOLERANCE}")

    if abs(len(plan.assigned_sample_ids()) - plan.k) > n:
        violations.append(
            f"{len(plan.assigned_sample_ids())} unique samples assigned; expected k={plan.k} +- {n}"
        )

    return PlanReport(ok=not violations, violations=violations, workloads=workloads)
