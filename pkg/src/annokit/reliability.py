"""Annotator graph and reliability scores.

Nodes are annotators; an edge connects two annotators who double-annotated
at least one common sample and carries their pairwise agreement. A node's
inter-annotator agreement e(A_i) is the (optionally reliability-weighted)
mean of its incident edge agreements, its intra-annotator agreement is the
agreement between its first-pass and re-annotation labels, and its
reliability blends the two:

    r_i = intra_weight * intra_i + (1 - intra_weight) * e_i

Reliabilities are normalized to mean 1.0 by dividing through by their
average, assuming none are negative. The computation runs either as a
single pass or iterated to a fixed point, re-weighting e with the previous
iteration's reliabilities (Jacobi-style, for order independence).
"""

from __future__ import annotations

import itertools
import re
import warnings
from dataclasses import dataclass, field

from .agreement import extract_paired_labels, krippendorff_alpha_nominal
from .core import AnnotationStore, Phase, ValidationError

MEAN_ONE_ATOL = 1e-9


@dataclass
class AnnotatorNode:
    intra_agreement: float | None = None
    inter_agreement: float | None = None
    reliability: float = 1.0


@dataclass(frozen=True)
class Edge:
    agreement: float
    sample_count: int


@dataclass(frozen=True)
class ReliabilityConfig:
    """Settings for reliability computation.

    intra_weight is the mixing weight on intra-annotator agreement, in
    [0, 1]; the remainder goes to inter-annotator agreement.
    """

    intra_weight: float = 0.5
    mode: str = "single_pass"
    use_weighted_inter: bool = False
    tolerance: float = 1e-6
    max_iterations: int = 100

    def __post_init__(self):
        if not 0.0 <= self.intra_weight <= 1.0:
            raise ValidationError(f"intra_weight {self.intra_weight} outside [0, 1]")
        if self.mode not in ("single_pass", "iterative"):
            raise ValidationError(f"mode must be 'single_pass' or 'iterative', got {self.mode!r}")
        if self.tolerance <= 0 or self.max_iterations < 1:
            raise ValidationError("tolerance must be > 0 and max_iterations >= 1")

    def to_dict(self) -> dict:
        return {
            "intra_weight": self.intra_weight,
            "mode": self.mode,
            "use_weighted_inter": self.use_weighted_inter,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
        }


class AnnotatorGraph:
    """Mutable agreement graph; reliability values live on the nodes."""

    def __init__(self):
        self.nodes: dict[str, AnnotatorNode] = {}
        self.edges: dict[tuple[str, str], Edge] = {}
        self.iterations: int | None = None
        self.converged: bool | None = None

    @staticmethod
    def _key(x: str, y: str) -> tuple[str, str]:
        return (x, y) if x <= y else (y, x)

    def add_node(self, annotator_id: str, intra_agreement: float | None = None):
        self.nodes[annotator_id] = AnnotatorNode(intra_agreement=intra_agreement)

    def add_edge(self, x: str, y: str, agreement: float, sample_count: int):
        if x == y:
            raise ValidationError("self-edges are not allowed; intra agreement lives on the node")
        self.edges[self._key(x, y)] = Edge(agreement, sample_count)

    def edge(self, x: str, y: str) -> Edge:
        return self.edges[self._key(x, y)]

    def neighbors(self, annotator_id: str) -> list[str]:
        out = []
        for x, y in self.edges:
            if x == annotator_id:
                out.append(y)
            elif y == annotator_id:
                out.append(x)
        return sorted(out)

    def degree(self, annotator_id: str) -> int:
        return len(self.neighbors(annotator_id))

    def reliabilities(self) -> dict[str, float]:
        return {a: node.reliability for a, node in sorted(self.nodes.items())}


def build_graph(store: AnnotationStore) -> AnnotatorGraph:
    """Build the agreement graph from a validated annotation store.

    Every pair of annotators sharing at least one double-annotated sample
    gets an edge carrying their pairwise agreement; nodes carry intra
    agreement where re-annotations exist. Node reliabilities start at 1.0.
    """
    graph = AnnotatorGraph()
    annotators = store.annotator_ids()
    if len(annotators) < 2:
        raise ValidationError("need at least 2 annotators to build an agreement graph")

    reannotators = {a.annotator_id for a in store.annotations if a.phase is Phase.RE}
    for annotator in annotators:
        intra = None
        if annotator in reannotators:
            paired = extract_paired_labels(store, annotator, annotator)
            intra = krippendorff_alpha_nominal(paired)
        graph.add_node(annotator, intra_agreement=intra)

    shared: dict[tuple[str, str], int] = {}
    for anns in store.first_phase_by_sample().values():
        for a, b in itertools.combinations(sorted(x.annotator_id for x in anns), 2):
            shared[(a, b)] = shared.get((a, b), 0) + 1
    for (a, b), count in shared.items():
        paired = extract_paired_labels(store, a, b)
        graph.add_edge(a, b, krippendorff_alpha_nominal(paired), count)

    isolated = [a for a in annotators if graph.degree(a) == 0]
    if isolated:
        raise ValidationError(
            f"annotator(s) {isolated} share no double-annotated samples with anyone; "
            "inter-annotator agreement is undefined"
        )
    return graph


def inter_agreement(graph: AnnotatorGraph, annotator_id: str, weighted: bool = False) -> float:
    """Mean agreement over the node's incident edges, e(A_i).

    With weighted=True each edge agreement is scaled by the partner's
    current reliability (which should be mean-1 normalized).
    """
    if annotator_id not in graph.nodes:
        raise ValidationError(f"unknown annotator {annotator_id!r}")
    reliabilities = {a: n.reliability for a, n in graph.nodes.items()}
    return _inter_agreement(graph, annotator_id, weighted, reliabilities)


def _inter_agreement(graph, annotator_id, weighted, reliabilities) -> float:
    neighbors = graph.neighbors(annotator_id)
    if not neighbors:
        raise ValidationError(f"annotator {annotator_id!r} has no incident edges")
    total = 0.0
    for other in neighbors:
        agreement = graph.edge(annotator_id, other).agreement
        total += reliabilities[other] * agreement if weighted else agreement
    return total / len(neighbors)


def compute_reliability(graph: AnnotatorGraph, config: ReliabilityConfig) -> dict[str, float]:
    """Compute mean-1-normalized reliability per annotator.

    single_pass evaluates r_i once from the initial all-ones reliabilities
    and normalizes. iterative repeats the evaluation, feeding each round's
    normalized reliabilities into the weighted inter-agreement (when
    enabled), until the largest per-annotator change drops below the
    tolerance or max_iterations is hit; non-convergence keeps the last
    iterate and warns. Nodes are updated in place with the final values.
    """
    annotators = sorted(graph.nodes)
    lam = config.intra_weight
    if lam > 0.0:
        missing = [a for a in annotators if graph.nodes[a].intra_agreement is None]
        if missing:
            raise ValidationError(
                f"intra_weight={lam} requires intra agreement for every annotator; "
                f"missing for {missing}"
            )

    current = {a: 1.0 for a in annotators}
    max_iter = 1 if config.mode == "single_pass" else config.max_iterations
    converged = False
    iterations = 0
    inter = {}
    for _ in range(max_iter):
        iterations += 1
        inter = {
            a: _inter_agreement(graph, a, config.use_weighted_inter, current)
            for a in annotators
        }
        raw = {}
        for a in annotators:
            intra = graph.nodes[a].intra_agreement
            raw[a] = lam * (intra or 0.0) + (1.0 - lam) * inter[a]
        worst = min(raw.values())
        if worst <= 0.0:
            raise ValidationError(
                f"non-positive reliability {worst:.6g} encountered; mean-1 "
                "normalization assumes positive reliability scores"
            )
        mean = sum(raw.values()) / len(raw)
        updated = {a: r / mean for a, r in raw.items()}
        delta = max(abs(updated[a] - current[a]) for a in annotators)
        current = updated
        if config.mode == "single_pass" or delta < config.tolerance:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"reliability iteration did not converge within {max_iter} iterations "
            f"(last max change {delta:.3g}); returning the last iterate",
            stacklevel=2,
        )
    for a in annotators:
        graph.nodes[a].reliability = current[a]
        graph.nodes[a].inter_agreement = inter[a]
    graph.iterations = iterations
    graph.converged = converged
    return dict(current)


def reliability_report(graph: AnnotatorGraph, config: ReliabilityConfig) -> dict:
    """JSON-ready report of per-annotator agreement and reliability."""
    return {
        "annotators": {
            a: {
                "inter": node.inter_agreement,
                "intra": node.intra_agreement,
                "reliability": node.reliability,
            }
            for a, node in sorted(graph.nodes.items())
        },
        "config": config.to_dict(),
        "iterations": graph.iterations,
        "converged": graph.converged,
    }


_BARE_DOT_ID = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _dot_id(name: str) -> str:
    if _BARE_DOT_ID.match(name):
        return name
    escaped = name.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def export_dot(graph: AnnotatorGraph) -> str:
    """Render the annotator graph as undirected DOT text.

    Node labels carry intra agreement (when known) and reliability, edge
    labels the pairwise agreement, all to 3 decimals.
    """
    lines = ["graph annotators {"]
    for a, node in sorted(graph.nodes.items()):
        label_parts = [a]
        if node.intra_agreement is not None:
            label_parts.append(f"intra={node.intra_agreement:.3f}")
        label_parts.append(f"R={node.reliability:.3f}")
        label = "\\n".join(label_parts)
        lines.append(f'  {_dot_id(a)} [label="{label}"];')
    for (x, y), edge in sorted(graph.edges.items()):
        lines.append(f'  {_dot_id(x)} -- {_dot_id(y)} [label="{edge.agreement:.3f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
