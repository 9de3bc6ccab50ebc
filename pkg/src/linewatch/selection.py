"""Isolating modeling-suitable cases: prefilter, SVD, t-SNE, DBSCAN, suitability."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dbscan import dbscan
from .features import l_phase_buckets_used, l_phase_utilization, phase_distribution, PHASE_BUCKETS
from .ingest import Case, Corpus
from .tsne import TsneResult, tsne_embed


class SelectionError(ValueError):
    pass


def prefilter_cases(
    corpus: Corpus,
    category: str = "Litigation",
    min_items: int = 20,
    min_phases: int = 3,
) -> list[Case]:
    """Keep cases of the category with enough items and enough phase spread."""
    kept = [
        c
        for c in corpus.cases
        if c.category == category
        and len(c.items) >= min_items
        and len(l_phase_buckets_used(c)) >= min_phases
    ]
    if not kept:
        raise SelectionError(
            f"no cases survive the prefilter (category={category!r}, "
            f"min_items={min_items}, min_phases={min_phases}); relax the thresholds"
        )
    return kept


@dataclass
class ReducedMatrix:
    scores: np.ndarray  # (N, k)
    singular_values: np.ndarray  # all singular values
    explained_variance_ratio: np.ndarray  # (k,)
    components: np.ndarray  # (k, p) right singular vectors
    column_means: np.ndarray


def svd_reduce(matrix: np.ndarray, variance_target: float = 0.95) -> ReducedMatrix:
    """Column-center and keep the fewest components reaching the variance target."""
    x = np.asarray(matrix, dtype=float)
    if x.shape[0] < 2:
        raise SelectionError("need at least two rows for a decomposition")
    means = x.mean(axis=0)
    centered = x - means
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    total = (s**2).sum()
    if total <= 0:
        raise SelectionError("zero-variance matrix")
    ratios = s**2 / total
    cum = np.cumsum(ratios)
    k = int(np.searchsorted(cum, variance_target - 1e-12) + 1)
    k = min(k, len(s))
    return ReducedMatrix(
        scores=centered @ vt[:k].T,
        singular_values=s,
        explained_variance_ratio=ratios[:k],
        components=vt[:k],
        column_means=means,
    )


@dataclass
class ClusterAssignment:
    case_ids: list[str]
    labels: np.ndarray

    @property
    def cluster_count(self) -> int:
        return len(set(self.labels[self.labels >= 0]))


def cluster_utilizations(assignment: ClusterAssignment, cases: list[Case]) -> dict[int, float]:
    """Median L-phase utilization per cluster (noise excluded)."""
    by_id = {c.case_id: c for c in cases}
    utils: dict[int, list[float]] = {}
    for cid, label in zip(assignment.case_ids, assignment.labels):
        if label < 0:
            continue
        utils.setdefault(int(label), []).append(l_phase_utilization(by_id[cid]))
    return {label: float(np.median(vals)) for label, vals in sorted(utils.items())}


def select_suitable(
    assignment: ClusterAssignment,
    cases: list[Case],
    utilization_threshold: float = 0.6,
) -> list[str]:
    """Case ids of every cluster whose median phase utilization meets the bar."""
    medians = cluster_utilizations(assignment, cases)
    suitable = {label for label, med in medians.items() if med >= utilization_threshold}
    if not suitable:
        report = ", ".join(f"cluster {k}: {v:.3f}" for k, v in medians.items()) or "no clusters"
        raise SelectionError(
            f"no cluster reaches utilization {utilization_threshold} ({report})"
        )
    return [
        cid
        for cid, label in zip(assignment.case_ids, assignment.labels)
        if label >= 0 and int(label) in suitable
    ]


@dataclass
class SelectionResult:
    case_ids: list[str]
    assignment: ClusterAssignment
    embedding: TsneResult
    reduced: ReducedMatrix
    prefiltered_ids: list[str] = field(default_factory=list)


def run_selection(
    corpus: Corpus,
    seed: int,
    category: str = "Litigation",
    min_items: int = 20,
    min_phases: int = 3,
    variance_target: float = 0.95,
    perplexity: float = 25.0,
    learning_rate: float = 50.0,
    iterations: int = 10000,
    init: str = "pca",
    eps: float = 4.5,
    min_samples: int = 10,
    utilization_threshold: float = 0.6,
) -> SelectionResult:
    cases = prefilter_cases(corpus, category, min_items, min_phases)
    matrix = np.vstack([phase_distribution(c).fractions for c in cases])
    reduced = svd_reduce(matrix, variance_target)
    embedding = tsne_embed(
        reduced.scores, perplexity, learning_rate, iterations, init, seed
    )
    labels = dbscan(embedding.coords, eps, min_samples)
    assignment = ClusterAssignment([c.case_id for c in cases], labels)
    selected = select_suitable(assignment, cases, utilization_threshold)
    return SelectionResult(
        case_ids=selected,
        assignment=assignment,
        embedding=embedding,
        reduced=reduced,
        prefiltered_ids=[c.case_id for c in cases],
    )


def embedding_csv(result: SelectionResult) -> str:
    lines = ["case_id,x,y,cluster"]
    for cid, (x, y), label in zip(
        result.assignment.case_ids, result.embedding.coords, result.assignment.labels
    ):
        lines.append(f"{cid},{x!r},{y!r},{int(label)}")
    return "\n".join(lines) + "\n"
