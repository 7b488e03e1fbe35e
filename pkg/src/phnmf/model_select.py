"""Stability-based model selection for NMF.

The stability ("feature similarity") of a factorization rank is judged by
refactorizing the same matrix from several seeded initializations and
comparing the rows of the resulting H matrices. Rows are matched across a
pair of runs by an exact optimal assignment on pairwise cosines; the pair's
score is the weakest matched cosine, and the rank's score is the minimum
over all run pairs. This most-pessimistic aggregation makes the score a
usable stopping signal: one unstable component anywhere drags it down.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .linalg import Matrix, ShapeError, ValidationError, as_matrix, cosine_matrix, derive_seed
from .nmf import Factorization, NmfConfig, nmf

# Run seeds and child streams are derived under distinct tags so that the
# two derivation families can never collide.
_RUN_TAG = 1

DEFAULT_N_SEEDS = 10
DEFAULT_K_MIN = 2
DEFAULT_K_MAX = 8


@dataclass
class SimilarityReport:
    """Cross-seed stability of rank-k factorizations of one matrix.

    per_pair_min[i, j] is the least matched-row cosine between the H
    factors of runs i and j (diagonal fixed at 1). score is the minimum
    over all off-diagonal pairs, in [0, 1] for nonnegative inputs.
    """

    rank: int
    n_seeds: int
    seeds: tuple[int, ...]
    per_pair_min: Matrix
    score: float

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "n_seeds": self.n_seeds,
            "seeds": list(self.seeds),
            "per_pair_min": self.per_pair_min.tolist(),
            "score": self.score,
        }


@dataclass
class RankSelection:
    """Stability score per candidate rank and the winning rank."""

    candidate_scores: dict[int, float]
    chosen_k: int
    chosen_score: float

    def to_dict(self) -> dict:
        return {
            "candidate_scores": {str(k): v for k, v in sorted(self.candidate_scores.items())},
            "chosen_k": self.chosen_k,
            "chosen_score": self.chosen_score,
        }


def match_rows(h_a, h_b) -> tuple[np.ndarray, float]:
    """Optimally pair the rows of two k x m matrices by cosine similarity.

    Returns (assignment, min_matched_cosine) where assignment[i] = j means
    row i of h_a is paired with row j of h_b. The pairing maximizes the
    total cosine over all k! candidates (solved exactly), and
    min_matched_cosine is the weakest cosine among the chosen pairs.
    """
    h_a = as_matrix(h_a, "h_a")
    h_b = as_matrix(h_b, "h_b")
    if h_a.shape != h_b.shape:
        raise ShapeError(f"match_rows: shapes differ {h_a.shape} vs {h_b.shape}")
    cos = cosine_matrix(h_a, h_b)
    row_ind, col_ind = linear_sum_assignment(cos, maximize=True)
    assignment = np.empty(h_a.shape[0], dtype=np.int64)
    assignment[row_ind] = col_ind
    matched = cos[row_ind, col_ind]
    return assignment, float(matched.min())


def similarity_runs(
    X,
    k: int,
    n_seeds: int,
    config: NmfConfig,
    run_seeds=None,
) -> tuple[SimilarityReport, list[Factorization]]:
    """Do the n_seeds factorizations behind a similarity score and keep them.

    Run seeds default to values derived from (config.seed, run index), so
    the report does not depend on execution order. Callers that want the
    factorizations themselves (the hierarchy reuses run 0 as the node's
    factorization) get them without paying for extra runs.
    """
    X = as_matrix(X, "X")
    if n_seeds < 2:
        raise ValidationError("n_seeds must be at least 2")
    if k > min(X.shape):
        raise ValidationError(f"rank {k} exceeds min dims of {X.shape}")
    if run_seeds is None:
        run_seeds = [derive_seed(config.seed, _RUN_TAG, i) for i in range(n_seeds)]
    else:
        run_seeds = [int(s) for s in run_seeds]
        if len(run_seeds) != n_seeds:
            raise ValidationError("run_seeds length must equal n_seeds")

    facts: list[Factorization] = []
    for i, s in enumerate(run_seeds):
        try:
            facts.append(nmf(X, replace(config, rank=k, seed=s)))
        except ValidationError as exc:
            raise ValidationError(f"nmf run {i} (seed {s}) failed: {exc}") from exc

    per_pair = np.ones((n_seeds, n_seeds), dtype=np.float64)
    for i in range(n_seeds):
        for j in range(i + 1, n_seeds):
            _, worst = match_rows(facts[i].H, facts[j].H)
            per_pair[i, j] = worst
            per_pair[j, i] = worst
    score = float(per_pair[np.triu_indices(n_seeds, k=1)].min())
    report = SimilarityReport(
        rank=k,
        n_seeds=n_seeds,
        seeds=tuple(run_seeds),
        per_pair_min=per_pair,
        score=score,
    )
    return report, facts


def feature_similarity(X, k: int, n_seeds: int, config: NmfConfig, run_seeds=None) -> SimilarityReport:
    """Stability score of rank-k factorizations across reseeded runs."""
    report, _ = similarity_runs(X, k, n_seeds, config, run_seeds=run_seeds)
    return report


def select_rank(
    X,
    k_min: int = DEFAULT_K_MIN,
    k_max: int = DEFAULT_K_MAX,
    n_seeds: int = DEFAULT_N_SEEDS,
    config: NmfConfig | None = None,
) -> RankSelection:
    """Pick the candidate rank with the highest stability score.

    Candidates run over [k_min, k_max] (bounded to 2..8); ties break toward
    the smaller rank.
    """
    X = as_matrix(X, "X")
    if not (2 <= k_min <= k_max <= 8):
        raise ValidationError(f"need 2 <= k_min <= k_max <= 8, got [{k_min}, {k_max}]")
    if k_min > min(X.shape):
        raise ValidationError(
            f"matrix of shape {X.shape} is too small for any candidate rank >= {k_min}"
        )
    if k_max > min(X.shape):
        raise ValidationError(f"k_max {k_max} exceeds min dims of {X.shape}")
    if config is None:
        config = NmfConfig(rank=k_min)

    scores: dict[int, float] = {}
    for k in range(k_min, k_max + 1):
        scores[k] = feature_similarity(X, k, n_seeds, config).score
    chosen_k = min(scores, key=lambda k: (-scores[k], k))
    return RankSelection(candidate_scores=scores, chosen_k=chosen_k, chosen_score=scores[chosen_k])


def export_similarity_report(report: SimilarityReport, path) -> None:
    """Write the report as JSON (rank, seeds, pairwise minima, score)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
