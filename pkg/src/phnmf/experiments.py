"""Replicated desk-scale experiments: clustering accuracy and regression
alignment on the synthetic populations.

The accuracy experiment regenerates a fresh synthetic dataset per
replicate, discovers a population tree with hard splits at fixed rank 2
per level, and scores the leaves against the known group labels under the
modal-label protocol. Replicates draw their data and tree seeds from
disjoint streams of the master seed, so any subset can be rerun (or run
in parallel) with identical results.

The regression experiment compares per-subgroup coefficient vectors with
the known group coefficients and with a pooled fit. The response is a
noiseless function of the respondents' latent topic weights, so those
weights are the regression's explanatory variables; what is being tested
is the discovered partition. Subgroups are the discovered tree leaves
pooled by modal label, so impure leaves drag the subgroup fit away from
the group's true coefficients while the pooled fit blends all groups.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evaluation import (
    RankDeficiencyError,
    RegressionFit,
    coeff_alignment,
    label_match_accuracy,
    ols,
    ridge_cv,
)
from .hierarchy import HnmfConfig, leaves, phnmf, tree_residuals
from .linalg import SeededRng, ValidationError, derive_seed
from .synthetic import GROUP_LABELS, SyntheticSpec, generate

_DATA_LANE = 0
_TREE_LANE = 1
_CV_LANE = 3


@dataclass(frozen=True)
class ExperimentConfig:
    """Protocol knobs shared by the replicated experiments.

    The stopping threshold is permissive by default: on the synthetic
    populations the conservative similarity score rarely dips low, and
    letting pure leaves over-split costs nothing under modal-label
    scoring while an early stop (two groups merged) is unrecoverable.
    """

    alpha: float = 0.05
    alpha_mode: str = "relative"
    beta: float = 0.8
    rank: int | None = 2
    n_seeds: int = 10
    max_depth: int = 6
    max_iters: int = 300
    rel_tol: float = 1e-4

    def tree_config(self, seed: int) -> HnmfConfig:
        return HnmfConfig(
            alpha=self.alpha,
            alpha_mode=self.alpha_mode,
            beta=self.beta,
            rank=self.rank,
            n_seeds=self.n_seeds,
            max_depth=self.max_depth,
            max_iters=self.max_iters,
            rel_tol=self.rel_tol,
            seed=seed,
        )


@dataclass
class ReplicateResult:
    replicate: int
    data_seed: int
    tree_seed: int
    accuracy_assigned: float
    accuracy_total: float
    n_leaves: int
    n_assigned: int
    n_residual: int


@dataclass
class AccuracySummary:
    kind: str
    replicates: list[ReplicateResult]
    mean_assigned: float
    se_assigned: float
    mean_total: float
    se_total: float


def _one_accuracy_replicate(args) -> ReplicateResult:
    kind, master_seed, r, config = args
    data_seed = derive_seed(master_seed, _DATA_LANE, r)
    tree_seed = derive_seed(master_seed, _TREE_LANE, r)
    ds = generate(kind, SyntheticSpec(seed=data_seed))
    tree = phnmf(ds.X, config.tree_config(tree_seed))
    lvs = leaves(tree)
    resid = tree_residuals(tree)
    report = label_match_accuracy(lvs, resid, ds.labels)
    return ReplicateResult(
        replicate=r,
        data_seed=data_seed,
        tree_seed=tree_seed,
        accuracy_assigned=report.accuracy_assigned,
        accuracy_total=report.accuracy_total,
        n_leaves=len(lvs),
        n_assigned=report.n_assigned,
        n_residual=len(resid),
    )


def _mean_se(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return mean, se


def accuracy_experiment(
    kind: str,
    replicates: int,
    master_seed: int,
    config: ExperimentConfig | None = None,
    threads: int | None = None,
) -> AccuracySummary:
    """Run the replicated clustering-accuracy protocol.

    threads > 1 fans replicates out over a process pool; results are
    keyed by replicate index, so the summary is schedule-independent.
    """
    if replicates < 1:
        raise ValidationError("replicates must be at least 1")
    config = config or ExperimentConfig()
    if threads is None:
        threads = int(os.environ.get("PHNMF_THREADS", "1") or "1")
    jobs = [(kind, master_seed, r, config) for r in range(replicates)]
    if threads > 1 and replicates > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_one_accuracy_replicate, jobs))
    else:
        results = [_one_accuracy_replicate(job) for job in jobs]
    results.sort(key=lambda res: res.replicate)
    mean_a, se_a = _mean_se([res.accuracy_assigned for res in results])
    mean_t, se_t = _mean_se([res.accuracy_total for res in results])
    return AccuracySummary(
        kind=kind,
        replicates=results,
        mean_assigned=mean_a,
        se_assigned=se_a,
        mean_total=mean_t,
        se_total=se_t,
    )


def _fit_group(X, y, kind: str, rng: SeededRng) -> RegressionFit:
    if kind == "continuous":
        try:
            return ols(X, y)
        except RankDeficiencyError:
            return ridge_cv(X, y, rng=rng)
    return ridge_cv(X, y, rng=rng)


def regression_experiment(
    kind: str,
    master_seed: int,
    config: ExperimentConfig | None = None,
) -> list[dict]:
    """Per-subgroup coefficient alignment table for one replicate.

    Subgroups are identified by modal label: leaves sharing a label pool
    into one discovered subgroup, giving one row per label (sorted) with
    cosines of the subgroup fit against the known group coefficients and
    against the pooled fit, plus the pooled fit against the truth.
    Continuous data uses least squares, categorical uses cross-validated
    ridge (least squares also falls back to ridge if a subgroup is rank
    deficient).
    """
    config = config or ExperimentConfig()
    data_seed = derive_seed(master_seed, _DATA_LANE)
    tree_seed = derive_seed(master_seed, _TREE_LANE)
    cv_seed = derive_seed(master_seed, _CV_LANE)

    ds = generate(kind, SyntheticSpec(seed=data_seed))
    w_explanatory = ds.W_true

    tree = phnmf(ds.X, config.tree_config(tree_seed))
    lvs = leaves(tree)
    resid = tree_residuals(tree)
    report = label_match_accuracy(lvs, resid, ds.labels)

    pop_fit = _fit_group(w_explanatory, ds.y, kind, SeededRng(derive_seed(cv_seed, 0)))

    by_label: dict[str, list[np.ndarray]] = {}
    for leaf_id, members in lvs:
        by_label.setdefault(report.leaf_to_label[leaf_id], []).append(members)

    group_index = {label: g for g, label in enumerate(GROUP_LABELS)}
    sub_fits: dict[str, RegressionFit] = {}
    thetas_true: dict[str, np.ndarray] = {}
    for i, label in enumerate(sorted(by_label)):
        members = np.sort(np.concatenate(by_label[label]))
        rng = SeededRng(derive_seed(cv_seed, 1 + i))
        sub_fits[label] = _fit_group(w_explanatory[members], ds.y[members], kind, rng)
        thetas_true[label] = ds.thetas[group_index[label]]

    return coeff_alignment(sub_fits, pop_fit, thetas_true)
