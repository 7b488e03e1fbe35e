"""Scoring of recovered structure and subgroup regression fits.

Clustering accuracy follows the modal-label protocol: each discovered
leaf is named by the most frequent ground-truth label among its members,
and a row counts as correct when its leaf's name matches its own label.
Accuracy is reported both over assigned rows only and over all rows
(unassigned residuals counted as errors).

Regression is ordinary least squares or ridge with an unpenalized
intercept (fit on centered data), plus repeated k-fold cross-validation
for the ridge penalty and cosine-based comparison of coefficient vectors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import (
    Matrix,
    SeededRng,
    ShapeError,
    ValidationError,
    as_matrix,
    as_vector,
    cosine_similarity,
)

DEFAULT_LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
_RANK_RTOL = 1e-10


class RankDeficiencyError(ValidationError):
    """The design matrix is rank deficient; use ridge instead."""


@dataclass
class AccuracyReport:
    """Modal-label clustering accuracy under both residual conventions."""

    accuracy_assigned: float
    accuracy_total: float
    leaf_to_label: dict[str, str]
    confusion: Matrix
    leaf_ids: list[str]
    label_order: list[str]
    n_assigned: int
    n_total: int


@dataclass
class RegressionFit:
    """Coefficients (intercept separate), penalty, and CV diagnostics."""

    coefficients: np.ndarray
    intercept: float
    lam: float
    cv_mse_table: dict[float, float] | None = None

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X, "X")
        return X @ self.coefficients + self.intercept


def label_match_accuracy(leaf_partition, residuals, true_labels) -> AccuracyReport:
    """Score a discovered partition against ground-truth labels.

    leaf_partition is a list of (leaf_id, member indices); members must be
    disjoint. residuals are rows assigned to no leaf, counted as errors in
    accuracy_total and excluded from accuracy_assigned. Modal-label ties
    break toward the lexicographically smallest label. Empty leaves are
    skipped with a warning.
    """
    true_labels = np.asarray([str(v) for v in true_labels], dtype=object)
    n_total = len(true_labels)
    label_order = sorted(set(true_labels.tolist()))
    label_pos = {lab: i for i, lab in enumerate(label_order)}

    kept: list[tuple[str, np.ndarray]] = []
    seen = np.zeros(n_total, dtype=bool)
    for leaf_id, members in leaf_partition:
        members = np.asarray(members, dtype=np.int64)
        if len(members) == 0:
            warnings.warn(f"leaf {leaf_id!r} is empty and was excluded")
            continue
        if seen[members].any():
            raise ValidationError("leaf member sets overlap; accuracy needs a partition")
        seen[members] = True
        kept.append((str(leaf_id), members))

    confusion = np.zeros((len(kept), len(label_order)), dtype=np.float64)
    leaf_to_label: dict[str, str] = {}
    correct = 0
    assigned = 0
    for row, (leaf_id, members) in enumerate(kept):
        labs = true_labels[members]
        for lab in labs:
            confusion[row, label_pos[lab]] += 1
        counts: dict[str, int] = {}
        for lab in labs:
            counts[lab] = counts.get(lab, 0) + 1
        top = max(counts.values())
        modal = min(lab for lab, c in counts.items() if c == top)
        leaf_to_label[leaf_id] = modal
        correct += counts[modal]
        assigned += len(members)

    residuals = np.asarray(residuals, dtype=np.int64)
    accuracy_assigned = correct / assigned if assigned else 0.0
    accuracy_total = correct / n_total if n_total else 0.0
    return AccuracyReport(
        accuracy_assigned=float(accuracy_assigned),
        accuracy_total=float(accuracy_total),
        leaf_to_label=leaf_to_label,
        confusion=confusion,
        leaf_ids=[leaf_id for leaf_id, _ in kept],
        label_order=label_order,
        n_assigned=int(assigned),
        n_total=int(n_total),
    )


def _center(X: Matrix, y: np.ndarray):
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    return X - x_mean, y - y_mean, x_mean, y_mean


def ols(X, y) -> RegressionFit:
    """Least squares with an intercept.

    Refuses rank-deficient designs (smallest singular value of the
    centered matrix at most 1e-10 times the largest, which also catches
    columns collinear with the intercept); ridge handles those.
    """
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    if X.shape[0] != len(y):
        raise ShapeError(f"X has {X.shape[0]} rows but y has {len(y)}")
    xc, yc, x_mean, y_mean = _center(X, y)
    svals = np.linalg.svd(xc, compute_uv=False)
    if svals[-1] <= _RANK_RTOL * svals[0]:
        raise RankDeficiencyError(
            "design matrix is rank deficient (or has a constant column); use ridge"
        )
    theta, *_ = np.linalg.lstsq(xc, yc, rcond=None)
    intercept = y_mean - float(x_mean @ theta)
    return RegressionFit(coefficients=theta, intercept=intercept, lam=0.0)


def ridge(X, y, lam: float) -> RegressionFit:
    """Ridge regression with an unpenalized intercept (centered fit)."""
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    if X.shape[0] != len(y):
        raise ShapeError(f"X has {X.shape[0]} rows but y has {len(y)}")
    if lam < 0:
        raise ValidationError("lambda must be non-negative")
    xc, yc, x_mean, y_mean = _center(X, y)
    if lam == 0.0:
        theta, *_ = np.linalg.lstsq(xc, yc, rcond=None)
    else:
        gram = xc.T @ xc
        gram[np.diag_indices_from(gram)] += lam
        theta = np.linalg.solve(gram, xc.T @ yc)
    intercept = y_mean - float(x_mean @ theta)
    return RegressionFit(coefficients=theta, intercept=intercept, lam=float(lam))


def ridge_cv(
    X,
    y,
    grid=DEFAULT_LAMBDA_GRID,
    folds: int = 5,
    repeats: int = 3,
    rng: SeededRng | None = None,
) -> RegressionFit:
    """Pick the ridge penalty by repeated k-fold cross-validation.

    Each repeat reshuffles the rows from its own derived stream, so the
    result is reproducible and independent of evaluation order. The
    penalty with the lowest mean held-out MSE wins; ties go to the
    smaller penalty. The returned fit is refit on all rows.
    """
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    if X.shape[0] != len(y):
        raise ShapeError(f"X has {X.shape[0]} rows but y has {len(y)}")
    if folds < 2:
        raise ValidationError("folds must be at least 2")
    if X.shape[0] < folds:
        raise ValidationError(f"{X.shape[0]} rows cannot fill {folds} folds")
    if repeats < 1:
        raise ValidationError("repeats must be at least 1")
    lambdas = sorted(set(float(g) for g in grid))
    if not lambdas:
        raise ValidationError("lambda grid is empty")
    if any(l < 0 for l in lambdas):
        raise ValidationError("lambda grid must be non-negative")
    rng = rng or SeededRng(0)

    n = X.shape[0]
    sq_errors = {lam: [] for lam in lambdas}
    for rep in range(repeats):
        order = rng.stream(rep).generator().permutation(n)
        for part in np.array_split(order, folds):
            train = np.setdiff1d(order, part, assume_unique=True)
            for lam in lambdas:
                fit = ridge(X[train], y[train], lam)
                resid = y[part] - fit.predict(X[part])
                sq_errors[lam].append(float(np.mean(resid**2)))
    table = {lam: float(np.mean(errs)) for lam, errs in sq_errors.items()}
    best = min(lambdas, key=lambda lam: (table[lam], lam))
    final = ridge(X, y, best)
    final.cv_mse_table = table
    return final


def coeff_alignment(sub_fits: dict, pop_fit: RegressionFit, thetas_true: dict | None = None):
    """Compare subgroup coefficient vectors against truth and the pooled fit.

    Returns one row per subgroup (sorted by name) with cosines computed on
    the coefficients, intercepts excluded:

        subgroup_vs_population: cos(theta_group, theta_pooled)
        subgroup_vs_truth:      cos(theta_group, theta_true)   (if truth given)
        population_vs_truth:    cos(theta_pooled, theta_true)  (if truth given)
    """
    rows = []
    for name in sorted(sub_fits):
        fit = sub_fits[name]
        if len(fit.coefficients) != len(pop_fit.coefficients):
            raise ShapeError(f"coefficient length mismatch for group {name!r}")
        row = {
            "group": name,
            "subgroup_vs_population": cosine_similarity(
                fit.coefficients, pop_fit.coefficients
            ),
        }
        if thetas_true is not None:
            truth = as_vector(thetas_true[name], f"theta_true[{name}]")
            row["subgroup_vs_truth"] = cosine_similarity(fit.coefficients, truth)
            row["population_vs_truth"] = cosine_similarity(pop_fit.coefficients, truth)
        rows.append(row)
    return rows
