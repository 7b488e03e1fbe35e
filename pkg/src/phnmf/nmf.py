"""Nonnegative matrix factorization by multiplicative updates.

Factorizes a nonnegative X (n x m) as W H with W (n x k) and H (k x m)
both entrywise nonnegative, minimizing 0.5 * ||X - WH||_F^2. The classic
multiplicative rules are applied H first, then W, within each iteration:

    H <- H * (W^T X) / (W^T W H + eps)
    W <- W * (X H^T) / (W H H^T + eps)

The tiny denominator guard eps keeps the updates defined everywhere while
moving fixed points by at most machine-precision amounts. The objective is
recorded once per full sweep and is non-increasing up to that same
guard-induced slack.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .linalg import (
    Matrix,
    SeededRng,
    ValidationError,
    as_matrix,
    save_matrix_csv,
)

INIT_FLOOR = 1e-6


@dataclass(frozen=True)
class NmfConfig:
    """Loop control for one factorization run.

    rank:       number of components k, at most min(n, m) of the target.
    max_iters:  hard iteration cap.
    rel_tol:    stop once the relative objective change drops below this.
    mu_epsilon: denominator guard added to both update rules.
    seed:       64-bit master seed for the random initialization.
    """

    rank: int
    max_iters: int = 300
    rel_tol: float = 1e-4
    mu_epsilon: float = 1e-12
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValidationError("rank must be a positive integer")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be a positive integer")
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be positive")
        if not self.mu_epsilon > 0:
            raise ValidationError("mu_epsilon must be positive")


@dataclass
class Factorization:
    """Result of one NMF run: factors, objective trace, and run metadata."""

    W: Matrix
    H: Matrix
    objective_history: np.ndarray
    iterations_run: int
    converged: bool
    rank: int
    seed: int

    def objective(self) -> float:
        return float(self.objective_history[-1])

    def relative_residual(self, X: Matrix) -> float:
        """||X - WH||_F / ||X||_F (0 when X is the zero matrix)."""
        x_norm = float(np.linalg.norm(X))
        if x_norm == 0.0:
            return 0.0
        return float(np.linalg.norm(X - self.W @ self.H)) / x_norm


def init_factors(n: int, m: int, k: int, rng: SeededRng) -> tuple[Matrix, Matrix]:
    """Draw strictly positive starting factors, W then H, from one stream.

    Entries are uniform on [1e-6, 1): exact zeros are absorbing under the
    multiplicative rules, so the floor keeps every entry live.
    """
    if n < 1 or m < 1 or k < 1:
        raise ValidationError(f"dimensions must be positive, got n={n} m={m} k={k}")
    if k > min(n, m):
        raise ValidationError(f"rank k={k} exceeds min(n, m)={min(n, m)}")
    gen = rng.generator()
    w = INIT_FLOOR + (1.0 - INIT_FLOOR) * gen.random((n, k))
    h = INIT_FLOOR + (1.0 - INIT_FLOOR) * gen.random((k, m))
    return w, h


def mu_update_h(X: Matrix, W: Matrix, H: Matrix, mu_epsilon: float) -> Matrix:
    """One multiplicative step on H: H * (W^T X) / (W^T W H + eps)."""
    numer = W.T @ X
    denom = (W.T @ W) @ H
    denom += mu_epsilon
    return H * numer / denom


def mu_update_w(X: Matrix, W: Matrix, H: Matrix, mu_epsilon: float) -> Matrix:
    """One multiplicative step on W: W * (X H^T) / (W H H^T + eps)."""
    numer = X @ H.T
    denom = W @ (H @ H.T)
    denom += mu_epsilon
    return W * numer / denom


def _half_sq_residual(X: Matrix, W: Matrix, H: Matrix) -> float:
    r = X - W @ H
    return 0.5 * float(np.vdot(r, r))


def nmf(X, config: NmfConfig) -> Factorization:
    """Run multiplicative-update NMF on a nonnegative matrix.

    Each iteration updates H then W, then records 0.5*||X - WH||_F^2.
    Convergence is declared when
        |obj_t - obj_{t-1}| / max(obj_{t-1}, 1e-12) < rel_tol,
    otherwise the loop runs to max_iters. The same (X, config) always
    produces a bit-identical result.
    """
    X = as_matrix(X, "X")
    if np.any(X < 0):
        raise ValidationError("nmf requires a nonnegative input matrix")
    n, m = X.shape
    if config.rank > min(n, m):
        raise ValidationError(
            f"rank {config.rank} exceeds min(n, m) = {min(n, m)} for shape {X.shape}"
        )

    W, H = init_factors(n, m, config.rank, SeededRng(config.seed))
    eps = config.mu_epsilon
    history: list[float] = []
    converged = False
    for _ in range(config.max_iters):
        H = mu_update_h(X, W, H, eps)
        W = mu_update_w(X, W, H, eps)
        obj = _half_sq_residual(X, W, H)
        history.append(obj)
        if len(history) >= 2:
            prev = history[-2]
            if abs(obj - prev) / max(prev, 1e-12) < config.rel_tol:
                converged = True
                break

    return Factorization(
        W=W,
        H=H,
        objective_history=np.asarray(history, dtype=np.float64),
        iterations_run=len(history),
        converged=converged,
        rank=config.rank,
        seed=config.seed,
    )


def export_factorization(fact: Factorization, out_dir) -> None:
    """Write W.csv, H.csv, and meta.json into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    save_matrix_csv(fact.W, os.path.join(out_dir, "W.csv"))
    save_matrix_csv(fact.H, os.path.join(out_dir, "H.csv"))
    meta = {
        "rank": fact.rank,
        "seed": fact.seed,
        "iterations": fact.iterations_run,
        "converged": fact.converged,
        "final_objective": fact.objective(),
    }
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
