"""Recursive factorization trees over rows of a nonnegative matrix.

Two procedures share the machinery here:

* hnmf_topdown: classic top-down hierarchical NMF. Rows may join several
  children (soft splits, every coefficient above the threshold counts) and
  recursion stops when a node holds fewer than min_docs rows.

* phnmf: population-based hierarchical NMF. Each row joins at most the
  child with its largest coefficient (hard splits, so every level is a
  partition), rows whose best coefficient is below the threshold stay
  behind at the node as residuals, and recursion stops when the cross-seed
  feature similarity of a node's submatrix drops to the beta threshold.

Node identifiers and random seeds are derived from the path from the
root, so trees are reproducible and independent of build order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import Matrix, ValidationError, as_matrix, derive_seed
from .model_select import DEFAULT_K_MAX, DEFAULT_K_MIN, DEFAULT_N_SEEDS, similarity_runs
from .nmf import NmfConfig

_CHILD_TAG = 2

LEAF_SIMILARITY = "similarity"
LEAF_TOO_SMALL = "too_small"
LEAF_MAX_DEPTH = "max_depth"
LEAF_MIN_DOCS = "min_docs"
LEAF_EMPTY_SPLIT = "empty_split"


@dataclass(frozen=True)
class HnmfConfig:
    """Shared knobs for both tree procedures.

    Exactly one of min_docs (topic trees) or beta (population trees) may be
    set; each procedure demands its own. alpha is the assignment threshold
    on W coefficients; in "relative" mode the effective threshold for a
    column is alpha times that column's largest entry, in "absolute" mode
    alpha is used as-is. rank=None selects the rank per node by stability
    over [k_min, k_max]; an integer fixes it for every node.
    """

    alpha: float = 0.05
    alpha_mode: str = "relative"
    beta: float | None = None
    min_docs: int | None = None
    max_depth: int = 6
    rank: int | None = None
    k_min: int = DEFAULT_K_MIN
    k_max: int = DEFAULT_K_MAX
    n_seeds: int = DEFAULT_N_SEEDS
    max_iters: int = 300
    rel_tol: float = 1e-4
    mu_epsilon: float = 1e-12
    seed: int = 0

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValidationError("alpha must be non-negative")
        if self.alpha_mode not in ("relative", "absolute"):
            raise ValidationError("alpha_mode must be 'relative' or 'absolute'")
        if self.beta is not None and not (0.0 <= self.beta <= 1.0):
            raise ValidationError("beta must lie in [0, 1]")
        if self.min_docs is not None and self.min_docs < 1:
            raise ValidationError("min_docs must be a positive integer")
        if self.beta is not None and self.min_docs is not None:
            raise ValidationError("set min_docs or beta, not both")
        if self.max_depth < 1:
            raise ValidationError("max_depth must be a positive integer")
        if self.rank is not None and self.rank < 1:
            raise ValidationError("rank must be positive when fixed")
        if self.n_seeds < 2:
            raise ValidationError("n_seeds must be at least 2")

    def nmf_config(self, rank: int, seed: int) -> NmfConfig:
        return NmfConfig(
            rank=rank,
            max_iters=self.max_iters,
            rel_tol=self.rel_tol,
            mu_epsilon=self.mu_epsilon,
            seed=seed,
        )


@dataclass
class PopulationTree:
    """One node of a factorization tree.

    members/residual_members index rows of the original matrix. component
    names the row of the parent's H that spawned this node. W_local and
    H_local are the node's own factorization (None when the node was
    closed before factorizing, e.g. at the depth cap).
    """

    node_id: str
    members: np.ndarray
    depth: int
    residual_members: np.ndarray
    rank_used: int | None = None
    similarity_score: float | None = None
    W_local: Matrix | None = None
    H_local: Matrix | None = None
    component: int | None = None
    leaf_reason: str | None = None
    children: list["PopulationTree"] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


# Topic trees reuse the node structure; only the build rules differ.
TopicTree = PopulationTree


def assign_hard(W, alpha) -> tuple[np.ndarray, np.ndarray]:
    """Assign each row to its argmax column when that entry clears alpha.

    alpha may be a scalar or a per-column array. Ties in the argmax go to
    the smallest column index. Returns (assignments, residuals) where
    assignments[l] is the winning column or -1, and residuals lists the
    rows left unassigned.
    """
    W = as_matrix(W, "W")
    if np.any(W < 0):
        raise ValidationError("assign_hard expects a nonnegative W")
    alpha_arr = np.asarray(alpha, dtype=np.float64)
    best = np.argmax(W, axis=1)
    best_vals = W[np.arange(W.shape[0]), best]
    thresholds = alpha_arr if alpha_arr.ndim == 0 else alpha_arr[best]
    keep = best_vals > thresholds
    assignments = np.where(keep, best, -1)
    residuals = np.flatnonzero(~keep)
    return assignments, residuals


def assign_soft(W, alpha) -> np.ndarray:
    """Boolean membership mask: row l belongs to every column with W > alpha."""
    W = as_matrix(W, "W")
    if np.any(W < 0):
        raise ValidationError("assign_soft expects a nonnegative W")
    return W > np.asarray(alpha, dtype=np.float64)


def _effective_alpha(W: Matrix, config: HnmfConfig):
    if config.alpha_mode == "absolute":
        return config.alpha
    return config.alpha * W.max(axis=0)


def _candidate_ranks(config: HnmfConfig, shape: tuple[int, int]) -> list[int]:
    cap = min(shape)
    if config.rank is not None:
        return [config.rank] if config.rank <= cap else []
    hi = min(config.k_max, cap)
    return list(range(config.k_min, hi + 1))


def _factorize_node(sub: Matrix, config: HnmfConfig, node_seed: int):
    """Pick a rank and factorize one node's submatrix.

    Returns (rank, similarity score, factorization). The stability runs
    double as restarts: the run with the lowest final objective at the
    chosen rank becomes the node's factorization (ties break toward the
    lowest run index), so no extra NMF run is spent and the node never
    splits along an inferior local optimum.
    """
    candidates = _candidate_ranks(config, sub.shape)
    if not candidates or min(sub.shape) < 1:
        return None
    best = None
    for k in candidates:
        report, facts = similarity_runs(
            sub, k, config.n_seeds, config.nmf_config(k, node_seed)
        )
        if best is None or report.score > best[1]:
            best = (k, report.score, min(facts, key=lambda f: f.objective()))
    return best


def phnmf(X, config: HnmfConfig) -> PopulationTree:
    """Grow a population tree by recursive hard splits.

    Every node (the root included) is split only while the feature
    similarity of its submatrix exceeds config.beta; nodes too small for
    any candidate rank or at the depth cap become leaves as well.
    """
    X = as_matrix(X, "X")
    if np.any(X < 0):
        raise ValidationError("phnmf requires a nonnegative input matrix")
    if config.beta is None:
        raise ValidationError("phnmf needs config.beta (set min_docs=None)")
    members = np.arange(X.shape[0], dtype=np.int64)
    return _grow_population(X, config, members, 0, "root", config.seed, None)


def _grow_population(
    X: Matrix,
    config: HnmfConfig,
    members: np.ndarray,
    depth: int,
    node_id: str,
    node_seed: int,
    component: int | None,
) -> PopulationTree:
    node = PopulationTree(
        node_id=node_id,
        members=members,
        depth=depth,
        residual_members=np.empty(0, dtype=np.int64),
        component=component,
    )
    if depth >= config.max_depth:
        node.leaf_reason = LEAF_MAX_DEPTH
        return node

    sub = X[members]
    picked = _factorize_node(sub, config, node_seed)
    if picked is None:
        node.leaf_reason = LEAF_TOO_SMALL
        return node
    rank, score, fact = picked
    node.rank_used = rank
    node.similarity_score = score
    node.W_local = fact.W
    node.H_local = fact.H

    if score <= config.beta:
        node.leaf_reason = LEAF_SIMILARITY
        return node

    assignments, resid_local = assign_hard(fact.W, _effective_alpha(fact.W, config))
    node.residual_members = members[resid_local]
    children = []
    for j in range(rank):
        picked_rows = assignments == j
        if not picked_rows.any():
            continue
        children.append(
            _grow_population(
                X,
                config,
                members[picked_rows],
                depth + 1,
                f"{node_id}.{j + 1}",
                derive_seed(node_seed, _CHILD_TAG, j),
                j,
            )
        )
    if not children:
        node.leaf_reason = LEAF_EMPTY_SPLIT
        return node
    node.children = children
    return node


def hnmf_topdown(X, config: HnmfConfig) -> TopicTree:
    """Grow a topic tree by recursive soft splits.

    A row joins every child whose coefficient clears alpha (children may
    overlap); a node is split only while it holds at least min_docs rows
    and is above the depth cap.
    """
    X = as_matrix(X, "X")
    if np.any(X < 0):
        raise ValidationError("hnmf_topdown requires a nonnegative input matrix")
    if config.min_docs is None:
        raise ValidationError("hnmf_topdown needs config.min_docs (set beta=None)")
    members = np.arange(X.shape[0], dtype=np.int64)
    return _grow_topic(X, config, members, 0, "root", config.seed, None)


def _grow_topic(
    X: Matrix,
    config: HnmfConfig,
    members: np.ndarray,
    depth: int,
    node_id: str,
    node_seed: int,
    component: int | None,
) -> TopicTree:
    node = TopicTree(
        node_id=node_id,
        members=members,
        depth=depth,
        residual_members=np.empty(0, dtype=np.int64),
        component=component,
    )
    if len(members) < config.min_docs:
        node.leaf_reason = LEAF_MIN_DOCS
        return node
    if depth >= config.max_depth:
        node.leaf_reason = LEAF_MAX_DEPTH
        return node

    sub = X[members]
    picked = _factorize_node(sub, config, node_seed)
    if picked is None:
        node.leaf_reason = LEAF_TOO_SMALL
        return node
    rank, score, fact = picked
    node.rank_used = rank
    node.similarity_score = score
    node.W_local = fact.W
    node.H_local = fact.H

    mask = assign_soft(fact.W, _effective_alpha(fact.W, config))
    node.residual_members = members[~mask.any(axis=1)]
    children = []
    for j in range(rank):
        if not mask[:, j].any():
            continue
        children.append(
            _grow_topic(
                X,
                config,
                members[mask[:, j]],
                depth + 1,
                f"{node_id}.{j + 1}",
                derive_seed(node_seed, _CHILD_TAG, j),
                j,
            )
        )
    if not children:
        node.leaf_reason = LEAF_EMPTY_SPLIT
        return node
    node.children = children
    return node


def leaves(tree: PopulationTree) -> list[tuple[str, np.ndarray]]:
    """All leaves in depth-first order as (node_id, member indices)."""
    out: list[tuple[str, np.ndarray]] = []

    def walk(node: PopulationTree) -> None:
        if node.is_leaf:
            out.append((node.node_id, node.members))
        else:
            for child in node.children:
                walk(child)

    walk(tree)
    return out


def tree_residuals(tree: PopulationTree) -> np.ndarray:
    """Rows retained as residuals anywhere in the tree, ascending."""
    parts: list[np.ndarray] = []

    def walk(node: PopulationTree) -> None:
        if len(node.residual_members):
            parts.append(node.residual_members)
        for child in node.children:
            walk(child)

    walk(tree)
    if not parts:
        return np.empty(0, dtype=np.int64)
    return np.sort(np.concatenate(parts))


def tree_to_dict(tree: PopulationTree, feature_names=None, top_features: int = 10) -> dict:
    """JSON-ready view of a tree.

    Each non-root node reports its top defining features: the heaviest
    entries of the parent's H row that spawned it.
    """

    def describe(node: PopulationTree, parent_h: Matrix | None) -> dict:
        features = []
        if parent_h is not None and node.component is not None:
            row = parent_h[node.component]
            order = np.argsort(row)[::-1][:top_features]
            for idx in order:
                label = feature_names[idx] if feature_names is not None else int(idx)
                features.append([label, float(row[idx])])
        return {
            "node_id": node.node_id,
            "depth": node.depth,
            "rank": node.rank_used,
            "similarity": node.similarity_score,
            "leaf_reason": node.leaf_reason,
            "component": node.component,
            "n_members": int(len(node.members)),
            "members": [int(i) for i in node.members],
            "residual_members": [int(i) for i in node.residual_members],
            "top_features": features,
            "children": [describe(c, node.H_local) for c in node.children],
        }

    return describe(tree, None)


def tree_to_dot(tree: PopulationTree) -> str:
    """Graphviz DOT rendering of the tree topology."""
    lines = ["digraph population_tree {", "  node [shape=box];"]

    def walk(node: PopulationTree) -> None:
        sim = "-" if node.similarity_score is None else f"{node.similarity_score:.3f}"
        label = f"{node.node_id}\\nn={len(node.members)}\\nsim={sim}"
        if node.leaf_reason:
            label += f"\\n[{node.leaf_reason}]"
        lines.append(f'  "{node.node_id}" [label="{label}"];')
        for child in node.children:
            lines.append(f'  "{node.node_id}" -> "{child.node_id}";')
            walk(child)

    walk(tree)
    lines.append("}")
    return "\n".join(lines) + "\n"
