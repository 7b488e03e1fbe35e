"""Synthetic hierarchical survey populations with known structure.

The population is a fixed three-split binary hierarchy over eight groups
of equal size (labels 1a1 .. 2b2). Rows are respondents; each respondent
carries four latent topic weights drawn from zero-truncated normals whose
means encode the hierarchy:

    split 1 (topic 0): groups 1** high (mean 64), groups 2** low (mean 3)
    split 2 (topic 1): groups *a* high (mean 45), groups *b* low (mean 3)
    split 3 (topic 2): groups **1 low (mean 3), groups **2 high (mean 50)
    shared  (topic 3): everyone mean 50

All variances default to 9. The observed matrix is the product of those
weights with a topic-word matrix whose columns are multinomial draws
favoring the owning topic 4:1. The continuous variant keeps the exact
product (so X has exact rank 4); the categorical variant thresholds a
second product at per-topic medians to produce 0/1 entries. Paired
variants built from the same seed share the person-topic matrix, labels,
group coefficients, and response.
"""

from __future__ import annotations

import json
import math
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

GROUP_LABELS = ("1a1", "1a2", "1b1", "1b2", "2a1", "2a2", "2b1", "2b2")

CONTINUOUS_TOPIC_WORDS = (30, 30, 30, 30)
CATEGORICAL_TOPIC_WORDS = (65, 30, 20, 5)

# Streams carved off the master seed. W, thetas, and the response must not
# depend on which variant is generated, so each consumer has its own lane.
_STREAM_W = 0
_STREAM_H_CONTINUOUS = 1
_STREAM_H_CATEGORICAL = 2
_STREAM_THETAS = 3


@dataclass(frozen=True)
class SyntheticSpec:
    """Sizes, distribution table, and seed for one synthetic population.

    split_params holds one (mean, variance) pair per branch for each of
    the three splits; shared_params is the topic every group discusses.
    """

    n_per_group: int = 200
    n_groups: int = 8
    topic_word_counts: tuple[int, ...] = CONTINUOUS_TOPIC_WORDS
    split_params: tuple = (
        ((64.0, 9.0), (3.0, 9.0)),
        ((45.0, 9.0), (3.0, 9.0)),
        ((3.0, 9.0), (50.0, 9.0)),
    )
    shared_params: tuple[float, float] = (50.0, 9.0)
    multinomial_trials: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_per_group < 1:
            raise ValidationError("n_per_group must be positive")
        if self.n_groups != len(GROUP_LABELS):
            raise ValidationError("the hierarchy topology is fixed at 8 groups")
        if len(self.topic_word_counts) != 4 or any(c < 1 for c in self.topic_word_counts):
            raise ValidationError("topic_word_counts must be 4 positive sizes")
        if self.multinomial_trials < 1:
            raise ValidationError("multinomial_trials must be positive")
        for pair in self.split_params:
            for mu, var in pair:
                if var <= 0:
                    raise ValidationError("all variances must be positive")
                if mu < 0:
                    raise ValidationError("all means must be non-negative")
        if self.shared_params[1] <= 0:
            raise ValidationError("shared variance must be positive")

    @property
    def n_rows(self) -> int:
        return self.n_per_group * self.n_groups

    @property
    def n_cols(self) -> int:
        return int(sum(self.topic_word_counts))


@dataclass
class SyntheticDataset:
    """One generated population: data, ground truth, and response."""

    X: Matrix
    labels: np.ndarray
    hierarchy_path: list[tuple[str, str, str]]
    W_true: Matrix
    H_true: Matrix
    thetas: Matrix
    y: np.ndarray
    kind: str
    spec: SyntheticSpec


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def sample_trunc_normal(mu: float, sigma2: float, rng: SeededRng, size: int | None = None):
    """Draw from N(mu, sigma2) conditioned on strictly positive values.

    Straight rejection sampling; parameters whose acceptance probability
    falls below 1e-6 are refused rather than looped on forever. size=None
    returns a scalar, otherwise an array of that length.
    """
    if sigma2 <= 0:
        raise ValidationError("sigma2 must be positive")
    sigma = math.sqrt(sigma2)
    accept = _norm_cdf(mu / sigma)
    if accept < 1e-6:
        raise ValidationError(
            f"truncated normal with mu={mu}, sigma2={sigma2} is numerically degenerate"
        )
    gen = rng.generator()
    out = _trunc_normal_from_gen(mu, sigma, gen, 1 if size is None else int(size))
    if size is None:
        return float(out[0])
    return out


def _trunc_normal_from_gen(mu: float, sigma: float, gen: np.random.Generator, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        draws = gen.normal(mu, sigma, size=n - filled)
        kept = draws[draws > 0.0]
        out[filled : filled + len(kept)] = kept
        filled += len(kept)
    return out


def _group_params(spec: SyntheticSpec, label: str) -> list[tuple[float, float]]:
    """The four (mean, variance) pairs governing one group's topic weights."""
    first, second, third = label[0], label[1], label[2]
    return [
        spec.split_params[0][0 if first == "1" else 1],
        spec.split_params[1][0 if second == "a" else 1],
        spec.split_params[2][0 if third == "1" else 1],
        tuple(spec.shared_params),
    ]


def gen_w_true(spec: SyntheticSpec, rng: SeededRng):
    """Person-topic weights, group labels, and per-row ancestor paths.

    Rows are grouped contiguously in label order, n_per_group rows each;
    every entry is an independent truncated-normal draw from the group's
    parameter table.
    """
    n = spec.n_rows
    w = np.empty((n, 4), dtype=np.float64)
    labels = np.empty(n, dtype=object)
    paths: list[tuple[str, str, str]] = []
    gen = rng.generator()
    for g, label in enumerate(GROUP_LABELS):
        rows = slice(g * spec.n_per_group, (g + 1) * spec.n_per_group)
        for col, (mu, var) in enumerate(_group_params(spec, label)):
            w[rows, col] = _trunc_normal_from_gen(
                mu, math.sqrt(var), gen, spec.n_per_group
            )
        labels[rows] = label
        paths.extend([(label[0], label[:2], label)] * spec.n_per_group)
    return w, labels, paths


def _gen_h_topics(word_counts, trials: int, gen: np.random.Generator) -> Matrix:
    """Topic-word matrix: each word's column is a normalized multinomial
    draw that favors the owning topic with probability 4/7 (1/7 elsewhere)."""
    h = np.empty((4, int(sum(word_counts))), dtype=np.float64)
    col = 0
    for topic, count in enumerate(word_counts):
        p = np.full(4, 1.0 / 7.0)
        p[topic] = 4.0 / 7.0
        draws = gen.multinomial(trials, p, size=int(count))
        h[:, col : col + count] = draws.T / float(trials)
        col += count
    return h


def gen_h_continuous(spec: SyntheticSpec, rng: SeededRng) -> Matrix:
    """Topic-word matrix for the continuous variant (30 words per topic)."""
    if tuple(spec.topic_word_counts) != CONTINUOUS_TOPIC_WORDS:
        raise ValidationError("continuous variant uses 30 words per topic")
    return _gen_h_topics(spec.topic_word_counts, spec.multinomial_trials, rng.generator())


def gen_thetas(spec: SyntheticSpec, rng: SeededRng) -> Matrix:
    """Per-group regression coefficients, i.i.d. uniform on [0.5, 2)."""
    return rng.generator().uniform(0.5, 2.0, size=(spec.n_groups, 4))


def gen_response(W_true, thetas, labels) -> np.ndarray:
    """y_i = <w_i, theta_g(i)> with g(i) the row's group."""
    W_true = as_matrix(W_true, "W_true")
    thetas = as_matrix(thetas, "thetas")
    if thetas.shape != (len(GROUP_LABELS), W_true.shape[1]):
        raise ValidationError(
            f"thetas must be {len(GROUP_LABELS)} x {W_true.shape[1]}, got {thetas.shape}"
        )
    group_index = {label: g for g, label in enumerate(GROUP_LABELS)}
    idx = np.array([group_index[str(lab)] for lab in labels], dtype=np.int64)
    if len(idx) != W_true.shape[0]:
        raise ValidationError("labels length must match W_true rows")
    return np.einsum("ij,ij->i", W_true, thetas[idx])


def _shared_parts(spec: SyntheticSpec):
    base = SeededRng(spec.seed)
    w, labels, paths = gen_w_true(spec, base.stream(_STREAM_W))
    thetas = gen_thetas(spec, base.stream(_STREAM_THETAS))
    y = gen_response(w, thetas, labels)
    return base, w, labels, paths, thetas, y


def gen_continuous(spec: SyntheticSpec | None = None) -> SyntheticDataset:
    """Continuous dataset: X = W_true H_true exactly (rank 4 by construction)."""
    spec = spec or SyntheticSpec()
    if tuple(spec.topic_word_counts) != CONTINUOUS_TOPIC_WORDS:
        spec = _with_counts(spec, CONTINUOUS_TOPIC_WORDS)
    base, w, labels, paths, thetas, y = _shared_parts(spec)
    h = _gen_h_topics(
        spec.topic_word_counts,
        spec.multinomial_trials,
        base.stream(_STREAM_H_CONTINUOUS).generator(),
    )
    x = w @ h
    return SyntheticDataset(
        X=x, labels=labels, hierarchy_path=paths, W_true=w, H_true=h,
        thetas=thetas, y=y, kind="continuous", spec=spec,
    )


def gen_categorical(spec: SyntheticSpec | None = None) -> SyntheticDataset:
    """Dichotomous dataset: threshold W_true H at per-topic medians.

    Topic sizes are 65/30/20/5 so topic importance is ordered by width.
    An entry is 1 iff its product value strictly exceeds the median of all
    product entries in its topic's column block. Shares W_true, labels,
    thetas, and y with the continuous dataset of the same seed.
    """
    spec = spec or SyntheticSpec(topic_word_counts=CATEGORICAL_TOPIC_WORDS)
    if tuple(spec.topic_word_counts) != CATEGORICAL_TOPIC_WORDS:
        spec = _with_counts(spec, CATEGORICAL_TOPIC_WORDS)
    base, w, labels, paths, thetas, y = _shared_parts(spec)
    h = _gen_h_topics(
        spec.topic_word_counts,
        spec.multinomial_trials,
        base.stream(_STREAM_H_CATEGORICAL).generator(),
    )
    product = w @ h
    x = np.zeros_like(product)
    col = 0
    for count in spec.topic_word_counts:
        block = product[:, col : col + count]
        x[:, col : col + count] = (block > np.median(block)).astype(np.float64)
        col += count
    return SyntheticDataset(
        X=x, labels=labels, hierarchy_path=paths, W_true=w, H_true=h,
        thetas=thetas, y=y, kind="categorical", spec=spec,
    )


def _with_counts(spec: SyntheticSpec, counts) -> SyntheticSpec:
    return SyntheticSpec(
        n_per_group=spec.n_per_group,
        n_groups=spec.n_groups,
        topic_word_counts=tuple(counts),
        split_params=spec.split_params,
        shared_params=spec.shared_params,
        multinomial_trials=spec.multinomial_trials,
        seed=spec.seed,
    )


def generate(kind: str, spec: SyntheticSpec | None = None) -> SyntheticDataset:
    if kind == "continuous":
        return gen_continuous(spec)
    if kind == "categorical":
        return gen_categorical(spec)
    raise ValidationError(f"unknown dataset kind: {kind!r}")


def export_dataset(ds: SyntheticDataset, out_dir) -> None:
    """Write X, labels, ground truth, thetas, response, and the generation parameters."""
    os.makedirs(out_dir, exist_ok=True)
    save_matrix_csv(ds.X, os.path.join(out_dir, "X.csv"))
    save_matrix_csv(ds.W_true, os.path.join(out_dir, "W_true.csv"))
    save_matrix_csv(ds.H_true, os.path.join(out_dir, "H_true.csv"))
    save_matrix_csv(ds.thetas, os.path.join(out_dir, "thetas.csv"))
    save_matrix_csv(ds.y.reshape(-1, 1), os.path.join(out_dir, "y.csv"))
    with open(os.path.join(out_dir, "labels.csv"), "w", encoding="ascii", newline="\n") as fh:
        for lab in ds.labels:
            fh.write(f"{lab}\n")
    meta = {
        "kind": ds.kind,
        "n_per_group": ds.spec.n_per_group,
        "n_groups": ds.spec.n_groups,
        "topic_word_counts": list(ds.spec.topic_word_counts),
        "split_params": [list(map(list, pair)) for pair in ds.spec.split_params],
        "shared_params": list(ds.spec.shared_params),
        "multinomial_trials": ds.spec.multinomial_trials,
        "seed": ds.spec.seed,
    }
    with open(os.path.join(out_dir, "spec.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
