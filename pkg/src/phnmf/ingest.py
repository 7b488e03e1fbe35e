"""Survey CSV ingestion: consolidation, indicator encoding, text topics.

A schema declares what each CSV column is. Multiple-choice satisfaction
columns are consolidated to positive/neutral/negative and emitted as a
pair of indicators; plain categorical columns get one indicator per
choice; free-text columns become tf-idf matrices reduced to a handful of
NMF topic activations; ordinal columns pass through as numbers;
demographic columns are kept in a side table and never enter the model
matrix. The assembled matrix is nonnegative with indicator features in
{0, 1}, so it feeds the factorization pipeline directly.
"""

from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import Matrix, ValidationError, as_matrix, save_matrix_csv
from .nmf import NmfConfig, nmf

COLUMN_KINDS = ("categorical", "satisfaction", "text", "ordinal", "demographic", "drop")

POS, NEUTRAL, NEG = "pos", "neutral", "neg"

# Missing cells and non-committal answers consolidate to neutral unless the
# schema says otherwise.
DEFAULT_SATISFACTION_MAP = {
    "Very Satisfied": POS,
    "Satisfied": POS,
    "Neutral": NEUTRAL,
    "Don't Know": NEUTRAL,
    "Dissatisfied": NEG,
    "Very Dissatisfied": NEG,
}


class SchemaError(ValidationError):
    """The schema and the data disagree."""


@dataclass
class ColumnSpec:
    name: str
    kind: str
    choices: list[str] | None = None
    mapping: dict[str, str] | None = None
    topics: int = 2
    min_df: int = 2

    def __post_init__(self) -> None:
        if self.kind not in COLUMN_KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical" and not self.choices:
            raise SchemaError(f"column {self.name!r}: categorical needs choices")
        if self.kind == "text" and self.topics < 1:
            raise SchemaError(f"column {self.name!r}: topics must be positive")


@dataclass
class SurveySchema:
    columns: list[ColumnSpec]

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("schema declares a column name more than once")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @classmethod
    def from_json(cls, path) -> "SurveySchema":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        cols = []
        for entry in raw["columns"]:
            cols.append(
                ColumnSpec(
                    name=entry["name"],
                    kind=entry["kind"],
                    choices=entry.get("choices"),
                    mapping=entry.get("mapping"),
                    topics=int(entry.get("topics", 2)),
                    min_df=int(entry.get("min_df", 2)),
                )
            )
        return cls(cols)


@dataclass
class EncodedSurvey:
    """Model matrix plus bookkeeping; demographics ride along separately."""

    X: Matrix
    feature_names: list[str]
    row_ids: list[int]
    demographics: dict[str, list[str | None]] = field(default_factory=dict)


def load_csv(path, schema: SurveySchema) -> dict[str, list]:
    """Read a header CSV into typed columns keyed by name.

    The header must contain exactly the schema's columns. Empty cells are
    recorded as None; ordinal columns are parsed to float. Errors carry
    the 1-based row number.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        expected = schema.names
        missing = [n for n in expected if n not in header]
        unknown = [n for n in header if n not in expected]
        if missing:
            raise SchemaError(f"{path}: header is missing columns {missing}")
        if unknown:
            raise SchemaError(f"{path}: header has unknown columns {unknown}")
        idx = {name: header.index(name) for name in expected}
        kinds = {c.name: c.kind for c in schema.columns}
        columns: dict[str, list] = {name: [] for name in expected}
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: row {rownum} has {len(row)} fields, expected {len(header)}"
                )
            for name in expected:
                cell = row[idx[name]].strip()
                if cell == "":
                    columns[name].append(None)
                elif kinds[name] == "ordinal":
                    try:
                        columns[name].append(float(cell))
                    except ValueError:
                        raise SchemaError(
                            f"{path}: row {rownum}, column {name!r}: "
                            f"cannot parse {cell!r} as a number"
                        ) from None
                else:
                    columns[name].append(cell)
    return columns


def consolidate_satisfaction(column, mapping: dict[str, str] | None = None) -> list[str]:
    """Collapse multi-point satisfaction answers to pos/neutral/neg.

    Missing cells become neutral. Observed answers absent from the mapping
    are an error listing the offending values.
    """
    mapping = mapping or DEFAULT_SATISFACTION_MAP
    bad_targets = {v for v in mapping.values()} - {POS, NEUTRAL, NEG}
    if bad_targets:
        raise SchemaError(f"mapping targets must be pos/neutral/neg, got {sorted(bad_targets)}")
    unmapped = sorted({str(v) for v in column if v is not None and str(v) not in mapping})
    if unmapped:
        raise SchemaError(f"unmapped satisfaction choices: {unmapped}")
    return [NEUTRAL if v is None else mapping[str(v)] for v in column]


def indicator_encode(ternary) -> Matrix:
    """Two indicator columns (is_pos, is_neg); neutral rows are all zero."""
    out = np.zeros((len(ternary), 2), dtype=np.float64)
    for i, v in enumerate(ternary):
        if v == POS:
            out[i, 0] = 1.0
        elif v == NEG:
            out[i, 1] = 1.0
        elif v != NEUTRAL:
            raise ValidationError(f"row {i}: expected pos/neutral/neg, got {v!r}")
    return out


def _tokenize(text: str) -> list[str]:
    return text.lower().split()


def tfidf(corpus, min_df: int = 2) -> tuple[Matrix, list[str]]:
    """Respondent-word matrix with smoothed idf and L2-normalized rows.

    tf is the raw in-document count, idf = ln((1 + N) / (1 + df)) + 1, and
    terms seen in fewer than min_df documents are dropped. Rows with no
    surviving terms stay zero (no normalization of zero rows).
    """
    if len(corpus) == 0:
        raise ValidationError("corpus is empty")
    docs = [_tokenize("" if d is None else str(d)) for d in corpus]
    df: dict[str, int] = {}
    for tokens in docs:
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    vocab = sorted(t for t, c in df.items() if c >= min_df)
    if not vocab:
        raise ValidationError(f"no terms appear in at least {min_df} documents")
    pos = {t: j for j, t in enumerate(vocab)}
    n = len(docs)
    idf = np.array([np.log((1.0 + n) / (1.0 + df[t])) + 1.0 for t in vocab])
    mat = np.zeros((n, len(vocab)), dtype=np.float64)
    for i, tokens in enumerate(docs):
        for term in tokens:
            j = pos.get(term)
            if j is not None:
                mat[i, j] += 1.0
    mat *= idf
    norms = np.linalg.norm(mat, axis=1)
    nonzero = norms > 0
    mat[nonzero] /= norms[nonzero, None]
    return mat, vocab


def text_topic_features(doc_term, k: int, config: NmfConfig, scale_rows: bool = False) -> Matrix:
    """Per-respondent topic activations from an NMF of the tf-idf matrix.

    Each topic column of W is rescaled so its largest coefficient is 1,
    which keeps topic features commensurate with 0/1 indicators. Columns
    that come out all zero are left alone with a warning. scale_rows=True
    switches to per-respondent rescaling instead.
    """
    doc_term = as_matrix(doc_term, "doc_term")
    fact = nmf(doc_term, NmfConfig(
        rank=k,
        max_iters=config.max_iters,
        rel_tol=config.rel_tol,
        mu_epsilon=config.mu_epsilon,
        seed=config.seed,
    ))
    w = fact.W.copy()
    axis = 1 if scale_rows else 0
    peaks = w.max(axis=axis, keepdims=True)
    dead = peaks == 0.0
    if dead.any():
        warnings.warn("all-zero topic coefficients left unscaled")
        peaks = np.where(dead, 1.0, peaks)
    return w / peaks


def assemble(parts, demographics=None, row_ids=None) -> EncodedSurvey:
    """Concatenate encoded parts (name list, matrix) in order.

    Demographic columns are routed to the side table, never into X.
    """
    if not parts:
        raise ValidationError("nothing to assemble")
    blocks = []
    names: list[str] = []
    n_rows = None
    for part_names, block in parts:
        block = as_matrix(block, "encoded part")
        if len(part_names) != block.shape[1]:
            raise ValidationError(
                f"part has {block.shape[1]} columns but {len(part_names)} names"
            )
        if n_rows is None:
            n_rows = block.shape[0]
        elif block.shape[0] != n_rows:
            raise ValidationError(
                f"row count mismatch: {block.shape[0]} vs {n_rows}"
            )
        blocks.append(block)
        names.extend(part_names)
    x = np.hstack(blocks)
    if np.any(x < 0):
        raise ValidationError("assembled matrix has negative entries")
    return EncodedSurvey(
        X=x,
        feature_names=names,
        row_ids=list(row_ids) if row_ids is not None else list(range(n_rows)),
        demographics=dict(demographics or {}),
    )


def encode_survey(columns: dict[str, list], schema: SurveySchema, seed: int = 0) -> EncodedSurvey:
    """Encode typed columns per the schema and assemble the model matrix."""
    parts = []
    demographics: dict[str, list] = {}
    n_rows = None
    for col_index, spec in enumerate(schema.columns):
        data = columns[spec.name]
        if n_rows is None:
            n_rows = len(data)
        if spec.kind == "drop":
            continue
        if spec.kind == "demographic":
            demographics[spec.name] = list(data)
            continue
        if spec.kind == "ordinal":
            vals = np.array([0.0 if v is None else float(v) for v in data])
            if np.any(vals < 0):
                raise ValidationError(f"column {spec.name!r}: ordinal values must be >= 0")
            parts.append(([spec.name], vals.reshape(-1, 1)))
        elif spec.kind == "satisfaction":
            ternary = consolidate_satisfaction(data, spec.mapping)
            parts.append(
                ([f"{spec.name}_pos", f"{spec.name}_neg"], indicator_encode(ternary))
            )
        elif spec.kind == "categorical":
            observed = {str(v) for v in data if v is not None}
            extra = sorted(observed - set(spec.choices))
            if extra:
                raise SchemaError(f"column {spec.name!r}: undeclared choices {extra}")
            block = np.zeros((len(data), len(spec.choices)), dtype=np.float64)
            choice_pos = {c: j for j, c in enumerate(spec.choices)}
            for i, v in enumerate(data):
                if v is not None:
                    block[i, choice_pos[str(v)]] = 1.0
            parts.append(([f"{spec.name}={c}" for c in spec.choices], block))
        elif spec.kind == "text":
            doc_term, _ = tfidf(data, min_df=spec.min_df)
            cfg = NmfConfig(rank=spec.topics, seed=seed + col_index)
            feats = text_topic_features(doc_term, spec.topics, cfg)
            parts.append(
                ([f"{spec.name}_topic{t + 1}" for t in range(spec.topics)], feats)
            )
    return assemble(parts, demographics=demographics, row_ids=range(n_rows or 0))


def export_survey(survey: EncodedSurvey, out_dir) -> None:
    """Write X.csv, feature_names.txt, and demographics.csv."""
    os.makedirs(out_dir, exist_ok=True)
    save_matrix_csv(survey.X, os.path.join(out_dir, "X.csv"))
    with open(os.path.join(out_dir, "feature_names.txt"), "w", encoding="utf-8") as fh:
        for name in survey.feature_names:
            fh.write(f"{name}\n")
    demo_path = os.path.join(out_dir, "demographics.csv")
    with open(demo_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        names = list(survey.demographics)
        writer.writerow(["row_id"] + names)
        for i, rid in enumerate(survey.row_ids):
            row = [rid] + [
                "" if survey.demographics[n][i] is None else survey.demographics[n][i]
                for n in names
            ]
            writer.writerow(row)
