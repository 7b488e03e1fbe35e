"""Command-line harness around the library.

Every command writes its artifacts plus a manifest.json recording the
command name, the fully resolved parameters, and the artifact list;
`replay` reruns any manifest (into a fresh directory if asked) and
reproduces the same bytes. Exit codes: 0 success, 2 validation or schema
problems, 3 I/O failures.
"""

from __future__ import annotations

import csv
import functools
import json
import os
import sys
import time

import click
import numpy as np

from . import __version__
from .evaluation import label_match_accuracy
from .hierarchy import (
    HnmfConfig,
    hnmf_topdown,
    leaves,
    phnmf,
    tree_residuals,
    tree_to_dict,
    tree_to_dot,
)
from .ingest import SurveySchema, encode_survey, export_survey, load_csv
from .linalg import ValidationError, as_matrix, load_matrix_csv, save_matrix_csv
from .model_select import feature_similarity, select_rank
from .nmf import NmfConfig
from .synthetic import SyntheticSpec, export_dataset, generate
from .experiments import ExperimentConfig, accuracy_experiment, regression_experiment

VALIDATION_EXIT = 2
IO_EXIT = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _handled(fn):
    """Translate library and I/O errors into the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except OSError as exc:
            _fail(IO_EXIT, str(exc))
        except (ValidationError, ValueError) as exc:
            _fail(VALIDATION_EXIT, str(exc))

    return wrapper


def _write_manifest(out_dir, command: str, params: dict, artifacts: list[str], started: float):
    manifest = {
        "command": command,
        "params": params,
        "master_seed": params.get("seed"),
        "artifacts": sorted(artifacts),
        "wall_clock_seconds": time.monotonic() - started,
        "library_version": __version__,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _listdir_artifacts(out_dir) -> list[str]:
    return [f for f in os.listdir(out_dir) if f != "manifest.json"]


def write_pgm(x, path) -> None:
    """8-bit grayscale PGM (binary P5), min-max scaled per matrix."""
    a = as_matrix(x)
    lo, hi = float(a.min()), float(a.max())
    if hi > lo:
        scaled = np.rint((a - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        scaled = np.zeros(a.shape, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii"))
        fh.write(scaled.tobytes(order="C"))


def _tree_config(params: dict) -> HnmfConfig:
    return HnmfConfig(
        alpha=params["alpha"],
        alpha_mode=params["alpha_mode"],
        beta=params.get("beta"),
        min_docs=params.get("min_docs"),
        max_depth=params["max_depth"],
        rank=params.get("rank"),
        k_min=params["k_min"],
        k_max=params["k_max"],
        n_seeds=params["seeds"],
        max_iters=params["max_iters"],
        rel_tol=params["rel_tol"],
        seed=params["seed"],
    )


def _export_tree(tree, X, out_dir, with_heatmap: bool) -> None:
    with open(os.path.join(out_dir, "tree.json"), "w", encoding="utf-8") as fh:
        json.dump(tree_to_dict(tree), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "tree.dot"), "w", encoding="utf-8") as fh:
        fh.write(tree_to_dot(tree))
    if with_heatmap:
        order = []
        for _, members in leaves(tree):
            order.extend(sorted(int(i) for i in members))
        order.extend(int(i) for i in tree_residuals(tree))
        x_sorted = X[np.asarray(order, dtype=np.int64)]
        save_matrix_csv(x_sorted, os.path.join(out_dir, "X_sorted.csv"))
        write_pgm(x_sorted, os.path.join(out_dir, "X_sorted.pgm"))


# ---------------------------------------------------------------------------
# command implementations, callable for replay

def run_synth(params: dict, out_dir) -> None:
    spec = SyntheticSpec(seed=params["seed"], n_per_group=params["n_per_group"])
    ds = generate(params["kind"], spec)
    export_dataset(ds, out_dir)


def run_phnmf(params: dict, out_dir) -> None:
    X = load_matrix_csv(params["input"])
    tree = phnmf(X, _tree_config(params))
    _export_tree(tree, X, out_dir, with_heatmap=True)


def run_hnmf(params: dict, out_dir) -> None:
    X = load_matrix_csv(params["input"])
    tree = hnmf_topdown(X, _tree_config(params))
    _export_tree(tree, X, out_dir, with_heatmap=False)


def run_rank(params: dict, out_dir) -> None:
    X = load_matrix_csv(params["input"])
    config = NmfConfig(
        rank=params["k_min"],
        max_iters=params["max_iters"],
        rel_tol=params["rel_tol"],
        seed=params["seed"],
    )
    reports = {
        k: feature_similarity(X, k, params["seeds"], config)
        for k in range(params["k_min"], params["k_max"] + 1)
    }
    selection = select_rank(
        X, params["k_min"], params["k_max"], n_seeds=params["seeds"], config=config
    )
    payload = selection.to_dict()
    payload["reports"] = {str(k): rep.to_dict() for k, rep in reports.items()}
    with open(os.path.join(out_dir, "rank.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_accuracy(params: dict, out_dir) -> None:
    config = ExperimentConfig(
        alpha=params["alpha"],
        alpha_mode=params["alpha_mode"],
        beta=params["beta"],
        rank=params.get("rank"),
        n_seeds=params["seeds"],
        max_depth=params["max_depth"],
    )
    summary = accuracy_experiment(
        params["kind"],
        params["replicates"],
        params["seed"],
        config=config,
        threads=params["threads"],
    )
    path = os.path.join(out_dir, "accuracy.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "replicate", "data_seed", "tree_seed", "accuracy_assigned",
            "accuracy_total", "n_leaves", "n_assigned", "n_residual",
        ])
        for r in summary.replicates:
            writer.writerow([
                r.replicate, r.data_seed, r.tree_seed,
                repr(r.accuracy_assigned), repr(r.accuracy_total),
                r.n_leaves, r.n_assigned, r.n_residual,
            ])
        writer.writerow([
            "summary", "", "", repr(summary.mean_assigned),
            repr(summary.mean_total), "", "", "",
        ])
        writer.writerow([
            "standard_error", "", "", repr(summary.se_assigned),
            repr(summary.se_total), "", "", "",
        ])
    payload = {
        "kind": summary.kind,
        "mean_assigned": summary.mean_assigned,
        "se_assigned": summary.se_assigned,
        "mean_total": summary.mean_total,
        "se_total": summary.se_total,
        "replicates": [
            {
                "replicate": r.replicate,
                "data_seed": r.data_seed,
                "tree_seed": r.tree_seed,
                "accuracy_assigned": r.accuracy_assigned,
                "accuracy_total": r.accuracy_total,
                "n_leaves": r.n_leaves,
                "n_assigned": r.n_assigned,
                "n_residual": r.n_residual,
            }
            for r in summary.replicates
        ],
    }
    with open(os.path.join(out_dir, "accuracy.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(
        f"{params['kind']}: mean accuracy (assigned) {summary.mean_assigned:.4f} "
        f"s.e. {summary.se_assigned:.4f} over {params['replicates']} replicates"
    )


def run_regression(params: dict, out_dir) -> None:
    rows = regression_experiment(params["kind"], params["seed"])
    path = os.path.join(out_dir, "regression.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "group", "subgroup_vs_truth", "subgroup_vs_population", "population_vs_truth",
        ])
        for row in rows:
            writer.writerow([
                row["group"], repr(row["subgroup_vs_truth"]),
                repr(row["subgroup_vs_population"]), repr(row["population_vs_truth"]),
            ])
    with open(os.path.join(out_dir, "regression.json"), "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_ingest(params: dict, out_dir) -> None:
    schema = SurveySchema.from_json(params["schema"])
    columns = load_csv(params["csv"], schema)
    survey = encode_survey(columns, schema, seed=params["seed"])
    export_survey(survey, out_dir)


_RUNNERS = {
    "synth": run_synth,
    "phnmf": run_phnmf,
    "hnmf": run_hnmf,
    "rank": run_rank,
    "accuracy": run_accuracy,
    "regression": run_regression,
    "ingest": run_ingest,
}


def _run_command(command: str, params: dict, out_dir) -> None:
    started = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    _RUNNERS[command](params, out_dir)
    _write_manifest(out_dir, command, params, _listdir_artifacts(out_dir), started)


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("PHNMF_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# click wiring

@click.group()
@click.version_option(__version__)
def main():
    """Population-based hierarchical NMF toolkit."""


kind_option = click.option(
    "--kind", type=click.Choice(["continuous", "categorical"]), required=True
)
out_option = click.option("--out", "-o", "out_dir", required=True, type=click.Path())
seed_option = click.option("--seed", type=int, default=0, show_default=True)


def tree_options(fn):
    for deco in (
        click.option("--alpha", type=float, default=0.05, show_default=True),
        click.option("--alpha-mode", type=click.Choice(["relative", "absolute"]),
                     default="relative", show_default=True),
        click.option("--rank", type=int, default=None,
                     help="Fixed rank per node (omit for --auto-rank)."),
        click.option("--auto-rank", is_flag=True, default=False,
                     help="Select the rank per node by stability (default)."),
        click.option("--k-min", type=int, default=2, show_default=True),
        click.option("--k-max", type=int, default=8, show_default=True),
        click.option("--seeds", type=int, default=10, show_default=True,
                     help="Factorization runs per similarity score."),
        click.option("--max-depth", type=int, default=6, show_default=True),
        click.option("--max-iters", type=int, default=300, show_default=True),
        click.option("--rel-tol", type=float, default=1e-4, show_default=True),
    ):
        fn = deco(fn)
    return fn


def _resolve_rank(rank, auto_rank):
    if rank is not None and auto_rank:
        raise ValidationError("--rank and --auto-rank are mutually exclusive")
    return None if auto_rank else rank


@main.command()
@kind_option
@seed_option
@click.option("--n-per-group", type=int, default=200, show_default=True)
@out_option
@_handled
def synth(kind, seed, n_per_group, out_dir):
    """Generate a synthetic hierarchical survey dataset."""
    _run_command("synth", {
        "kind": kind, "seed": seed, "n_per_group": n_per_group,
    }, out_dir)


@main.command(name="phnmf")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--beta", type=float, default=0.8, show_default=True)
@tree_options
@seed_option
@out_option
@_handled
def phnmf_cmd(input_path, beta, alpha, alpha_mode, rank, auto_rank, k_min, k_max,
              seeds, max_depth, max_iters, rel_tol, seed, out_dir):
    """Discover a population tree with hard splits."""
    _run_command("phnmf", {
        "input": input_path, "beta": beta, "alpha": alpha, "alpha_mode": alpha_mode,
        "rank": _resolve_rank(rank, auto_rank), "k_min": k_min, "k_max": k_max,
        "seeds": seeds, "max_depth": max_depth, "max_iters": max_iters,
        "rel_tol": rel_tol, "seed": seed,
    }, out_dir)


@main.command(name="hnmf")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--min-docs", type=int, default=20, show_default=True)
@tree_options
@seed_option
@out_option
@_handled
def hnmf_cmd(input_path, min_docs, alpha, alpha_mode, rank, auto_rank, k_min, k_max,
             seeds, max_depth, max_iters, rel_tol, seed, out_dir):
    """Discover a topic tree with overlapping (soft) splits."""
    _run_command("hnmf", {
        "input": input_path, "min_docs": min_docs, "alpha": alpha,
        "alpha_mode": alpha_mode, "rank": _resolve_rank(rank, auto_rank),
        "k_min": k_min, "k_max": k_max, "seeds": seeds, "max_depth": max_depth,
        "max_iters": max_iters, "rel_tol": rel_tol, "seed": seed,
    }, out_dir)


@main.command(name="rank")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--k-min", type=int, default=2, show_default=True)
@click.option("--k-max", type=int, default=8, show_default=True)
@click.option("--seeds", type=int, default=10, show_default=True)
@click.option("--max-iters", type=int, default=300, show_default=True)
@click.option("--rel-tol", type=float, default=1e-4, show_default=True)
@seed_option
@out_option
@_handled
def rank_cmd(input_path, k_min, k_max, seeds, max_iters, rel_tol, seed, out_dir):
    """Score candidate ranks by cross-seed stability."""
    _run_command("rank", {
        "input": input_path, "k_min": k_min, "k_max": k_max, "seeds": seeds,
        "max_iters": max_iters, "rel_tol": rel_tol, "seed": seed,
    }, out_dir)


@main.command()
@kind_option
@click.option("--replicates", type=int, default=50, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--alpha-mode", type=click.Choice(["relative", "absolute"]),
              default="relative", show_default=True)
@click.option("--beta", type=float, default=0.8, show_default=True)
@click.option("--rank", type=int, default=2, show_default=True,
              help="Fixed rank per node for the replicated protocol.")
@click.option("--seeds", type=int, default=10, show_default=True)
@click.option("--max-depth", type=int, default=6, show_default=True)
@click.option("--threads", type=int, default=None,
              help="Worker processes (defaults to PHNMF_THREADS or 1).")
@seed_option
@out_option
@_handled
def accuracy(kind, replicates, alpha, alpha_mode, beta, rank, seeds, max_depth,
             threads, seed, out_dir):
    """Replicated clustering-accuracy experiment with summary statistics."""
    _run_command("accuracy", {
        "kind": kind, "replicates": replicates, "alpha": alpha,
        "alpha_mode": alpha_mode, "beta": beta, "rank": rank, "seeds": seeds,
        "max_depth": max_depth, "threads": threads or _default_threads(),
        "seed": seed,
    }, out_dir)


@main.command()
@kind_option
@seed_option
@out_option
@_handled
def regression(kind, seed, out_dir):
    """Per-subgroup coefficient alignment table for one replicate."""
    _run_command("regression", {"kind": kind, "seed": seed}, out_dir)


@main.command()
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@seed_option
@out_option
@_handled
def ingest(csv_path, schema_path, seed, out_dir):
    """Encode a raw survey CSV into a nonnegative model matrix."""
    _run_command("ingest", {
        "csv": csv_path, "schema": schema_path, "seed": seed,
    }, out_dir)


@main.command()
@click.argument("manifest_path", type=click.Path(exists=True))
@click.option("--out", "-o", "out_dir", default=None, type=click.Path(),
              help="Rerun into this directory (default: the manifest's own).")
@_handled
def replay(manifest_path, out_dir):
    """Rerun a recorded command; outputs are reproduced byte for byte."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    command = manifest.get("command")
    if command not in _RUNNERS:
        raise ValidationError(f"manifest names unknown command {command!r}")
    target = out_dir or os.path.dirname(os.path.abspath(manifest_path))
    _run_command(command, manifest["params"], target)


if __name__ == "__main__":
    main()
