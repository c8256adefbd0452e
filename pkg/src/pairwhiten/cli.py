"""Command-line interface.

Subcommands: ``synth`` (generate a synthetic cohort), ``run`` (the full
cross-validated comparison), ``report`` (summaries and figures from a
results directory) and ``whiten fit``/``whiten apply`` (standalone
whitening for pipeline composition).

Exit codes: 0 success, 2 configuration/input errors, 3 runtime errors.
"""

from __future__ import annotations

import functools
import json
from dataclasses import replace
from pathlib import Path

import click
import filelock
import numpy as np
import pandas as pd

from . import report as reporting
from .config import RunConfig, load_cohort_config, load_run_config
from .crossval import run_comparison
from .errors import ConfigError
from .folds import stratified_kfold
from .manifest import derive_manifest_from_naming, parse_manifest
from .preprocess import ConfoundSpec, Scaler
from .synth import default_bd_like_spec, generate
from .table import FeatureTable, read_feature_table, write_feature_table
from .whitener import FittedWhitener, fit_whitener

_BUNDLE_FORMAT = "pairwhiten.whitening_bundle"
_BUNDLE_VERSION = 1


class _CliError(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _with_exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            raise _CliError(str(exc), 2) from exc
        except click.ClickException:
            raise
        except Exception as exc:  # runtime failures
            raise _CliError(str(exc), 3) from exc

    return wrapper


@click.group()
def cli():
    """Pairwise correlation whitening toolkit."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              default=None, help="Cohort spec YAML; defaults to the built-in cohort.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("."),
              help="Output directory for cohort.csv and its ground-truth sidecar.")
@click.option("--seed", type=int, default=None, help="Override the spec's seed.")
@_with_exit_codes
def synth(config_path, out_dir, seed):
    """Generate a synthetic cohort table."""
    spec = load_cohort_config(config_path) if config_path else default_bd_like_spec()
    if seed is not None:
        spec = replace(spec, seed=seed)
    cohort = generate(spec)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / "cohort.csv"
    write_feature_table(cohort.table, table_path)
    sidecar = out_dir / "cohort_ground_truth.json"
    sidecar.write_text(json.dumps(cohort.ground_truth, indent=2))
    click.echo(
        f"wrote {table_path} ({cohort.table.n} rows x {cohort.table.d} features) "
        f"and {sidecar}"
    )


def _resolve_manifest(config: RunConfig, table: FeatureTable):
    if config.manifest is not None:
        manifest = parse_manifest(config.manifest.read_text(), table.feature_names)
    else:
        derived = derive_manifest_from_naming(
            table.feature_names,
            config.naming.convention,
            alpha_lr=config.naming.alpha_lr,
            alpha_gmcsf=config.naming.alpha_gmcsf,
        )
        manifest = derived.manifest
        if derived.unpaired:
            click.echo(
                f"note: {len(derived.unpaired)} feature(s) have no pairing "
                f"partner and pass through unchanged", err=True,
            )
    if config.alphas:
        manifest = manifest.with_alphas(config.alphas)
    return manifest


def _effective_confounds(config: RunConfig) -> ConfoundSpec:
    protected = tuple(dict.fromkeys(config.confounds.protected + (config.label,)))
    return ConfoundSpec(
        config.confounds.continuous, config.confounds.categorical, protected
    )


@cli.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              required=True, help="Run configuration YAML.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Override the output directory.")
@click.option("--folds", type=int, default=None, help="Override the fold count.")
@click.option("--baseline/--no-baseline", default=None,
              help="Also run (or skip) the unwhitened baseline arm.")
@click.option("--alpha-lr", type=float, default=None,
              help="Override alpha for the 'left-right' stage.")
@click.option("--alpha-gmcsf", type=float, default=None,
              help="Override alpha for the 'gm-csf' stage.")
@_with_exit_codes
def run(config_path, seed, out_dir, folds, baseline, alpha_lr, alpha_gmcsf):
    """Run the cross-validated whitened (and baseline) pipelines."""
    config = load_run_config(config_path)
    if seed is not None:
        config.seed = seed
    if out_dir is not None:
        config.out = out_dir
    if folds is not None:
        config.folds = folds
    if baseline is not None:
        config.baseline = baseline
    if alpha_lr is not None:
        config.alphas = {**config.alphas, "left-right": alpha_lr}
    if alpha_gmcsf is not None:
        config.alphas = {**config.alphas, "gm-csf": alpha_gmcsf}
    config.validate()

    non_feature = (
        config.confounds.continuous
        + config.confounds.categorical
        + config.confounds.protected
    )
    table = read_feature_table(config.table, config.label, non_feature)
    manifest = _resolve_manifest(config, table)
    confounds = _effective_confounds(config)

    config.out.mkdir(parents=True, exist_ok=True)
    lock = filelock.FileLock(config.out / ".lock")
    try:
        lock.acquire(timeout=0)
    except filelock.Timeout:
        raise RuntimeError(
            f"output directory {config.out} is locked by another run"
        ) from None
    tracker = None
    try:
        comparison = run_comparison(
            table, manifest, confounds,
            k=config.folds, grid=config.grid, seed=config.seed,
            inner_folds=config.inner_folds, baseline=config.baseline,
        )
        assignment = stratified_kfold(table.labels(), config.folds, config.seed)
        tracker = reporting.write_run_outputs(
            config.out, comparison, table, manifest, assignment, config, confounds
        )
    except Exception:
        if tracker is not None:
            tracker.cleanup()
        raise
    finally:
        lock.release()

    whitened = comparison.whitened
    click.echo(
        f"whitened arm: ROC-AUC {whitened.metric_mean('roc_auc'):.4f} "
        f"± {whitened.metric_std('roc_auc'):.4f} over {whitened.k} folds"
    )
    if comparison.baseline is not None:
        base = comparison.baseline
        click.echo(
            f"baseline arm: ROC-AUC {base.metric_mean('roc_auc'):.4f} "
            f"± {base.metric_std('roc_auc'):.4f}"
        )
        for t in comparison.tests:
            click.echo(f"{t.metric}: p = {t.p:.4f} ({t.conclusion})")
    click.echo(f"results written to {config.out}")


@cli.command("report")
@click.argument("results_dir", type=click.Path(path_type=Path))
@_with_exit_codes
def report_cmd(results_dir):
    """Render the summary and figures for a finished run."""
    text = reporting.write_summary(results_dir)
    figures = reporting.render_figures(results_dir)
    click.echo(text, nl=False)
    click.echo(f"summary written to {Path(results_dir) / 'summary.txt'}")
    for fig in figures:
        click.echo(f"figure written to {fig}")


@cli.group()
def whiten():
    """Fit or apply a standalone whitening transform."""


def _scaler_to_doc(scaler: Scaler | None):
    if scaler is None:
        return None
    return {"mean": scaler.mean_.tolist(), "std": scaler.std_.tolist()}


def _scaler_from_doc(doc) -> Scaler | None:
    if doc is None:
        return None
    scaler = Scaler()
    scaler.mean_ = np.array(doc["mean"], dtype=float)
    scaler.std_ = np.array(doc["std"], dtype=float)
    return scaler


@whiten.command("fit")
@click.option("--table", "table_path", type=click.Path(path_type=Path), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(path_type=Path),
              default=None, help="Pairing manifest; omit with --auto-pairs.")
@click.option("--auto-pairs", is_flag=True,
              help="Derive the pairing from the L_/R_ and _GM/_CSF naming.")
@click.option("--label", default="diagnosis", help="Label column name.")
@click.option("--exclude", multiple=True,
              help="Non-feature column (repeatable), e.g. confounds.")
@click.option("--alpha-lr", type=float, default=0.3)
@click.option("--alpha-gmcsf", type=float, default=1.0)
@click.option("--out", "out_path", type=click.Path(path_type=Path),
              default=Path("whitener.json"))
@_with_exit_codes
def whiten_fit(table_path, manifest_path, auto_pairs, label, exclude,
               alpha_lr, alpha_gmcsf, out_path):
    """Standardize the table's features and fit the whitening stages."""
    if (manifest_path is None) == (not auto_pairs):
        raise ConfigError("pass exactly one of --manifest and --auto-pairs")
    table = read_feature_table(table_path, label, exclude)
    if manifest_path is not None:
        manifest = parse_manifest(manifest_path.read_text(), table.feature_names)
    else:
        manifest = derive_manifest_from_naming(
            table.feature_names, alpha_lr=alpha_lr, alpha_gmcsf=alpha_gmcsf
        ).manifest

    scaler = Scaler().fit(table.features(), names=table.feature_names)
    standardized = scaler.transform(table.features())
    whitener = fit_whitener(standardized, manifest)
    transformed = whitener.transform(standardized)
    post = None
    if np.abs(transformed.var(axis=0) - 1.0).max() > 1e-9:
        post = Scaler().fit(transformed)

    bundle = {
        "format": _BUNDLE_FORMAT,
        "version": _BUNDLE_VERSION,
        "label": label,
        "feature_names": list(table.feature_names),
        "scaler": _scaler_to_doc(scaler),
        "whitener": json.loads(whitener.to_json()),
        "post_scaler": _scaler_to_doc(post),
    }
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(bundle, indent=2))
    click.echo(
        f"fitted {len(whitener.stages)} stage(s), {sum(len(s.pairs) for s in whitener.stages)} "
        f"pair(s); wrote {out_path}"
    )


@whiten.command("apply")
@click.option("--table", "table_path", type=click.Path(path_type=Path), required=True)
@click.option("--whitener", "bundle_path", type=click.Path(path_type=Path),
              required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@_with_exit_codes
def whiten_apply(table_path, bundle_path, out_path):
    """Apply a fitted whitening bundle; non-feature columns pass through."""
    if not bundle_path.exists():
        raise ConfigError(f"whitener file {bundle_path} does not exist")
    try:
        bundle = json.loads(bundle_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"corrupt whitener file {bundle_path}: {exc}") from exc
    if bundle.get("format") != _BUNDLE_FORMAT:
        raise ConfigError(
            f"{bundle_path} is not a whitening bundle "
            f"(format={bundle.get('format')!r})"
        )
    if bundle.get("version") != _BUNDLE_VERSION:
        raise ConfigError(f"unsupported bundle version {bundle.get('version')!r}")

    feature_names = list(bundle["feature_names"])
    frame = pd.read_csv(table_path, float_precision="round_trip")
    missing = [c for c in feature_names if c not in frame.columns]
    if missing:
        raise ConfigError(
            f"table {table_path} lacks fitted feature column(s) {missing[:5]}"
            + ("..." if len(missing) > 5 else "")
        )
    scaler = _scaler_from_doc(bundle["scaler"])
    whitener = FittedWhitener.from_json(json.dumps(bundle["whitener"]))
    post = _scaler_from_doc(bundle["post_scaler"])

    X = scaler.transform(frame[feature_names].to_numpy(dtype=float))
    X = whitener.transform(X)
    if post is not None:
        X = post.transform(X)
    out_frame = frame.copy()
    out_frame[feature_names] = X
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_frame.to_csv(out_path, index=False, lineterminator="\n")
    click.echo(f"wrote {out_path}")


def main():
    cli()


if __name__ == "__main__":
    main()
