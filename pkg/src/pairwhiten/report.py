"""Result files, human-readable summaries and report figures.

``write_run_outputs`` emits the machine-readable artifacts of a run
(full-precision JSON/CSV).  ``render_summary`` and ``render_figures``
re-read those files, so reporting is a pure function of the results
directory and re-running it reproduces the same bytes.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .config import RunConfig
from .crossval import ComparisonResult, CvReport, fold_correlation_matrices, top_k_weights
from .errors import ConfigError
from .folds import FoldAssignment
from .manifest import NamingConvention, PairManifest, serialize_manifest
from .preprocess import ConfoundSpec
from .table import FeatureTable

#: Region subset plotted when the config names none; chosen for their
#: strong pair structure, intersected with whatever the table provides.
DEFAULT_REPORT_REGIONS = (
    "Amygdala", "Hippocampus", "Putamen", "AnteriorCingulateGyrus",
)

WHITENED_REPORT = "cv_report_whitened.json"
BASELINE_REPORT = "cv_report_baseline.json"
PAIRED_TESTS = "paired_tests.json"


class OutputTracker:
    """Records written files so a failed run can remove its partial output."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        p = self.directory / name
        self.written.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)


def report_columns(
    feature_names: list[str],
    regions: tuple[str, ...],
    convention: NamingConvention = NamingConvention(),
) -> list[str]:
    """Feature columns belonging to the requested (or default) regions."""
    bases = {}
    for name in feature_names:
        info = convention.split(name)
        if info is not None:
            bases.setdefault(info[1], []).append(name)
    wanted = [r for r in (regions or DEFAULT_REPORT_REGIONS) if r in bases]
    if not wanted:
        wanted = sorted(bases)[:4]
    if not wanted:
        return feature_names[: min(16, len(feature_names))]
    return [name for region in wanted for name in bases[region]]


def write_run_outputs(
    out_dir: Path,
    comparison: ComparisonResult,
    table: FeatureTable,
    manifest: PairManifest,
    assignment: FoldAssignment,
    config: RunConfig,
    confounds: ConfoundSpec,
) -> OutputTracker:
    """Write every machine-readable artifact of a finished run."""
    out = OutputTracker(out_dir)

    out.path("manifest_resolved.yaml").write_text(serialize_manifest(manifest))
    out.path(WHITENED_REPORT).write_text(comparison.whitened.to_json())
    if comparison.baseline is not None:
        out.path(BASELINE_REPORT).write_text(comparison.baseline.to_json())
    if comparison.tests:
        out.path(PAIRED_TESTS).write_text(
            json.dumps(
                {"mode": "paired", "tests": [asdict(t) for t in comparison.tests]},
                indent=2,
            )
        )

    rows = []
    arms = [("whitened", comparison.whitened)]
    if comparison.baseline is not None:
        arms.append(("baseline", comparison.baseline))
    for arm, rep in arms:
        for m in rep.fold_metrics:
            rows.append({"arm": arm, **m})
    pd.DataFrame(rows).to_csv(out.path("metrics_by_fold.csv"), index=False,
                              lineterminator="\n")

    for arm, rep in arms:
        ranked = top_k_weights(rep, config.top_k)
        pd.DataFrame(
            ranked, columns=["feature", "mean_weight", "std_weight"]
        ).to_csv(out.path(f"top_weights_{arm}.csv"), index=False, lineterminator="\n")

    pd.DataFrame(comparison.whitened.pair_correlations).to_csv(
        out.path("pair_correlations.csv"), index=False, lineterminator="\n"
    )

    columns = report_columns(table.feature_names, config.report_regions)
    before, after = fold_correlation_matrices(
        table, manifest, confounds, assignment, columns, fold=0
    )
    before.to_csv(out.path("correlation_matrix_before.csv"), lineterminator="\n")
    after.to_csv(out.path("correlation_matrix_after.csv"), lineterminator="\n")
    return out


def _load_json(directory: Path, name: str) -> dict:
    path = directory / name
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"corrupt results file {path}: {exc}") from exc


def _require_results(directory: Path) -> None:
    expected = [WHITENED_REPORT, "metrics_by_fold.csv"]
    missing = [n for n in expected if not (directory / n).exists()]
    if missing:
        raise ConfigError(
            f"results directory {directory} is missing expected file(s) "
            f"{missing}; a complete run writes {expected + [BASELINE_REPORT, PAIRED_TESTS]}"
        )


def _percent(mean: float, std: float) -> str:
    return f"{100.0 * mean:.2f} ± {100.0 * std:.2f}"


def render_summary(directory: str | Path) -> str:
    """Human-readable run summary built only from the results files."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"results directory {directory} does not exist")
    _require_results(directory)

    whitened = CvReport.from_json((directory / WHITENED_REPORT).read_text())
    baseline = None
    if (directory / BASELINE_REPORT).exists():
        baseline = CvReport.from_json((directory / BASELINE_REPORT).read_text())

    lines = []
    lines.append("Cross-validation summary")
    lines.append("========================")
    lines.append(
        f"folds: {whitened.k}    seed: {whitened.seed}    "
        f"pairing: {whitened.manifest_digest}"
    )
    lines.append("")
    lines.append("Test metrics, percent (mean ± std across folds):")
    header = f"  {'arm':<10} {'ROC-AUC':>16} {'BAcc':>16}"
    lines.append(header)
    for name, rep in (("whitened", whitened), ("baseline", baseline)):
        if rep is None:
            continue
        lines.append(
            f"  {name:<10} "
            f"{_percent(rep.metric_mean('roc_auc'), rep.metric_std('roc_auc')):>16} "
            f"{_percent(rep.metric_mean('balanced_accuracy'), rep.metric_std('balanced_accuracy')):>16}"
        )
    lines.append("")

    if (directory / PAIRED_TESTS).exists():
        tests = _load_json(directory, PAIRED_TESTS)
        lines.append("Fold-wise significance tests (whitened vs baseline):")
        for t in tests["tests"]:
            lines.append(
                f"  {t['metric']}: t = {t['t']:.4f}, p = {t['p']:.4f} "
                f"(df = {t['df']}) -> {t['conclusion']}"
            )
        lines.append("")

    selected = sorted(
        {m["selected_C"] for m in whitened.fold_metrics}
        | ({m["selected_C"] for m in baseline.fold_metrics} if baseline else set())
    )
    lines.append(f"Selected C value(s) across folds: {selected}")
    lines.append(
        "Weight-order preservation across declared pairs: "
        + ("all folds" if whitened.order_preserved else "VIOLATED")
    )
    lines.append("")

    for name, rep in (("whitened", whitened), ("baseline", baseline)):
        if rep is None:
            continue
        lines.append(f"Top features by |mean weight|, {name} arm (feature space):")
        for feature, mean, std in top_k_weights(rep, 7):
            lines.append(f"  {feature:<40} {mean:+.3f} ± {std:.3f}")
        lines.append("")

    if whitened.pair_correlations:
        frame = pd.DataFrame(whitened.pair_correlations)
        lines.append("Declared-pair correlations on training folds (mean |r|):")
        grouped = frame.groupby("label", sort=True)
        for label, g in grouped:
            lines.append(
                f"  {label}: before {g['r_before'].abs().mean():.4f}, "
                f"after {g['r_after'].abs().mean():.4f}"
            )
        lines.append("")
    return "\n".join(lines) + "\n"


def write_summary(directory: str | Path) -> str:
    text = render_summary(directory)
    (Path(directory) / "summary.txt").write_text(text)
    return text


def render_figures(directory: str | Path) -> list[Path]:
    """Render the report figures next to the delimited output files."""
    directory = Path(directory)
    _require_results(directory)
    written = []

    for stem, title in (
        ("correlation_matrix_before", "Feature-space correlations (fold 1 training)"),
        ("correlation_matrix_after", "Whitened-space correlations (fold 1 training)"),
    ):
        csv_path = directory / f"{stem}.csv"
        if not csv_path.exists():
            continue
        matrix = pd.read_csv(csv_path, index_col=0)
        fig, ax = plt.subplots(figsize=(7.5, 6.5))
        image = ax.imshow(matrix.to_numpy(), vmin=-1.0, vmax=1.0, cmap="RdBu_r")
        ax.set_xticks(range(len(matrix.columns)))
        ax.set_xticklabels(matrix.columns, rotation=90, fontsize=6)
        ax.set_yticks(range(len(matrix.index)))
        ax.set_yticklabels(matrix.index, fontsize=6)
        ax.set_title(title, fontsize=10)
        fig.colorbar(image, ax=ax, shrink=0.8, label="correlation")
        fig.tight_layout()
        out = directory / f"fig_{stem}.png"
        fig.savefig(out, dpi=150)
        plt.close(fig)
        written.append(out)

    metrics = pd.read_csv(directory / "metrics_by_fold.csv")
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharex=True)
    for ax, metric, label in zip(
        axes, ("roc_auc", "balanced_accuracy"), ("ROC-AUC", "Balanced accuracy")
    ):
        for arm, g in metrics.groupby("arm"):
            ax.plot(g["fold"], g[metric], marker="o", label=arm)
        ax.set_xlabel("fold")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    out = directory / "fig_metrics_by_fold.png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    written.append(out)

    top_path = directory / "top_weights_whitened.csv"
    if top_path.exists():
        ranked = pd.read_csv(top_path)
        fig, ax = plt.subplots(figsize=(7, 0.5 * len(ranked) + 1.5))
        positions = np.arange(len(ranked))[::-1]
        ax.barh(positions, ranked["mean_weight"], xerr=ranked["std_weight"],
                color="steelblue")
        ax.set_yticks(positions)
        ax.set_yticklabels(ranked["feature"], fontsize=8)
        ax.axvline(0.0, color="black", linewidth=0.8)
        ax.set_xlabel("mean weight across folds (feature space)")
        ax.set_title("Top contributing features, whitened arm", fontsize=10)
        fig.tight_layout()
        out = directory / "fig_top_weights.png"
        fig.savefig(out, dpi=150)
        plt.close(fig)
        written.append(out)
    return written
