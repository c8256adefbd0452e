"""Run-configuration files for the command-line interface.

A run config is a YAML mapping with the input table, the pairing
declaration (an explicit manifest file or a naming-convention block),
the confound layout and the cross-validation settings.  Unknown keys
are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .crossval import DEFAULT_C_GRID
from .errors import ConfigError
from .manifest import NamingConvention
from .preprocess import ConfoundSpec
from .synth import CohortSpec, default_bd_like_spec


@dataclass
class NamingBlock:
    convention: NamingConvention = NamingConvention()
    alpha_lr: float = 0.3
    alpha_gmcsf: float = 1.0


@dataclass
class RunConfig:
    table: Path
    out: Path
    label: str = "diagnosis"
    manifest: Path | None = None
    naming: NamingBlock | None = None
    confounds: ConfoundSpec = field(default_factory=ConfoundSpec)
    folds: int = 10
    inner_folds: int = 5
    grid: tuple[float, ...] = DEFAULT_C_GRID
    alphas: dict[str, float] = field(default_factory=dict)
    seed: int = 0
    baseline: bool = True
    report_regions: tuple[str, ...] = ()
    top_k: int = 7

    def validate(self) -> "RunConfig":
        if not self.table.exists():
            raise ConfigError(f"input table {self.table} does not exist")
        if (self.manifest is None) == (self.naming is None):
            raise ConfigError(
                "exactly one of 'manifest' and 'naming' must be configured"
            )
        if self.manifest is not None and not self.manifest.exists():
            raise ConfigError(f"manifest file {self.manifest} does not exist")
        if self.folds < 2:
            raise ConfigError(f"fold count must be at least 2, got {self.folds}")
        if self.inner_folds < 2:
            raise ConfigError(
                f"inner fold count must be at least 2, got {self.inner_folds}"
            )
        if not self.grid:
            raise ConfigError("C grid must not be empty")
        for c in self.grid:
            if c <= 0:
                raise ConfigError(
                    f"C grid entry {c!r} is not positive; use strictly positive "
                    f"inverse-regularization strengths"
                )
        for label, alpha in self.alphas.items():
            if not 0.0 <= alpha <= 1.0:
                raise ConfigError(
                    f"alpha override for stage {label!r} must lie in [0, 1], "
                    f"got {alpha!r}"
                )
        if self.top_k < 1:
            raise ConfigError(f"top_k must be positive, got {self.top_k}")
        return self


def _require_mapping(doc, what: str) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} must be a YAML mapping")
    return doc


def _reject_unknown(doc: dict, allowed: set[str], what: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown {what} key(s) {unknown}")


def _parse_confounds(doc) -> ConfoundSpec:
    doc = _require_mapping(doc, "'confounds'")
    _reject_unknown(doc, {"continuous", "categorical", "protected"}, "confounds")
    def strings(key):
        value = doc.get(key, [])
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"confounds.{key} must be a list of column names")
        return tuple(value)
    return ConfoundSpec(strings("continuous"), strings("categorical"), strings("protected"))


def _parse_naming(doc) -> NamingBlock:
    doc = _require_mapping(doc, "'naming'")
    allowed = {"left", "right", "gm", "csf", "alpha_lr", "alpha_gmcsf"}
    _reject_unknown(doc, allowed, "naming")
    convention = NamingConvention(
        left_prefix=str(doc.get("left", "L_")),
        right_prefix=str(doc.get("right", "R_")),
        gm_suffix=str(doc.get("gm", "_GM")),
        csf_suffix=str(doc.get("csf", "_CSF")),
    )
    return NamingBlock(
        convention,
        alpha_lr=float(doc.get("alpha_lr", 0.3)),
        alpha_gmcsf=float(doc.get("alpha_gmcsf", 1.0)),
    )


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    doc = _require_mapping(doc, f"config file {path}")
    allowed = {
        "table", "out", "label", "manifest", "naming", "confounds", "folds",
        "inner_folds", "grid", "alphas", "seed", "baseline", "report_regions",
        "top_k",
    }
    _reject_unknown(doc, allowed, "config")
    if "table" not in doc:
        raise ConfigError("config must name an input 'table'")

    base = path.parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    try:
        config = RunConfig(
            table=resolve(doc["table"]),
            out=resolve(doc.get("out", "results")),
            label=str(doc.get("label", "diagnosis")),
            manifest=resolve(doc["manifest"]) if "manifest" in doc else None,
            naming=_parse_naming(doc["naming"]) if "naming" in doc else None,
            confounds=_parse_confounds(doc.get("confounds", {})),
            folds=int(doc.get("folds", 10)),
            inner_folds=int(doc.get("inner_folds", 5)),
            grid=tuple(float(c) for c in doc.get("grid", DEFAULT_C_GRID)),
            alphas={
                str(k): float(v) for k, v in (doc.get("alphas") or {}).items()
            },
            seed=int(doc.get("seed", 0)),
            baseline=bool(doc.get("baseline", True)),
            report_regions=tuple(doc.get("report_regions", ())),
            top_k=int(doc.get("top_k", 7)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value in {path}: {exc}") from exc
    return config.validate()


def load_cohort_config(path: str | Path) -> CohortSpec:
    """Cohort spec from YAML; omitted keys keep the default cohort's
    values, so a config may override just a couple of fields."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"cohort config {path} does not exist")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed cohort config {path}: {exc}") from exc
    doc = _require_mapping(doc, f"cohort config {path}")
    defaults = default_bd_like_spec()
    allowed = {
        "n_subjects", "region_names", "r_lr", "r_gmcsf", "effects",
        "site_count", "site_offsets", "age_effect", "sex_effect", "age_mean",
        "age_sd", "female_fraction", "prevalence", "seed",
    }
    _reject_unknown(doc, allowed, "cohort config")
    effects = doc.get("effects")
    if effects is not None:
        if not isinstance(effects, dict):
            raise ConfigError(
                "cohort 'effects' must map column names to mean shifts"
            )
        effects = tuple((str(k), float(v)) for k, v in effects.items())
    try:
        return CohortSpec(
            n_subjects=int(doc.get("n_subjects", defaults.n_subjects)),
            region_names=tuple(doc.get("region_names", defaults.region_names)),
            r_lr=float(doc.get("r_lr", defaults.r_lr)),
            r_gmcsf=float(doc.get("r_gmcsf", defaults.r_gmcsf)),
            effects=effects if effects is not None else defaults.effects,
            site_count=int(doc.get("site_count", defaults.site_count)),
            site_offsets=tuple(doc.get("site_offsets", defaults.site_offsets)),
            age_effect=float(doc.get("age_effect", defaults.age_effect)),
            sex_effect=float(doc.get("sex_effect", defaults.sex_effect)),
            age_mean=float(doc.get("age_mean", defaults.age_mean)),
            age_sd=float(doc.get("age_sd", defaults.age_sd)),
            female_fraction=float(doc.get("female_fraction", defaults.female_fraction)),
            prevalence=float(doc.get("prevalence", defaults.prevalence)),
            seed=int(doc.get("seed", defaults.seed)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid cohort config value in {path}: {exc}") from exc
