"""Declaration of which feature columns are whitened together.

A manifest is an ordered list of stages; each stage carries a label, a
regularization strength ``alpha`` and a list of disjoint column pairs.
Stages are applied in order, so a column may appear in several stages
(left/right first, then GM/CSF is the usual layout) but only once per
stage, which keeps every stage transform block-diagonal.

On disk a manifest is a small YAML document::

    stages:
    - label: left-right
      alpha: 0.3
      pairs:
      - [L_Amygdala_GM, R_Amygdala_GM]

Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import yaml

from .errors import ConfigError


@dataclass(frozen=True)
class FeatureId:
    """A feature column identified by table position and name."""

    index: int
    name: str


@dataclass(frozen=True)
class WhiteningStage:
    label: str
    alpha: float
    pairs: tuple[tuple[FeatureId, FeatureId], ...]


@dataclass(frozen=True)
class PairManifest:
    stages: tuple[WhiteningStage, ...]
    n_features: int

    def __post_init__(self):
        _validate_manifest(self)

    @property
    def n_pairs(self) -> int:
        return sum(len(s.pairs) for s in self.stages)

    def with_alphas(self, overrides: dict[str, float]) -> "PairManifest":
        """Return a copy with stage alphas replaced by label.

        Raises ConfigError when an override names no stage.
        """
        labels = {s.label for s in self.stages}
        unknown = sorted(set(overrides) - labels)
        if unknown:
            raise ConfigError(
                f"alpha override for unknown stage label(s) {unknown}; "
                f"manifest has {sorted(labels)}"
            )
        stages = tuple(
            WhiteningStage(s.label, float(overrides.get(s.label, s.alpha)), s.pairs)
            for s in self.stages
        )
        return PairManifest(stages, self.n_features)


def _validate_manifest(m: PairManifest) -> None:
    if m.n_features < 0:
        raise ConfigError(f"feature count must be non-negative, got {m.n_features}")
    for si, stage in enumerate(m.stages):
        where = f"stage {si + 1} ({stage.label!r})"
        if not 0.0 <= stage.alpha <= 1.0:
            raise ConfigError(f"{where}: alpha must lie in [0, 1], got {stage.alpha!r}")
        seen: dict[int, int] = {}
        for pi, (a, b) in enumerate(stage.pairs):
            for fid in (a, b):
                if not 0 <= fid.index < m.n_features:
                    raise ConfigError(
                        f"{where}, pair {pi + 1}: feature index {fid.index} "
                        f"({fid.name!r}) outside [0, {m.n_features})"
                    )
            if a.index == b.index:
                raise ConfigError(
                    f"{where}, pair {pi + 1}: pair members are identical "
                    f"({a.name!r})"
                )
            for fid in (a, b):
                if fid.index in seen:
                    raise ConfigError(
                        f"{where}: feature {fid.name!r} appears in pairs "
                        f"{seen[fid.index] + 1} and {pi + 1}; pairs within a "
                        f"stage must be disjoint"
                    )
                seen[fid.index] = pi


def _index_features(feature_names: Sequence[str]) -> dict[str, int]:
    index: dict[str, int] = {}
    for i, name in enumerate(feature_names):
        if name in index:
            raise ConfigError(f"duplicate feature name {name!r} in table")
        index[name] = i
    return index


def parse_manifest(text: str, feature_names: Sequence[str]) -> PairManifest:
    """Parse a manifest document against a table's feature columns.

    Pair members are written as column names and resolved to indices
    here; unknown names, out-of-range alphas, repeated columns within a
    stage and unknown document keys are all rejected with positional
    context.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed manifest document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("manifest document must be a mapping with a 'stages' key")
    unknown = sorted(set(doc) - {"stages"})
    if unknown:
        raise ConfigError(f"unknown manifest key(s) {unknown}; expected only 'stages'")
    raw_stages = doc.get("stages")
    if not isinstance(raw_stages, list):
        raise ConfigError("'stages' must be a list")

    lookup = _index_features(feature_names)
    stages = []
    for si, raw in enumerate(raw_stages):
        where = f"stage {si + 1}"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: each stage must be a mapping")
        unknown = sorted(set(raw) - {"label", "alpha", "pairs"})
        if unknown:
            raise ConfigError(
                f"{where}: unknown key(s) {unknown}; expected label/alpha/pairs"
            )
        label = raw.get("label")
        if not isinstance(label, str) or not label:
            raise ConfigError(f"{where}: 'label' must be a non-empty string")
        alpha = raw.get("alpha")
        if not isinstance(alpha, (int, float)) or isinstance(alpha, bool):
            raise ConfigError(f"{where} ({label!r}): 'alpha' must be a number")
        raw_pairs = raw.get("pairs")
        if not isinstance(raw_pairs, list):
            raise ConfigError(f"{where} ({label!r}): 'pairs' must be a list")
        pairs = []
        for pi, entry in enumerate(raw_pairs):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(n, str) for n in entry)
            ):
                raise ConfigError(
                    f"{where} ({label!r}), pair {pi + 1}: expected a "
                    f"two-element list of column names, got {entry!r}"
                )
            members = []
            for name in entry:
                if name not in lookup:
                    raise ConfigError(
                        f"{where} ({label!r}), pair {pi + 1}: unknown feature "
                        f"name {name!r}"
                    )
                members.append(FeatureId(lookup[name], name))
            pairs.append((members[0], members[1]))
        stages.append(WhiteningStage(label, float(alpha), tuple(pairs)))
    return PairManifest(tuple(stages), len(feature_names))


def serialize_manifest(m: PairManifest) -> str:
    """Render a manifest back to its YAML document form.

    ``parse_manifest(serialize_manifest(m), names)`` reproduces ``m``
    for the feature-name list the manifest was built against.
    """
    doc = {
        "stages": [
            {
                "label": s.label,
                "alpha": s.alpha,
                "pairs": [[a.name, b.name] for a, b in s.pairs],
            }
            for s in m.stages
        ]
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


@dataclass(frozen=True)
class NamingConvention:
    """Column-name tokens used to discover anatomical pairs.

    Defaults match the ``L_Region_GM`` / ``R_Region_CSF`` layout; all
    four tokens are configurable so other naming schemes can be mapped
    without renaming columns.
    """

    left_prefix: str = "L_"
    right_prefix: str = "R_"
    gm_suffix: str = "_GM"
    csf_suffix: str = "_CSF"

    def split(self, name: str) -> tuple[str, str, str] | None:
        """Split a column into (hemisphere, base, tissue) or None."""
        if name.startswith(self.left_prefix):
            hemi, rest = "L", name[len(self.left_prefix):]
        elif name.startswith(self.right_prefix):
            hemi, rest = "R", name[len(self.right_prefix):]
        else:
            return None
        if rest.endswith(self.gm_suffix):
            return hemi, rest[: -len(self.gm_suffix)], "GM"
        if rest.endswith(self.csf_suffix):
            return hemi, rest[: -len(self.csf_suffix)], "CSF"
        return None


@dataclass
class DerivedManifest:
    """Result of pair discovery: the manifest plus unpairable columns."""

    manifest: PairManifest
    unpaired: list[str] = field(default_factory=list)


def derive_manifest_from_naming(
    feature_names: Sequence[str],
    convention: NamingConvention = NamingConvention(),
    alpha_lr: float = 0.3,
    alpha_gmcsf: float = 1.0,
) -> DerivedManifest:
    """Build the two-stage manifest implied by a naming convention.

    Stage ``left-right`` pairs hemisphere homologues of the same region
    and tissue; stage ``gm-csf`` pairs the two tissue columns within
    each hemisphere and region.  Columns that end up in no pair at all
    (no partner, or names outside the convention) are passed through
    untransformed and reported in ``unpaired``.
    """
    lookup = _index_features(feature_names)
    parsed = {name: convention.split(name) for name in feature_names}

    def fid(name: str) -> FeatureId:
        return FeatureId(lookup[name], name)

    lr_pairs = []
    gmcsf_pairs = []
    for name in feature_names:
        info = parsed[name]
        if info is None:
            continue
        hemi, base, tissue = info
        if hemi == "L":
            # left-right partner, same tissue
            suffix = convention.gm_suffix if tissue == "GM" else convention.csf_suffix
            partner = f"{convention.right_prefix}{base}{suffix}"
            if partner in lookup:
                lr_pairs.append((fid(name), fid(partner)))
        if tissue == "GM":
            # gm-csf partner, same hemisphere
            prefix = convention.left_prefix if hemi == "L" else convention.right_prefix
            partner = f"{prefix}{base}{convention.csf_suffix}"
            if partner in lookup:
                gmcsf_pairs.append((fid(name), fid(partner)))

    stages = []
    if lr_pairs:
        stages.append(WhiteningStage("left-right", float(alpha_lr), tuple(lr_pairs)))
    if gmcsf_pairs:
        stages.append(WhiteningStage("gm-csf", float(alpha_gmcsf), tuple(gmcsf_pairs)))
    manifest = PairManifest(tuple(stages), len(feature_names))

    in_pairs = {
        fid.index
        for stage in manifest.stages
        for pair in stage.pairs
        for fid in pair
    }
    unpaired = [n for n in feature_names if lookup[n] not in in_pairs]
    return DerivedManifest(manifest, unpaired)


def manifest_digest(m: PairManifest | None) -> str:
    """Stable content hash used to tag reports with their pairing."""
    import hashlib

    if m is None:
        return "none"
    return hashlib.sha256(serialize_manifest(m).encode()).hexdigest()[:16]


def pair_indices(m: PairManifest) -> Iterable[tuple[int, str, FeatureId, FeatureId]]:
    """Yield (stage_index, stage_label, a, b) over all declared pairs."""
    for si, stage in enumerate(m.stages):
        for a, b in stage.pairs:
            yield si, stage.label, a, b
