import numpy as np
import pytest

from pairwhiten.errors import ConfigError
from pairwhiten.manifest import (
    FeatureId,
    NamingConvention,
    PairManifest,
    WhiteningStage,
    derive_manifest_from_naming,
    manifest_digest,
    pair_indices,
    parse_manifest,
    serialize_manifest,
)
from pairwhiten.synth import DEFAULT_REGIONS, column_grid

FOUR = ["L_Amygdala_GM", "R_Amygdala_GM", "L_Amygdala_CSF", "R_Amygdala_CSF"]

VALID_DOC = """
stages:
- label: left-right
  alpha: 0.3
  pairs:
  - [L_Amygdala_GM, R_Amygdala_GM]
"""


class TestParseManifest:
    def test_single_stage_single_pair(self):
        m = parse_manifest(VALID_DOC, FOUR)
        assert len(m.stages) == 1
        stage = m.stages[0]
        assert stage.label == "left-right"
        assert stage.alpha == 0.3
        assert stage.pairs == ((FeatureId(0, "L_Amygdala_GM"), FeatureId(1, "R_Amygdala_GM")),)
        assert m.n_features == 4

    def test_identical_pair_members_rejected(self):
        doc = VALID_DOC.replace("R_Amygdala_GM", "L_Amygdala_GM")
        with pytest.raises(ConfigError, match="identical"):
            parse_manifest(doc, FOUR)

    def test_non_disjoint_pairs_rejected(self):
        doc = """
stages:
- label: left-right
  alpha: 0.3
  pairs:
  - [L_Amygdala_GM, R_Amygdala_GM]
  - [L_Amygdala_GM, L_Amygdala_CSF]
"""
        with pytest.raises(ConfigError, match="disjoint"):
            parse_manifest(doc, FOUR)

    def test_unknown_feature_name_rejected(self):
        doc = VALID_DOC.replace("R_Amygdala_GM", "R_Nowhere_GM")
        with pytest.raises(ConfigError, match="R_Nowhere_GM"):
            parse_manifest(doc, FOUR)

    def test_alpha_out_of_range_rejected(self):
        doc = VALID_DOC.replace("alpha: 0.3", "alpha: 1.5")
        with pytest.raises(ConfigError, match="alpha"):
            parse_manifest(doc, FOUR)

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown manifest key"):
            parse_manifest(VALID_DOC + "\nextra: 1\n", FOUR)

    def test_unknown_stage_key_rejected(self):
        doc = VALID_DOC.replace("alpha: 0.3", "alpha: 0.3\n  epsilon: 2")
        with pytest.raises(ConfigError, match="epsilon"):
            parse_manifest(doc, FOUR)

    def test_malformed_document_rejected(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_manifest("stages: [", FOUR)

    def test_error_reports_stage_and_pair_position(self):
        doc = """
stages:
- label: ok
  alpha: 1.0
  pairs:
  - [L_Amygdala_GM, R_Amygdala_GM]
- label: broken
  alpha: 1.0
  pairs:
  - [L_Amygdala_CSF, R_Amygdala_CSF]
  - [L_Amygdala_GM, missing]
"""
        with pytest.raises(ConfigError, match=r"stage 2 \('broken'\), pair 2"):
            parse_manifest(doc, FOUR)

    def test_three_element_pair_rejected(self):
        doc = VALID_DOC.replace(
            "[L_Amygdala_GM, R_Amygdala_GM]",
            "[L_Amygdala_GM, R_Amygdala_GM, L_Amygdala_CSF]",
        )
        with pytest.raises(ConfigError, match="two-element"):
            parse_manifest(doc, FOUR)

    def test_duplicate_feature_names_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_manifest(VALID_DOC, FOUR + ["L_Amygdala_GM"])

    def test_zero_stage_document(self):
        m = parse_manifest("stages: []", FOUR)
        assert m.stages == ()
        assert m.n_pairs == 0


class TestRoundTrip:
    def test_parse_serialize_round_trip(self):
        for names, manifest in self._cases():
            text = serialize_manifest(manifest)
            assert parse_manifest(text, names) == manifest

    @staticmethod
    def _cases():
        cases = []
        m = parse_manifest(VALID_DOC, FOUR)
        cases.append((FOUR, m))
        grid = column_grid(DEFAULT_REGIONS)
        cases.append((grid, derive_manifest_from_naming(grid).manifest))
        cases.append((FOUR, derive_manifest_from_naming(FOUR, alpha_lr=1.0).manifest))
        return cases

    def test_cross_stage_reuse_is_legal(self):
        m = derive_manifest_from_naming(FOUR).manifest
        used = [fid.name for _, _, a, b in pair_indices(m) for fid in (a, b)]
        assert used.count("L_Amygdala_GM") == 2  # once per stage


class TestDeriveFromNaming:
    def test_exhaustive_four_column_case(self):
        derived = derive_manifest_from_naming(FOUR)
        labels = [s.label for s in derived.manifest.stages]
        assert labels == ["left-right", "gm-csf"]
        assert [len(s.pairs) for s in derived.manifest.stages] == [2, 2]
        assert derived.unpaired == []

    def test_lonely_column_has_no_pairs(self):
        derived = derive_manifest_from_naming(["L_Amygdala_GM"])
        assert derived.manifest.n_pairs == 0
        assert derived.unpaired == ["L_Amygdala_GM"]

    def test_partner_missing_in_one_stage_only(self):
        names = ["L_Amygdala_GM", "R_Amygdala_GM", "L_Amygdala_CSF"]
        derived = derive_manifest_from_naming(names)
        by_label = {s.label: s for s in derived.manifest.stages}
        assert len(by_label["left-right"].pairs) == 1  # GM pair only
        assert len(by_label["gm-csf"].pairs) == 1  # left pair only
        assert "R_Amygdala_GM" not in derived.unpaired  # paired in stage 1

    def test_nonconforming_names_are_diagnosed(self):
        derived = derive_manifest_from_naming(FOUR + ["total_icv"])
        assert derived.unpaired == ["total_icv"]

    def test_full_grid_pair_counts(self):
        grid = column_grid(DEFAULT_REGIONS)
        assert len(grid) == 280
        derived = derive_manifest_from_naming(grid)
        by_label = {s.label: s for s in derived.manifest.stages}
        assert len(by_label["left-right"].pairs) == 140
        assert len(by_label["gm-csf"].pairs) == 140
        assert derived.unpaired == []
        # brute-force string matching cross-check
        names = set(grid)
        lr = sum(
            1
            for n in grid
            if n.startswith("L_") and ("R_" + n[2:]) in names
        )
        gmcsf = sum(
            1
            for n in grid
            if n.endswith("_GM") and (n[:-3] + "_CSF") in names
        )
        assert lr == 140 and gmcsf == 140

    def test_alphas_flow_into_stages(self):
        derived = derive_manifest_from_naming(FOUR, alpha_lr=0.6, alpha_gmcsf=0.9)
        assert [s.alpha for s in derived.manifest.stages] == [0.6, 0.9]

    def test_custom_convention(self):
        convention = NamingConvention("left.", "right.", ".gm", ".csf")
        names = ["left.amygdala.gm", "right.amygdala.gm"]
        derived = derive_manifest_from_naming(names, convention)
        assert derived.manifest.n_pairs == 1

    def test_derived_output_revalidates(self):
        rng = np.random.default_rng(5)
        grid = column_grid(DEFAULT_REGIONS)
        for _ in range(10):
            subset = [str(name) for name in rng.choice(grid, size=40, replace=False)]
            derived = derive_manifest_from_naming(subset)
            text = serialize_manifest(derived.manifest)
            assert parse_manifest(text, subset) == derived.manifest


class TestManifestInvariants:
    def test_constructor_rejects_out_of_range_index(self):
        stage = WhiteningStage(
            "s", 1.0, ((FeatureId(0, "a"), FeatureId(9, "missing")),)
        )
        with pytest.raises(ConfigError, match="outside"):
            PairManifest((stage,), 2)

    def test_constructor_rejects_within_stage_duplicates(self):
        stage = WhiteningStage(
            "s",
            1.0,
            (
                (FeatureId(0, "a"), FeatureId(1, "b")),
                (FeatureId(1, "b"), FeatureId(2, "c")),
            ),
        )
        with pytest.raises(ConfigError, match="disjoint"):
            PairManifest((stage,), 3)

    def test_with_alphas_overrides_by_label(self):
        m = derive_manifest_from_naming(FOUR).manifest
        updated = m.with_alphas({"gm-csf": 0.5})
        assert [s.alpha for s in updated.stages] == [0.3, 0.5]

    def test_with_alphas_unknown_label(self):
        m = derive_manifest_from_naming(FOUR).manifest
        with pytest.raises(ConfigError, match="unknown stage label"):
            m.with_alphas({"nope": 0.5})

    def test_digest_distinguishes_manifests(self):
        m = derive_manifest_from_naming(FOUR).manifest
        assert manifest_digest(None) == "none"
        assert manifest_digest(m) != manifest_digest(m.with_alphas({"gm-csf": 0.5}))
