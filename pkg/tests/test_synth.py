import json

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from pairwhiten.errors import ConfigError
from pairwhiten.manifest import derive_manifest_from_naming, pair_indices
from pairwhiten.synth import (
    DEFAULT_REGIONS,
    CohortSpec,
    column_grid,
    default_bd_like_spec,
    generate,
    lateralized_spec,
)
from pairwhiten.table import write_feature_table


class TestCohortSpec:
    def test_default_bd_like_spec_is_valid(self):
        spec = default_bd_like_spec()
        assert spec.n_subjects == 861
        assert len(spec.region_names) == 70
        assert spec.prevalence == 0.441
        assert spec.site_count == 12

    def test_non_positive_definite_reports_eigenvalue(self):
        with pytest.raises(ConfigError, match="eigenvalue"):
            CohortSpec(r_lr=1.0)

    def test_unknown_effect_column_rejected(self):
        with pytest.raises(ConfigError, match="Nowhere"):
            CohortSpec(effects=(("L_Nowhere_GM", 0.5),))

    def test_prevalence_bounds(self):
        with pytest.raises(ConfigError, match="prevalence"):
            CohortSpec(prevalence=1.5)

    def test_site_offset_length_mismatch(self):
        with pytest.raises(ConfigError, match="one site offset per site"):
            CohortSpec(site_count=3, site_offsets=(0.0,))

    def test_digest_tracks_content(self):
        a = default_bd_like_spec(0)
        b = default_bd_like_spec(1)
        assert a.digest() != b.digest()
        assert a.digest() == default_bd_like_spec(0).digest()


class TestGenerate:
    def test_default_shape_and_columns(self):
        cohort = generate(default_bd_like_spec())
        table = cohort.table
        assert table.n == 861
        assert table.d == 280
        assert table.frame.shape == (861, 284)
        assert set(table.frame.columns) - set(table.feature_names) == {
            "diagnosis", "age", "sex", "site",
        }

    def test_label_count_is_deterministic_rounding(self):
        cohort = generate(default_bd_like_spec())
        positives = int(cohort.table.labels().sum())
        assert positives == round(0.441 * 861)
        assert abs(positives - 0.441 * 861) <= 2

    def test_bit_identical_reproduction(self, tmp_path):
        spec = default_bd_like_spec(5)
        a = generate(spec)
        b = generate(spec)
        pd.testing.assert_frame_equal(a.table.frame, b.table.frame, check_exact=True)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        write_feature_table(a.table, pa)
        write_feature_table(b.table, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_independent_columns_when_targets_zero(self):
        spec = CohortSpec(
            n_subjects=500, region_names=DEFAULT_REGIONS[:10],
            r_lr=0.0, r_gmcsf=0.0, seed=2,
        )
        table = generate(spec).table
        X = table.features()
        manifest = derive_manifest_from_naming(table.feature_names).manifest
        for _, _, a, b in pair_indices(manifest):
            r = np.corrcoef(X[:, a.index], X[:, b.index])[0, 1]
            assert abs(r) < 0.1

    def test_correlations_converge_to_targets(self):
        spec = CohortSpec(
            n_subjects=5000, region_names=DEFAULT_REGIONS[:10],
            r_lr=0.7, r_gmcsf=-0.5, seed=3,
        )
        table = generate(spec).table
        X = table.features()
        manifest = derive_manifest_from_naming(table.feature_names).manifest
        for _, label, a, b in pair_indices(manifest):
            r = np.corrcoef(X[:, a.index], X[:, b.index])[0, 1]
            target = 0.7 if label == "left-right" else -0.5
            assert abs(r - target) < 0.03

    def test_planted_effect_detectable(self):
        spec = CohortSpec(
            n_subjects=800, region_names=DEFAULT_REGIONS[:10],
            effects=(("L_Hippocampus_GM", -0.5),), seed=4,
        )
        table = generate(spec).table
        y = table.labels().astype(bool)
        column = table.features()[:, table.feature_names.index("L_Hippocampus_GM")]
        test = stats.ttest_ind(column[y], column[~y])
        assert test.pvalue < 1e-6

    def test_ground_truth_recoverability(self):
        cohort = generate(default_bd_like_spec())
        table = cohort.table
        y = table.labels().astype(bool)
        X = table.features()
        gaps = np.abs(X[y].mean(axis=0) - X[~y].mean(axis=0))
        effect_columns = {c for c in cohort.ground_truth["effects"]}
        effect_idx = [i for i, n in enumerate(table.feature_names) if n in effect_columns]
        noise_idx = [i for i, n in enumerate(table.feature_names) if n not in effect_columns]
        threshold = np.quantile(gaps[noise_idx], 0.95)
        assert all(gaps[i] > threshold for i in effect_idx)

    def test_site_offsets_shift_features(self):
        spec = CohortSpec(
            n_subjects=600, region_names=DEFAULT_REGIONS[:4],
            site_count=2, site_offsets=(-1.0, 1.0), seed=5,
        )
        table = generate(spec).table
        means = table.frame.groupby("site")[table.feature_names[0]].mean()
        assert means["site02"] - means["site01"] == pytest.approx(2.0, abs=0.3)

    def test_ground_truth_sidecar_contents(self):
        cohort = generate(default_bd_like_spec(7))
        truth = cohort.ground_truth
        assert truth["seed"] == 7
        assert truth["effects"]["L_Pallidum_GM"] == 0.60
        assert json.dumps(truth)  # serializable

    def test_lateralized_spec_single_effect(self):
        spec = lateralized_spec("Hippocampus", -0.5, r_lr=0.8, seed=1)
        assert spec.effects == (("L_Hippocampus_GM", -0.5),)
        assert spec.r_lr == 0.8
        assert spec.n_subjects == 861


class TestColumnGrid:
    def test_counts_and_order(self):
        grid = column_grid(("Amygdala", "Pallidum"))
        assert grid == [
            "L_Amygdala_GM", "R_Amygdala_GM", "L_Amygdala_CSF", "R_Amygdala_CSF",
            "L_Pallidum_GM", "R_Pallidum_GM", "L_Pallidum_CSF", "R_Pallidum_CSF",
        ]

    def test_default_region_grid_is_280(self):
        assert len(column_grid(DEFAULT_REGIONS)) == 280
