import math

import numpy as np
import pytest

from pairwhiten.spectral import (
    EIG_FLOOR,
    WhiteningBlock,
    check_correlation,
    eig_sym_2x2,
    regularize_block,
    zca_cor_block,
)

from oracles import jacobi_eigh, whitening_matrix_brute_force


class TestEigSym2x2:
    def test_identity_case(self):
        values, vectors = eig_sym_2x2(0.0)
        np.testing.assert_allclose(values, [1.0, 1.0])
        np.testing.assert_allclose(vectors @ vectors.T, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(
            vectors @ np.diag(values) @ vectors.T, np.eye(2), atol=1e-15
        )

    def test_r06_against_iterative_oracle(self):
        values, vectors = eig_sym_2x2(0.6)
        np.testing.assert_allclose(values, [1.6, 0.4], rtol=0, atol=1e-15)
        s = 1.0 / math.sqrt(2.0)
        np.testing.assert_allclose(vectors[:, 0], [s, s], atol=1e-15)
        np.testing.assert_allclose(vectors[:, 1], [s, -s], atol=1e-15)
        oracle_values, _ = jacobi_eigh([[1.0, 0.6], [0.6, 1.0]])
        np.testing.assert_allclose(sorted(values), sorted(oracle_values), atol=1e-12)

    def test_rank_deficient_case(self):
        values, _ = eig_sym_2x2(-1.0)
        np.testing.assert_allclose(values, [0.0, 2.0], atol=1e-15)

    def test_reconstruction_sweep(self):
        rng = np.random.default_rng(7)
        for r in rng.uniform(-1.0, 1.0, size=200):
            values, vectors = eig_sym_2x2(r)
            rebuilt = vectors @ np.diag(values) @ vectors.T
            np.testing.assert_allclose(
                rebuilt, [[1.0, r], [r, 1.0]], atol=1e-14
            )

    def test_sign_convention(self):
        _, vectors = eig_sym_2x2(-0.3)
        assert vectors[0, 0] >= 0 and vectors[0, 1] >= 0

    @pytest.mark.parametrize("bad", [1.0000001, -1.1, float("nan"), float("inf")])
    def test_rejects_invalid_correlation(self, bad):
        with pytest.raises(ValueError):
            eig_sym_2x2(bad)

    def test_check_correlation_passes_boundaries(self):
        assert check_correlation(1.0) == 1.0
        assert check_correlation(-1.0) == -1.0


class TestZcaCorBlock:
    def test_uncorrelated_pair_is_identity(self):
        block = zca_cor_block(0.0)
        assert block.w11 == 1.0
        assert block.w12 == 0.0
        assert not block.floored

    def test_r06_frozen_values_and_brute_force(self):
        block = zca_cor_block(0.6)
        # closed form at r = 0.6
        assert block.w11 == pytest.approx(1.185854, abs=1e-6)
        assert block.w12 == pytest.approx(-0.395285, abs=1e-6)
        oracle = whitening_matrix_brute_force(0.6)
        np.testing.assert_allclose(block.as_matrix(), oracle, atol=1e-10)

    def test_satisfies_inverse_square_root_contract(self):
        r = 0.6
        W = zca_cor_block(r).as_matrix()
        R = np.array([[1.0, r], [r, 1.0]])
        np.testing.assert_allclose(W @ R @ W, np.eye(2), atol=1e-12)

    def test_near_singular_correlation_floors(self):
        r = 0.999999999
        block = zca_cor_block(r)
        assert block.floored
        assert math.isfinite(block.w11) and math.isfinite(block.w12)
        # entries equal the closed form evaluated at the floored spectrum
        small = max(1.0 - r, EIG_FLOOR)
        a, b = 1.0 / math.sqrt(1.0 + r), 1.0 / math.sqrt(small)
        assert block.w11 == pytest.approx(0.5 * (a + b), rel=1e-12)
        assert block.w12 == pytest.approx(0.5 * (a - b), rel=1e-12)

    def test_exact_unit_correlation_stays_finite(self):
        for r in (1.0, -1.0):
            block = zca_cor_block(r)
            assert block.floored
            assert math.isfinite(block.w11)

    def test_wrw_identity_sweep(self):
        rng = np.random.default_rng(11)
        eye = np.eye(2)
        for r in rng.uniform(-1.0 + 2 * EIG_FLOOR, 1.0 - 2 * EIG_FLOOR, size=1000):
            W = zca_cor_block(r).as_matrix()
            R = np.array([[1.0, r], [r, 1.0]])
            assert np.abs(W @ R @ W - eye).max() < 1e-10

    def test_matches_brute_force_sweep(self):
        rng = np.random.default_rng(13)
        for r in rng.uniform(-0.99, 0.99, size=1000):
            closed = zca_cor_block(r).as_matrix()
            brute = whitening_matrix_brute_force(r)
            assert np.abs(closed - brute).max() < 1e-10

    def test_rejects_non_positive_floor(self):
        with pytest.raises(ValueError):
            zca_cor_block(0.5, eps=0.0)


class TestRegularizeBlock:
    def test_alpha_zero_gives_identity(self):
        block = regularize_block(zca_cor_block(0.73), 0.0)
        assert block.w11 == 1.0
        assert block.w12 == 0.0

    def test_alpha_one_unchanged(self):
        base = zca_cor_block(0.73)
        blended = regularize_block(base, 1.0)
        assert blended.w11 == base.w11
        assert blended.w12 == base.w12

    def test_alpha_03_from_r06(self):
        base = zca_cor_block(0.6)
        blended = regularize_block(base, 0.3)
        assert blended.w11 == pytest.approx(0.3 * base.w11 + 0.7, rel=1e-15)
        assert blended.w12 == pytest.approx(0.3 * base.w12, rel=1e-15)
        assert blended.w11 == pytest.approx(1.055756, abs=1e-6)
        assert blended.w12 == pytest.approx(-0.118585, abs=1e-6)

    def test_affine_in_alpha(self):
        rng = np.random.default_rng(17)
        for r in rng.uniform(-0.95, 0.95, size=50):
            base = zca_cor_block(r)
            w0 = regularize_block(base, 0.0).as_matrix()
            w1 = regularize_block(base, 1.0).as_matrix()
            w_half = regularize_block(base, 0.5).as_matrix()
            np.testing.assert_allclose(w_half, 0.5 * (w0 + w1), atol=1e-15)

    def test_diagonal_dominates_for_all_alpha(self):
        rng = np.random.default_rng(19)
        for r in rng.uniform(-1.0, 1.0, size=200):
            base = zca_cor_block(r)
            for alpha in (0.0, 0.1, 0.3, 0.5, 0.9, 1.0):
                blended = regularize_block(base, alpha)
                assert blended.w11 > blended.w12
                assert blended.w11 > 0.0

    @pytest.mark.parametrize("alpha", [-0.01, 1.01, 5.0])
    def test_rejects_alpha_outside_unit_interval(self, alpha):
        with pytest.raises(ValueError):
            regularize_block(zca_cor_block(0.5), alpha)

    def test_preserves_floored_flag(self):
        block = regularize_block(zca_cor_block(0.9999999999), 0.3)
        assert block.floored


class TestWhiteningBlockInvariants:
    def test_rejects_non_positive_diagonal(self):
        with pytest.raises(ValueError):
            WhiteningBlock(0.0, -0.5)

    def test_rejects_offdiagonal_at_or_above_diagonal(self):
        with pytest.raises(ValueError):
            WhiteningBlock(1.0, 1.0)

    def test_identity_helper(self):
        block = WhiteningBlock.identity()
        np.testing.assert_array_equal(block.as_matrix(), np.eye(2))
