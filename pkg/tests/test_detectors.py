"""Likelihood-ratio scoring, thresholding, features, and the SMO classifier."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import rankdata

from csisense.channel import ComplexGaussianVector, hypothesis_models
from csisense.dataset import CsiDataset, NoiseConfig, build_dataset, sample_csi
from csisense.detectors import (
    NAIVE,
    STABLE,
    FeatureScaler,
    decide,
    decide_all,
    featurize,
    fit_feature_scaler,
    identity_scaler,
    interleave_complex,
    load_svm,
    lrt_build,
    lrt_score,
    pca_lrt_build,
    save_svm,
    svm_score,
    svm_train,
)
from csisense.subspace import pca_fit, pca_project


def _pair(n: int, seed: int = 0, var0: float = 1.0, var1: float = 1.5, gap: float = 1.0):
    rng = np.random.default_rng(seed)
    m0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    m1 = m0 + gap * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return (
        ComplexGaussianVector(m0, var0),
        ComplexGaussianVector(m1, var1),
    )


def _rank_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC via average ranks; independent of the package's ROC."""
    ranks = rankdata(scores)
    m1 = int(np.sum(labels == 1))
    m0 = labels.shape[0] - m1
    return (float(np.sum(ranks[labels == 1])) - m1 * (m1 + 1) / 2) / (m0 * m1)


class TestLrtBuild:
    def test_unit_variances_zero_log_det(self):
        det = lrt_build(_pair(16, var0=1.0, var1=1.0))
        assert det.log_det0 == 0.0
        assert det.log_det1 == 0.0

    def test_mean_quadratic_closed_form(self):
        """quad_i must equal ||mu_i||^2 / var_i for isotropic covariances."""
        law0, law1 = _pair(8, seed=3, var0=0.7, var1=2.5)
        det = lrt_build((law0, law1))
        assert det.quad0 == pytest.approx(
            float(np.sum(np.abs(law0.mean) ** 2)) / 0.7, rel=1e-12
        )
        assert det.quad1 == pytest.approx(
            float(np.sum(np.abs(law1.mean) ** 2)) / 2.5, rel=1e-12
        )

    def test_large_dimension_naive_determinant_overflows(self):
        """At dim 1024 with variance 4 the linear-domain determinant is inf.

        The stable factorized path keeps the exact log value 1024*ln(4)
        instead; this contrast is the whole reason both modes exist.
        """
        n = 1024
        law0 = ComplexGaussianVector(np.zeros(n, dtype=complex), 4.0)
        law1 = ComplexGaussianVector(np.ones(n, dtype=complex), 1.0)
        naive = lrt_build((law0, law1), mode=NAIVE)
        stable = lrt_build((law0, law1), mode=STABLE)
        assert not np.isfinite(naive.det0)
        assert not np.isfinite(naive.log_det0)
        assert stable.log_det0 == pytest.approx(1024 * np.log(4.0), rel=1e-12)
        assert stable.log_det0 == pytest.approx(1419.57, abs=0.005)

    def test_accepts_pair_object_and_tuple(self):
        law0, law1 = _pair(6, seed=9)
        pair = hypothesis_models(
            ComplexGaussianVector(law0.mean, law0.iso_var),
            ComplexGaussianVector(law1.mean - law0.mean, law1.iso_var - law0.iso_var),
        )
        from_tuple = lrt_build((law0, law1))
        from_pair = lrt_build(pair)
        np.testing.assert_allclose(from_pair.mean1, from_tuple.mean1)
        assert from_pair.var1 == pytest.approx(from_tuple.var1)

    def test_stable_rejects_nonpositive_variance(self):
        law0, law1 = _pair(4)
        bad = ComplexGaussianVector(law0.mean, 0.0)
        with pytest.raises(ValueError):
            lrt_build((bad, law1), mode=STABLE)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            lrt_build(_pair(4), mode="fast")


class TestLrtScore:
    def test_matches_direct_density_ratio(self):
        """Oracle: slogdet/inv evaluation of the two complex Gaussian densities.

        score = (lndet S0 - lndet S1) + (g-m0)^H S0^-1 (g-m0)
                                      - (g-m1)^H S1^-1 (g-m1)
        computed with explicitly formed matrices at dim 8.
        """
        law0, law1 = _pair(8, seed=5, var0=0.9, var1=1.7, gap=0.8)
        det = lrt_build((law0, law1))
        cov0 = 0.9 * np.eye(8, dtype=complex)
        cov1 = 1.7 * np.eye(8, dtype=complex)
        _, ld0 = np.linalg.slogdet(cov0)
        _, ld1 = np.linalg.slogdet(cov1)
        inv0 = np.linalg.inv(cov0)
        inv1 = np.linalg.inv(cov1)
        rng = np.random.default_rng(11)
        g = rng.standard_normal((8, 1000)) + 1j * rng.standard_normal((8, 1000))
        scores = lrt_score(det, g)
        d0 = g - law0.mean[:, None]
        d1 = g - law1.mean[:, None]
        expected = (
            float(ld0 - ld1)
            + np.real(np.sum(d0.conj() * (inv0 @ d0), axis=0))
            - np.real(np.sum(d1.conj() * (inv1 @ d1), axis=0))
        )
        np.testing.assert_allclose(scores, expected, rtol=1e-8, atol=1e-8)

    def test_vector_and_matrix_agree(self):
        det = lrt_build(_pair(6, seed=7))
        rng = np.random.default_rng(2)
        g = rng.standard_normal((6, 5)) + 1j * rng.standard_normal((6, 5))
        batch = lrt_score(det, g)
        singles = [lrt_score(det, g[:, j]) for j in range(5)]
        np.testing.assert_allclose(batch, singles, rtol=1e-12)

    def test_score_prefers_own_mean(self):
        law0, law1 = _pair(10, seed=13, var0=1.0, var1=1.0, gap=2.0)
        det = lrt_build((law0, law1))
        assert lrt_score(det, law1.mean) > lrt_score(det, law0.mean)

    def test_dimension_mismatch_rejected(self):
        det = lrt_build(_pair(6))
        with pytest.raises(ValueError):
            lrt_score(det, np.zeros(7, dtype=complex))

    def test_naive_scores_break_at_large_dimension(self):
        n = 1024
        law0 = ComplexGaussianVector(np.zeros(n, dtype=complex), 4.0)
        law1 = ComplexGaussianVector(np.zeros(n, dtype=complex), 1.0)
        naive = lrt_build((law0, law1), mode=NAIVE)
        stable = lrt_build((law0, law1), mode=STABLE)
        rng = np.random.default_rng(4)
        g = rng.standard_normal((n, 8)) + 1j * rng.standard_normal((n, 8))
        assert not np.any(np.isfinite(lrt_score(naive, g)))
        assert np.all(np.isfinite(lrt_score(stable, g)))


class TestPcaLrt:
    def test_full_basis_reproduces_full_space_scores(self):
        """Projecting onto all 16 directions is an isometry, so the reduced
        test and the raw test give identical scores and identical ranking."""
        pair = hypothesis_models(
            ComplexGaussianVector(
                np.exp(2j * np.pi * np.arange(16) / 16), 1.0 / 3
            ),
            ComplexGaussianVector(0.4 * np.ones(16, dtype=complex), 0.2),
        )
        noise = NoiseConfig(snr_db=8.0, ref_power=16.0)
        ds = build_dataset(pair, 40, noise, seed=21)
        basis = pca_fit(ds, 16)
        law0 = ComplexGaussianVector(pair.h0.mean, pair.h0.iso_var + noise.noise_var)
        law1 = ComplexGaussianVector(pair.h1.mean, pair.h1.iso_var + noise.noise_var)
        full = lrt_build((law0, law1))
        reduced = pca_lrt_build((law0, law1), basis)
        full_scores = lrt_score(full, ds.data)
        reduced_scores = lrt_score(reduced, pca_project(basis, ds.data))
        np.testing.assert_allclose(reduced_scores, full_scores, rtol=1e-8, atol=1e-8)
        auc_full = _rank_auc(np.asarray(full_scores), ds.labels)
        auc_reduced = _rank_auc(np.asarray(reduced_scores), ds.labels)
        assert abs(auc_full - auc_reduced) < 1e-6

    def test_orthogonal_difference_carries_no_information(self):
        """A mean shift orthogonal to the retained subspace scores to zero."""
        n, m = 8, 60
        rng = np.random.default_rng(31)
        coeffs = rng.standard_normal((4, m)) + 1j * rng.standard_normal((4, m))
        data = np.zeros((n, m), dtype=complex)
        data[:4] = coeffs
        ds = CsiDataset(
            data=data,
            labels=np.r_[np.zeros(m // 2, dtype=np.int64), np.ones(m // 2, dtype=np.int64)],
            per_class=m // 2,
        )
        basis = pca_fit(ds, 4)
        mu0 = np.zeros(n, dtype=complex)
        mu1 = np.zeros(n, dtype=complex)
        mu1[5] = 3.0
        reduced = pca_lrt_build(
            (ComplexGaussianVector(mu0, 1.0), ComplexGaussianVector(mu1, 1.0)),
            basis,
        )
        scores = lrt_score(reduced, pca_project(basis, data))
        assert np.all(np.asarray(scores) == 0.0)
        assert _rank_auc(np.asarray(scores), ds.labels) == 0.5


class TestDecide:
    def test_examples(self):
        assert decide(0.5).label == 1
        assert decide(-0.3).label == 0
        assert decide(0.0).label == 0
        assert decide(0.2, threshold=0.3).label == 0

    def test_tie_goes_to_null(self):
        assert decide(1.25, threshold=1.25).label == 0

    def test_decision_carries_inputs(self):
        d = decide(0.7, threshold=0.1)
        assert d.score == 0.7
        assert d.threshold == 0.1

    def test_monotone_in_threshold(self):
        """Raising the threshold can only turn detections off, never on."""
        scores = np.linspace(-2, 2, 21)
        prev = decide_all(scores, threshold=-3.0)
        for thr in np.linspace(-2.5, 2.5, 11):
            cur = decide_all(scores, threshold=float(thr))
            assert np.all(cur <= prev)
            prev = cur

    def test_non_finite_stable_rejected(self):
        with pytest.raises(ValueError):
            decide(float("nan"))
        with pytest.raises(ValueError):
            decide(float("inf"), mode=STABLE)

    def test_non_finite_naive_maps_to_null(self):
        assert decide(float("nan"), mode=NAIVE).label == 0
        assert decide(float("inf"), mode=NAIVE).label == 0
        labels = decide_all([np.nan, np.inf, 1.0, -1.0], mode=NAIVE)
        np.testing.assert_array_equal(labels, [0, 0, 1, 0])


class TestFeatures:
    def test_interleaving_example(self):
        np.testing.assert_array_equal(
            interleave_complex(np.array([1 + 2j, 3 - 4j])), [1.0, 2.0, 3.0, -4.0]
        )

    def test_matrix_orientation(self):
        z = np.array([[1 + 2j, 5 + 6j], [3 + 4j, 7 + 8j]])
        feats = interleave_complex(z)
        assert feats.shape == (2, 4)
        np.testing.assert_array_equal(feats[0], [1, 2, 3, 4])
        np.testing.assert_array_equal(feats[1], [5, 6, 7, 8])

    def test_scaler_statistics(self):
        rng = np.random.default_rng(6)
        feats = rng.standard_normal((200, 5)) * [1, 2, 3, 4, 5] + 7
        scaler = fit_feature_scaler(feats)
        out = (feats - scaler.mean) / scaler.scale
        np.testing.assert_allclose(out.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0), 1, rtol=1e-12)

    def test_constant_feature_passes_through(self):
        feats = np.c_[np.ones(10), np.arange(10.0)]
        scaler = fit_feature_scaler(feats)
        assert scaler.scale[0] == 1.0
        out = featurize(np.array([1 + 0j] * 1), scaler=None)
        assert out.shape == (2,)

    def test_featurize_applies_frozen_scaler(self):
        scaler = FeatureScaler(mean=np.array([1.0, 2.0]), scale=np.array([2.0, 4.0]))
        out = featurize(np.array([3 + 6j]), scaler=scaler)
        np.testing.assert_allclose(out, [1.0, 1.0])

    def test_identity_scaler_is_noop(self):
        z = np.array([0.5 - 1.5j, 2 + 0j])
        np.testing.assert_array_equal(
            featurize(z, identity_scaler(4)), featurize(z)
        )

    def test_width_mismatch_rejected(self):
        with pytest.raises(ValueError):
            featurize(np.array([1 + 1j]), identity_scaler(6))


def _blobs(seed: int = 0, per_class: int = 30, spread: float = 0.4):
    rng = np.random.default_rng(seed)
    x0 = rng.normal([-2.0, 0.0], spread, size=(per_class, 2))
    x1 = rng.normal([2.0, 0.0], spread, size=(per_class, 2))
    x = np.vstack([x0, x1])
    y = np.r_[np.zeros(per_class, dtype=np.int64), np.ones(per_class, dtype=np.int64)]
    return x, y


_XOR_X = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
_XOR_Y = np.array([0, 0, 1, 1])


class TestSvmTraining:
    def test_separable_blobs_fit_perfectly(self):
        x, y = _blobs()
        model = svm_train(x, y, kernel="linear", c=1.0)
        pred = (np.asarray(svm_score(model, x)) > 0).astype(int)
        assert np.mean(pred == y) == 1.0

    def test_xor_needs_the_rbf_kernel(self):
        """The classic 4-point parity problem: rbf solves it, linear cannot
        do better than 3 of 4 no matter what the optimizer finds."""
        rbf = svm_train(_XOR_X, _XOR_Y, kernel="rbf", c=10.0, gamma=1.0)
        pred = (np.asarray(svm_score(rbf, _XOR_X)) > 0).astype(int)
        assert np.mean(pred == _XOR_Y) == 1.0
        lin = svm_train(_XOR_X, _XOR_Y, kernel="linear", c=10.0)
        pred_lin = (np.asarray(svm_score(lin, _XOR_X)) > 0).astype(int)
        assert np.mean(pred_lin == _XOR_Y) <= 0.75

    def test_dual_feasibility(self):
        x, y = _blobs(seed=3, spread=1.5)
        c = 0.8
        model = svm_train(x, y, kernel="linear", c=c)
        assert np.all(np.abs(model.dual_coefs) <= c * (1 + 1e-9))
        assert abs(float(np.sum(model.dual_coefs))) < 1e-8

    def test_margin_support_vectors_sit_on_the_margin(self):
        """Unclipped support vectors must satisfy f(sv) ~= +-1 at the
        optimizer's tolerance (10x envelope for accumulated updates)."""
        tol = 1e-4
        x, y = _blobs(seed=5, spread=0.6)
        model = svm_train(x, y, kernel="linear", c=1.0, tol=tol)
        margin = np.abs(model.dual_coefs) < model.c * (1 - 1e-6)
        assert np.any(margin)
        f = np.asarray(svm_score(model, model.support_vectors[margin]))
        target = np.sign(model.dual_coefs[margin])
        assert np.max(np.abs(f - target)) <= 10 * tol

    def test_linear_scores_match_explicit_weight_vector(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((40, 4))
        y = (x @ [1.0, -2.0, 0.5, 0.0] + 0.3 > 0).astype(int)
        if len(np.unique(y)) < 2:
            pytest.skip("degenerate labels for this seed")
        model = svm_train(x, y, kernel="linear", c=1.0)
        w = model.dual_coefs @ model.support_vectors
        probe = rng.standard_normal((25, 4))
        np.testing.assert_allclose(
            svm_score(model, probe), probe @ w + model.bias, rtol=1e-10, atol=1e-10
        )

    def test_training_is_deterministic(self):
        x, y = _blobs(seed=11, spread=1.2)
        a = svm_train(x, y, kernel="rbf", c=1.0)
        b = svm_train(x, y, kernel="rbf", c=1.0)
        np.testing.assert_array_equal(a.dual_coefs, b.dual_coefs)
        np.testing.assert_array_equal(a.support_vectors, b.support_vectors)
        assert a.bias == b.bias

    def test_gamma_defaults_to_reciprocal_width(self):
        x, y = _blobs(seed=2)
        model = svm_train(x, y, kernel="rbf")
        assert model.gamma == pytest.approx(1.0 / 2)

    def test_single_class_rejected(self):
        x = np.zeros((4, 2))
        with pytest.raises(ValueError):
            svm_train(x, np.zeros(4, dtype=int))

    def test_length_mismatch_rejected(self):
        x, y = _blobs()
        with pytest.raises(ValueError):
            svm_train(x, y[:-1])

    def test_rbf_generalizes_on_csi_features(self):
        """End-to-end sanity on the package's own feature path."""
        pair = hypothesis_models(
            ComplexGaussianVector(np.ones(12, dtype=complex), 0.3),
            ComplexGaussianVector(0.7 * np.ones(12, dtype=complex), 0.1),
        )
        noise = NoiseConfig(snr_db=14.0, ref_power=12.0)
        train = build_dataset(pair, 80, noise, seed=1)
        test = build_dataset(pair, 80, noise, seed=2)
        basis = pca_fit(train, 6)
        raw = featurize(pca_project(basis, train.data))
        scaler = fit_feature_scaler(raw)
        model = svm_train((raw - scaler.mean) / scaler.scale, train.labels,
                          kernel="rbf", c=1.0, scaler=scaler)
        feats = featurize(pca_project(basis, test.data), scaler=model.feature_scaler)
        pred = (np.asarray(svm_score(model, feats)) > 0).astype(int)
        assert np.mean(pred == test.labels) > 0.9


class TestSvmSerialization:
    def test_round_trip_preserves_scores(self, tmp_path):
        x, y = _blobs(seed=17, spread=1.0)
        scaler = fit_feature_scaler(x)
        model = svm_train((x - scaler.mean) / scaler.scale, y,
                          kernel="rbf", c=1.0, scaler=scaler)
        path = tmp_path / "model.json"
        save_svm(model, path)
        loaded = load_svm(path)
        rng = np.random.default_rng(0)
        probe = rng.standard_normal((30, 2))
        np.testing.assert_allclose(
            svm_score(loaded, probe), svm_score(model, probe), rtol=0, atol=1e-12
        )
        assert loaded.kernel == model.kernel
        assert loaded.gamma == model.gamma
        assert loaded.bias == model.bias
        np.testing.assert_array_equal(loaded.support_vectors, model.support_vectors)
        np.testing.assert_array_equal(
            loaded.feature_scaler.mean, model.feature_scaler.mean
        )
