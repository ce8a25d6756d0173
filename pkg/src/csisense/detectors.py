"""Matched Gaussian log-likelihood-ratio detectors and a from-scratch SVM.

Two detector families share this module. The likelihood-ratio side scores
observations under two isotropic complex Gaussian laws; its stable mode
works in the log domain through dense triangular factors (the general
machinery, deliberately not shortcut for the isotropic special case), while
its naive mode keeps linear-domain determinants and explicit inverses and
is expected to overflow at large dimension. The SVM side is a deterministic
sequential-minimal-optimization trainer over precomputed kernels; it never
consumes the Gaussian parameters, only labeled feature vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ._validation import as_vector_or_matrix, check_labels
from .channel import ComplexGaussianVector, HypothesisPair
from .subspace import PcaBasis

STABLE = "stable"
NAIVE = "naive"


# --------------------------------------------------------------------------
# likelihood-ratio detector


@dataclass(frozen=True)
class LrtDetector:
    """Frozen scoring state for the two-law log-likelihood-ratio test.

    Per hypothesis: the mean, the isotropic variance, the log-domain
    determinant (dim * ln var in the isotropic case, extracted from the
    factor diagonal), and the constant mean quadratic mu^H Sigma^-1 mu.
    Stable mode also carries dense lower-triangular Cholesky factors and
    the precomputed Sigma^-1 mu vectors; naive mode carries linear-domain
    determinants and explicit dense inverses instead (non-finite at large
    dim by design).
    """

    mean0: np.ndarray
    mean1: np.ndarray
    var0: float
    var1: float
    log_det0: float
    log_det1: float
    quad0: float
    quad1: float
    dim: int
    mode: str
    chol0: np.ndarray | None = None
    chol1: np.ndarray | None = None
    weighted_mean0: np.ndarray | None = None
    weighted_mean1: np.ndarray | None = None
    det0: float | None = None
    det1: float | None = None
    inv0: np.ndarray | None = None
    inv1: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.mode not in (STABLE, NAIVE):
            raise ValueError(f"mode must be stable or naive, got {self.mode!r}")
        if self.mode == STABLE:
            if self.var0 <= 0 or self.var1 <= 0:
                raise ValueError("stable mode needs strictly positive variances")
            if not (np.isfinite(self.log_det0) and np.isfinite(self.log_det1)):
                raise ValueError("stable mode needs finite log determinants")


def _pair_params(pair_or_params):
    """Accept a HypothesisPair or any (law0, law1) with mean/iso_var fields."""
    if isinstance(pair_or_params, HypothesisPair):
        h0, h1 = pair_or_params.h0, pair_or_params.h1
    else:
        h0, h1 = pair_or_params
    mean0 = np.asarray(h0.mean, dtype=np.complex128)
    mean1 = np.asarray(h1.mean, dtype=np.complex128)
    if mean0.shape != mean1.shape or mean0.ndim != 1:
        raise ValueError("hypothesis means must be 1-D and equal length")
    return mean0, float(h0.iso_var), mean1, float(h1.iso_var), mean0.shape[0]


def _cholesky_of_diagonal(diag: np.ndarray) -> np.ndarray:
    """Dense lower-triangular factor of a diagonal covariance.

    The factor of diag(d) is diag(sqrt(d)) in closed form; it is stored
    dense (complex) because the scoring path runs general triangular
    solves against it rather than exploiting the structure.
    """
    return np.diag(np.sqrt(diag)).astype(np.complex128)


def lrt_build(pair_or_params, mode: str = STABLE) -> LrtDetector:
    """Precompute everything the log-likelihood ratio needs.

    Stable mode factors each covariance, takes the log determinant off the
    factor diagonal, and solves for Sigma^-1 mu once. Naive mode evaluates
    the linear-domain determinant and the explicit matrix inverse; for
    large dimension the determinant overflows to non-finite silently,
    which is the point of keeping this mode around.
    """
    mean0, var0, mean1, var1, dim = _pair_params(pair_or_params)
    if mode == STABLE:
        if var0 <= 0 or var1 <= 0:
            raise ValueError("variances must be > 0 in stable mode")
        chol0 = _cholesky_of_diagonal(np.full(dim, var0))
        chol1 = _cholesky_of_diagonal(np.full(dim, var1))
        log_det0 = float(2.0 * np.sum(np.log(np.diag(chol0).real)))
        log_det1 = float(2.0 * np.sum(np.log(np.diag(chol1).real)))
        w0 = solve_triangular(chol0, mean0, lower=True)
        w1 = solve_triangular(chol1, mean1, lower=True)
        quad0 = float(np.sum(np.abs(w0) ** 2))
        quad1 = float(np.sum(np.abs(w1) ** 2))
        weighted0 = solve_triangular(chol0, w0, lower=True, trans="C")
        weighted1 = solve_triangular(chol1, w1, lower=True, trans="C")
        return LrtDetector(
            mean0=mean0, mean1=mean1, var0=var0, var1=var1,
            log_det0=log_det0, log_det1=log_det1,
            quad0=quad0, quad1=quad1, dim=dim, mode=STABLE,
            chol0=chol0, chol1=chol1,
            weighted_mean0=weighted0, weighted_mean1=weighted1,
        )
    if mode == NAIVE:
        cov0 = np.diag(np.full(dim, var0)).astype(np.complex128)
        cov1 = np.diag(np.full(dim, var1)).astype(np.complex128)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            det0 = complex(np.linalg.det(cov0)).real
            det1 = complex(np.linalg.det(cov1)).real
            inv0 = np.linalg.inv(cov0)
            inv1 = np.linalg.inv(cov1)
            quad0 = float(np.real(mean0.conj() @ inv0 @ mean0))
            quad1 = float(np.real(mean1.conj() @ inv1 @ mean1))
            log_det0 = float(np.log(det0))
            log_det1 = float(np.log(det1))
        return LrtDetector(
            mean0=mean0, mean1=mean1, var0=var0, var1=var1,
            log_det0=log_det0, log_det1=log_det1,
            quad0=quad0, quad1=quad1, dim=dim, mode=NAIVE,
            det0=det0, det1=det1, inv0=inv0, inv1=inv1,
        )
    raise ValueError(f"mode must be stable or naive, got {mode!r}")


def lrt_score(det: LrtDetector, g) -> float | np.ndarray:
    """Log-likelihood ratio of observation(s) under the detector's two laws.

    score = (log det0 - log det1) + g^H (S0^-1 - S1^-1) g
            - 2 Re{mu0^H S0^-1 g - mu1^H S1^-1 g} + (quad0 - quad1)

    Positive favors the alternative (scatterer present). Accepts one
    vector or a matrix of column observations. In naive mode non-finite
    intermediates propagate into the returned scores.
    """
    cols, was_vector = as_vector_or_matrix(g, det.dim, "g")
    if det.mode == STABLE:
        w0 = solve_triangular(det.chol0, cols, lower=True)
        w1 = solve_triangular(det.chol1, cols, lower=True)
        quad_g = np.sum(np.abs(w0) ** 2, axis=0) - np.sum(np.abs(w1) ** 2, axis=0)
        cross = np.real(det.weighted_mean0.conj() @ cols) - np.real(
            det.weighted_mean1.conj() @ cols
        )
    else:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            s0 = det.inv0 @ cols
            s1 = det.inv1 @ cols
            quad_g = np.real(np.sum(cols.conj() * s0, axis=0)) - np.real(
                np.sum(cols.conj() * s1, axis=0)
            )
            cross = np.real((det.inv0 @ det.mean0).conj() @ cols) - np.real(
                (det.inv1 @ det.mean1).conj() @ cols
            )
    scores = (
        (det.log_det0 - det.log_det1)
        + quad_g
        - 2.0 * cross
        + (det.quad0 - det.quad1)
    )
    return float(scores[0]) if was_vector else scores


def pca_lrt_build(pair_or_params, basis: PcaBasis, mode: str = STABLE) -> LrtDetector:
    """Matched detector in the projected coordinates.

    Means map through the basis after centering; isotropic variances are
    unchanged because orthonormal projections preserve isotropy. The
    resulting detector has the subspace dimension and is otherwise the
    same machinery as the full-space build.
    """
    mean0, var0, mean1, var1, dim = _pair_params(pair_or_params)
    if dim != basis.n_dim:
        raise ValueError(f"means have length {dim}, basis expects {basis.n_dim}")
    u_h = basis.basis.conj().T
    m0 = u_h @ (mean0 - basis.centering_mean)
    m1 = u_h @ (mean1 - basis.centering_mean)
    projected = (
        ComplexGaussianVector(mean=m0, iso_var=var0),
        ComplexGaussianVector(mean=m1, iso_var=var1),
    )
    return lrt_build(projected, mode=mode)


# --------------------------------------------------------------------------
# decisions


@dataclass(frozen=True)
class Decision:
    """One thresholded detector output; 1 means scatterer present."""

    score: float
    label: int
    threshold: float


def decide(score: float, threshold: float = 0.0, mode: str = STABLE) -> Decision:
    """Threshold a score, declaring the alternative only on strict excess.

    Ties go to the null for conservative false-alarm control. Non-finite
    scores are an error in stable mode; in naive mode they fall back to
    the null so the broken detector decays to never-detect behavior.
    """
    if not np.isfinite(score):
        if mode == NAIVE:
            return Decision(score=float(score), label=0, threshold=float(threshold))
        raise ValueError(f"non-finite score {score!r} in stable mode")
    label = 1 if score > threshold else 0
    return Decision(score=float(score), label=label, threshold=float(threshold))


def decide_all(scores, threshold: float = 0.0, mode: str = STABLE) -> np.ndarray:
    """Vector version of :func:`decide`; returns the 0/1 labels only."""
    return np.array(
        [decide(float(s), threshold, mode).label for s in np.asarray(scores)],
        dtype=np.int64,
    )


# --------------------------------------------------------------------------
# features and scaling


@dataclass(frozen=True)
class FeatureScaler:
    """Frozen per-feature standardization statistics."""

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=np.float64))
        if self.mean.shape != self.scale.shape or self.mean.ndim != 1:
            raise ValueError("scaler mean/scale must be 1-D and equal length")
        if np.any(self.scale <= 0):
            raise ValueError("scaler scale entries must be positive")


def identity_scaler(n_features: int) -> FeatureScaler:
    return FeatureScaler(mean=np.zeros(n_features), scale=np.ones(n_features))


def interleave_complex(z) -> np.ndarray:
    """Complex vectors to real features: re_0, im_0, re_1, im_1, ...

    One complex length-P vector becomes a length-2P row; a P x M matrix of
    column observations becomes an M x 2P feature matrix (rows are samples,
    the usual orientation on the classifier side).
    """
    arr = np.asarray(z, dtype=np.complex128)
    if arr.ndim == 1:
        out = np.empty(2 * arr.shape[0])
        out[0::2] = arr.real
        out[1::2] = arr.imag
        return out
    if arr.ndim == 2:
        p, m = arr.shape
        out = np.empty((m, 2 * p))
        out[:, 0::2] = arr.real.T
        out[:, 1::2] = arr.imag.T
        return out
    raise ValueError(f"z must be 1-D or 2-D, got shape {arr.shape}")


def fit_feature_scaler(features: np.ndarray) -> FeatureScaler:
    """Per-feature mean/std over training rows; constant features keep scale 1."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError("features must be 2-D (rows are samples)")
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    return FeatureScaler(mean=mean, scale=scale)


def featurize(z, scaler: FeatureScaler | None = None) -> np.ndarray:
    """Interleave complex projections into reals, then standardize.

    Without a scaler the raw interleaved features come back. With one, the
    frozen training statistics are applied: subtract the stored mean,
    divide by the stored scale (constant features pass through unscaled
    because their stored scale is 1).
    """
    feats = interleave_complex(z)
    if scaler is None:
        return feats
    if feats.shape[-1] != scaler.mean.shape[0]:
        raise ValueError(
            f"features have width {feats.shape[-1]}, scaler expects {scaler.mean.shape[0]}"
        )
    return (feats - scaler.mean) / scaler.scale


# --------------------------------------------------------------------------
# support vector machine (sequential minimal optimization)


@dataclass(frozen=True)
class SvmModel:
    """Trained soft-margin SVM in dual form.

    dual_coefs holds alpha_i * y_i for the support set, so the decision
    function is f(x) = sum_i dual_coefs[i] * k(sv_i, x) + bias. gamma is
    None for the linear kernel.
    """

    kernel: str
    gamma: float | None
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    c: float
    feature_scaler: FeatureScaler

    def __post_init__(self) -> None:
        if self.kernel not in ("linear", "rbf"):
            raise ValueError(f"kernel must be linear or rbf, got {self.kernel!r}")
        if self.kernel == "rbf" and (self.gamma is None or self.gamma <= 0):
            raise ValueError("rbf kernel needs gamma > 0")
        sv = np.asarray(self.support_vectors, dtype=np.float64)
        dc = np.asarray(self.dual_coefs, dtype=np.float64)
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefs", dc)
        if sv.ndim != 2 or dc.ndim != 1 or sv.shape[0] != dc.shape[0]:
            raise ValueError("support vectors and dual coefficients disagree")
        if sv.shape[0] < 1:
            raise ValueError("a trained model needs at least one support vector")
        if np.any(np.abs(dc) > self.c * (1 + 1e-9) + 1e-12):
            raise ValueError("dual coefficients exceed the box constraint")
        if abs(float(np.sum(dc))) > 1e-6:
            raise ValueError("dual coefficients do not satisfy the bias constraint")


def _kernel_matrix(kernel: str, gamma: float | None, a: np.ndarray, b: np.ndarray):
    if kernel == "linear":
        return a @ b.T
    sq = (
        np.sum(a**2, axis=1)[:, None]
        - 2.0 * (a @ b.T)
        + np.sum(b**2, axis=1)[None, :]
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def svm_train(
    features,
    labels,
    kernel: str = "linear",
    c: float = 1.0,
    gamma: float | None = None,
    tol: float = 1e-4,
    max_passes: int = 10,
    max_sweeps: int = 200,
    scaler: FeatureScaler | None = None,
) -> SvmModel:
    """Deterministic SMO training of a soft-margin SVM.

    The schedule is fixed: every sweep examines all samples in index
    order; a violating sample is first paired with the partner maximizing
    the error gap (first index on ties), and if that pair cannot move it
    falls back to the remaining unclipped samples and then to everything
    else, scanned in index order. No randomness enters anywhere, so
    retraining on identical input is bit-identical. Training stops after
    ``max_passes`` consecutive sweeps without an update, or at the hard
    ``max_sweeps`` cap.

    ``labels`` are 0/1; internally they map to -1/+1. ``gamma`` defaults
    to 1 / n_features for the rbf kernel. The optional ``scaler`` is
    carried on the model for provenance and export; features are expected
    already standardized.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be 2-D (rows are samples)")
    y01 = check_labels(labels)
    if y01.shape[0] != x.shape[0]:
        raise ValueError("features and labels disagree in length")
    if len(np.unique(y01)) < 2:
        raise ValueError("training needs at least one sample of each class")
    if kernel not in ("linear", "rbf"):
        raise ValueError(f"kernel must be linear or rbf, got {kernel!r}")
    if c <= 0:
        raise ValueError(f"c must be > 0, got {c}")
    m, d = x.shape
    if kernel == "rbf":
        gamma = 1.0 / d if gamma is None else float(gamma)
        if gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {gamma}")
    else:
        gamma = None

    y = (2 * y01 - 1).astype(np.float64)
    kmat = _kernel_matrix(kernel, gamma, x, x)
    alpha = np.zeros(m)
    bias = 0.0
    # decision values for every training sample, maintained incrementally
    fval = np.full(m, bias)
    quiet_passes = 0
    sweeps = 0

    def attempt(i: int, j: int) -> bool:
        """One joint update of (alpha_i, alpha_j); True if anything moved."""
        nonlocal bias, fval
        if j == i:
            return False
        err_i = fval[i] - y[i]
        err_j = fval[j] - y[j]
        eta = kmat[i, i] + kmat[j, j] - 2.0 * kmat[i, j]
        if eta <= 0:
            return False
        if y[i] != y[j]:
            low = max(0.0, alpha[j] - alpha[i])
            high = min(c, c + alpha[j] - alpha[i])
        else:
            low = max(0.0, alpha[i] + alpha[j] - c)
            high = min(c, alpha[i] + alpha[j])
        if low >= high:
            return False
        a_j = alpha[j] + y[j] * (err_i - err_j) / eta
        a_j = min(max(a_j, low), high)
        if abs(a_j - alpha[j]) < 1e-10:
            return False
        a_i = alpha[i] + y[i] * y[j] * (alpha[j] - a_j)
        b1 = (
            bias
            - err_i
            - y[i] * (a_i - alpha[i]) * kmat[i, i]
            - y[j] * (a_j - alpha[j]) * kmat[i, j]
        )
        b2 = (
            bias
            - err_j
            - y[i] * (a_i - alpha[i]) * kmat[i, j]
            - y[j] * (a_j - alpha[j]) * kmat[j, j]
        )
        if 0.0 < a_i < c:
            new_bias = b1
        elif 0.0 < a_j < c:
            new_bias = b2
        else:
            new_bias = (b1 + b2) / 2.0
        fval += (
            y[i] * (a_i - alpha[i]) * kmat[:, i]
            + y[j] * (a_j - alpha[j]) * kmat[:, j]
            + (new_bias - bias)
        )
        alpha[i], alpha[j], bias = a_i, a_j, new_bias
        return True

    while quiet_passes < max_passes and sweeps < max_sweeps:
        changed = 0
        for i in range(m):
            err_i = fval[i] - y[i]
            violates = (y[i] * err_i < -tol and alpha[i] < c) or (
                y[i] * err_i > tol and alpha[i] > 0
            )
            if not violates:
                continue
            gaps = np.abs((fval - y) - err_i)
            gaps[i] = -1.0
            first = int(np.argmax(gaps))
            stepped = attempt(i, first)
            if not stepped:
                for j in np.nonzero((alpha > 0) & (alpha < c))[0]:
                    if j != first and attempt(i, int(j)):
                        stepped = True
                        break
            if not stepped:
                for j in range(m):
                    if j != first and attempt(i, j):
                        stepped = True
                        break
            if stepped:
                changed += 1
        sweeps += 1
        quiet_passes = quiet_passes + 1 if changed == 0 else 0

    support = alpha > 1e-12
    if not np.any(support):
        raise RuntimeError("optimization ended with an empty support set")
    if scaler is None:
        scaler = identity_scaler(d)
    return SvmModel(
        kernel=kernel,
        gamma=gamma,
        support_vectors=x[support],
        dual_coefs=alpha[support] * y[support],
        bias=float(bias),
        c=float(c),
        feature_scaler=scaler,
    )


def svm_score(model: SvmModel, features) -> float | np.ndarray:
    """Decision value(s) for standardized feature rows; > 0 reads as present."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.support_vectors.shape[1]:
        raise ValueError(
            f"features must have width {model.support_vectors.shape[1]}"
        )
    kmat = _kernel_matrix(model.kernel, model.gamma, x, model.support_vectors)
    scores = kmat @ model.dual_coefs + model.bias
    return float(scores[0]) if single else scores


def save_svm(model: SvmModel, path) -> None:
    """Serialize a trained model to JSON with round-trip float precision."""
    payload = {
        "kernel": model.kernel,
        "gamma": model.gamma,
        "c": model.c,
        "bias": model.bias,
        "dual_coefs": model.dual_coefs.tolist(),
        "support_vectors": model.support_vectors.tolist(),
        "scaler_mean": model.feature_scaler.mean.tolist(),
        "scaler_scale": model.feature_scaler.scale.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_svm(path) -> SvmModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return SvmModel(
        kernel=payload["kernel"],
        gamma=payload["gamma"],
        support_vectors=np.asarray(payload["support_vectors"], dtype=np.float64),
        dual_coefs=np.asarray(payload["dual_coefs"], dtype=np.float64),
        bias=float(payload["bias"]),
        c=float(payload["c"]),
        feature_scaler=FeatureScaler(
            mean=np.asarray(payload["scaler_mean"], dtype=np.float64),
            scale=np.asarray(payload["scaler_scale"], dtype=np.float64),
        ),
    )
