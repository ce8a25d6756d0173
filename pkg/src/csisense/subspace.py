"""PCA subspace fitting, mixture-covariance analytics, and error bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_vector_or_matrix, check_positive
from .channel import HypothesisPair
from .dataset import CsiDataset

_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class PcaBasis:
    """Orthonormal basis of the top principal directions of pooled data.

    ``basis`` is N x P with orthonormal columns, ``singular_values`` the
    full nonincreasing spectrum of the centered data matrix, and
    ``centering_mean`` the pooled column mean subtracted before the
    decomposition.
    """

    basis: np.ndarray
    singular_values: np.ndarray
    centering_mean: np.ndarray
    p: int

    def __post_init__(self) -> None:
        basis = np.asarray(self.basis, dtype=np.complex128)
        svals = np.asarray(self.singular_values, dtype=np.float64)
        center = np.asarray(self.centering_mean, dtype=np.complex128)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "singular_values", svals)
        object.__setattr__(self, "centering_mean", center)
        n, p = basis.shape
        if not 1 <= self.p <= n or p != self.p:
            raise ValueError(f"basis shape {basis.shape} inconsistent with p={self.p}")
        gram = basis.conj().T @ basis
        if not np.allclose(gram, np.eye(p), atol=_ORTHO_TOL):
            raise ValueError("basis columns are not orthonormal")
        if np.any(np.diff(svals) > 1e-9 * max(1.0, float(svals[0]))):
            raise ValueError("singular values must be nonincreasing")

    @property
    def n_dim(self) -> int:
        return int(self.basis.shape[0])


@dataclass(frozen=True)
class MixtureCovariance:
    """Covariance of the equal-prior two-class mixture.

    With class laws CN(mu0, s0*I) and CN(mu1, s1*I) mixed 50/50, the
    mixture covariance is alpha*I + beta*u*u^H where alpha = (s0+s1)/2,
    beta = 1/4, and u = mu0 - mu1. beta is a structural constant.
    """

    alpha: float
    u: np.ndarray
    beta: float = 0.25

    def __post_init__(self) -> None:
        check_positive(self.alpha, "alpha")
        if self.beta != 0.25:
            raise ValueError(f"beta is fixed at 1/4, got {self.beta}")
        object.__setattr__(self, "u", np.asarray(self.u, dtype=np.complex128))


@dataclass(frozen=True)
class BoundReport:
    """Distance, error bound, and dominant-eigenvalue summary for one pair."""

    d_b: float
    pe_bound: float
    lambda1: float
    sensing_snr: float

    def __post_init__(self) -> None:
        if self.d_b < 0:
            raise ValueError(f"d_b must be >= 0, got {self.d_b}")
        expected = float(np.exp(-self.d_b) / 2.0)
        if not np.isclose(self.pe_bound, expected, rtol=1e-12, atol=0):
            raise ValueError("pe_bound must equal exp(-d_b)/2")


def pca_fit(dataset: CsiDataset, p: int) -> PcaBasis:
    """Fit the top-``p`` principal subspace of the pooled dataset.

    Both classes are pooled, the global column mean is removed, and the
    basis is the first ``p`` left singular vectors of the centered matrix.
    The full singular spectrum is kept for scree diagnostics. Nested
    truncations of one fit share leading directions exactly.
    """
    return _fit_columns(dataset.data, p)


def _fit_columns(data: np.ndarray, p: int) -> PcaBasis:
    """SVD machinery behind :func:`pca_fit`, on a bare column matrix."""
    n_dim, m_tot = data.shape
    limit = min(n_dim, m_tot)
    if not 1 <= p <= limit:
        raise ValueError(f"p must be in [1, {limit}], got {p}")
    center = data.mean(axis=1)
    centered = data - center[:, None]
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    return PcaBasis(
        basis=u[:, :p], singular_values=s, centering_mean=center, p=int(p)
    )


def truncate_basis(basis: PcaBasis, p: int) -> PcaBasis:
    """Keep the leading ``p`` directions of an already-fitted basis.

    Equivalent to refitting at the smaller dimension on the same data, at
    zero cost: one SVD serves a whole nested sweep.
    """
    if not 1 <= p <= basis.p:
        raise ValueError(f"p must be in [1, {basis.p}], got {p}")
    return PcaBasis(
        basis=basis.basis[:, :p],
        singular_values=basis.singular_values,
        centering_mean=basis.centering_mean,
        p=int(p),
    )


def pca_project(basis: PcaBasis, x) -> np.ndarray:
    """Project a vector (or columns of a matrix) onto the fitted subspace.

    Returns U_P^H (x - centering_mean), a length-P vector per input column.
    """
    arr, was_vector = as_vector_or_matrix(x, basis.n_dim, "x")
    z = basis.basis.conj().T @ (arr - basis.centering_mean[:, None])
    return z[:, 0] if was_vector else z


def mixture_covariance(pair: HypothesisPair) -> MixtureCovariance:
    """Rank-one-plus-isotropic form of the equal-prior mixture covariance."""
    alpha = (pair.h0.iso_var + pair.h1.iso_var) / 2.0
    return MixtureCovariance(alpha=alpha, u=pair.h0.mean - pair.h1.mean)


def sensing_snr(
    mix: MixtureCovariance, basis: PcaBasis | None = None
) -> tuple[float, float]:
    """Dominant mixture eigenvalue and its gap over the isotropic floor.

    The mixture covariance alpha*I + (1/4)u*u^H has dominant eigenvalue
    alpha + ||u||^2/4; after projection onto an orthonormal basis the same
    holds with the projected u. The gap lambda1 - alpha is the one number
    PCA can "see": it is zero exactly when the class means agree.

    Projection of the difference vector needs no centering: subtracting a
    common center from both means cancels in u.
    """
    if basis is None:
        energy = float(np.sum(np.abs(mix.u) ** 2))
    else:
        if mix.u.shape[0] != basis.n_dim:
            raise ValueError(
                f"u has length {mix.u.shape[0]}, basis expects {basis.n_dim}"
            )
        energy = float(np.sum(np.abs(basis.basis.conj().T @ mix.u) ** 2))
    lambda1 = mix.alpha + mix.beta * energy
    return lambda1, lambda1 - mix.alpha


def bhattacharyya_distance(m0, m1, var0: float, var1: float) -> float:
    """Separability of two isotropic Gaussian laws with means m0, m1.

    D_B = ||m1 - m0||^2 / (4*(var0 + var1)) + (P/2) * ln((var0 + var1) / (2*sqrt(var0*var1)))

    The first term measures mean separation against the summed variances;
    the second is zero when the variances agree and grows with their
    log-ratio. The formula treats each of the P coordinates as one
    Gaussian component of variance var_i. Exact evaluation, always >= 0.
    """
    check_positive(var0, "var0")
    check_positive(var1, "var1")
    m0 = np.asarray(m0, dtype=np.complex128).reshape(-1)
    m1 = np.asarray(m1, dtype=np.complex128).reshape(-1)
    if m0.shape != m1.shape:
        raise ValueError(f"mean shapes differ: {m0.shape} vs {m1.shape}")
    p = m0.shape[0]
    vsum = var0 + var1
    mean_term = float(np.sum(np.abs(m1 - m0) ** 2)) / (4.0 * vsum)
    var_term = (p / 2.0) * np.log(vsum / (2.0 * np.sqrt(var0 * var1)))
    return float(mean_term + var_term)


def error_bound(d_b: float) -> float:
    """Equal-prior Bayes error bound exp(-d_b)/2, in (0, 0.5]."""
    if not np.isfinite(d_b) or d_b < 0:
        raise ValueError(f"d_b must be a finite nonnegative real, got {d_b}")
    return float(np.exp(-d_b) / 2.0)


def bound_report(pair: HypothesisPair, basis: PcaBasis | None = None) -> BoundReport:
    """Bundle distance, bound, and sensing-SNR figures for one pair.

    With a basis, means are projected (centered) before the distance; the
    variances pass through unchanged because isotropy survives orthonormal
    projection.
    """
    if basis is None:
        m0, m1 = pair.h0.mean, pair.h1.mean
    else:
        m0 = basis.basis.conj().T @ (pair.h0.mean - basis.centering_mean)
        m1 = basis.basis.conj().T @ (pair.h1.mean - basis.centering_mean)
    d_b = bhattacharyya_distance(m0, m1, pair.h0.iso_var, pair.h1.iso_var)
    lambda1, gap = sensing_snr(mixture_covariance(pair), basis)
    return BoundReport(
        d_b=d_b, pe_bound=error_bound(d_b), lambda1=lambda1, sensing_snr=gap
    )


def save_scree_csv(basis: PcaBasis, path) -> None:
    """Export the singular spectrum as ``index,singular_value`` rows."""
    lines = ["index,singular_value"]
    for i, s in enumerate(basis.singular_values):
        lines.append(f"{i},{float(s)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
