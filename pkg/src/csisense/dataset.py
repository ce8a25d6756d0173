"""Sampling, noise injection, parameter estimation, and dataset I/O.

Columns are observations throughout: a dataset is an N x 2M complex matrix
whose first M columns come from the scatterer-absent law and last M from
the scatterer-present law, with matching 0/1 labels. All randomness is
routed through numpy Generators seeded explicitly, so every operation is a
deterministic function of (inputs, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_complex_matrix, check_labels, check_positive
from .channel import ComplexGaussianVector, HypothesisPair


@dataclass(frozen=True)
class NoiseConfig:
    """Additive white Gaussian estimation noise at a target SNR.

    ``ref_power`` is the average per-coordinate power of the scatterer-absent
    channel, used as the SNR numerator; the injected noise variance is then
    ref_power / 10^(snr_db/10) per coordinate.
    """

    snr_db: float
    ref_power: float

    def __post_init__(self) -> None:
        check_positive(self.ref_power, "ref_power")

    @property
    def noise_var(self) -> float:
        return self.ref_power / 10.0 ** (self.snr_db / 10.0)


@dataclass(frozen=True)
class CsiDataset:
    """Labeled channel-estimate matrix with balanced classes."""

    data: np.ndarray
    labels: np.ndarray
    per_class: int

    def __post_init__(self) -> None:
        data = as_complex_matrix(self.data, "data")
        labels = check_labels(self.labels)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)
        if data.shape[1] != labels.shape[0]:
            raise ValueError(
                f"{data.shape[1]} columns but {labels.shape[0]} labels"
            )
        m = int(self.per_class)
        if data.shape[1] != 2 * m:
            raise ValueError(f"expected 2*{m} columns, got {data.shape[1]}")
        if int(np.sum(labels == 0)) != m or int(np.sum(labels == 1)) != m:
            raise ValueError("labels must contain exactly per_class of each class")

    @property
    def n_dim(self) -> int:
        return int(self.data.shape[0])


@dataclass(frozen=True)
class GaussianEstimate:
    """Sample mean and pooled isotropic variance of one class."""

    mean: np.ndarray
    iso_var: float
    sample_count: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.mean, dtype=np.complex128)
        if arr.ndim != 1:
            raise ValueError("mean must be 1-D")
        object.__setattr__(self, "mean", arr)
        if self.iso_var < 0:
            raise ValueError(f"iso_var must be >= 0, got {self.iso_var}")


def _standard_complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly-symmetric complex normal draws."""
    return (
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    ) / np.sqrt(2.0)


def sample_csi(dist: ComplexGaussianVector, count: int, seed) -> np.ndarray:
    """Draw ``count`` i.i.d. columns from an isotropic complex Gaussian law."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    w = _standard_complex_normal(rng, (dist.dim, count))
    return dist.mean[:, None] + np.sqrt(dist.iso_var) * w


def add_awgn(data: np.ndarray, noise: NoiseConfig, seed) -> np.ndarray:
    """Add circularly-symmetric white noise at the configured SNR."""
    data = as_complex_matrix(data, "data")
    rng = np.random.default_rng(seed)
    w = _standard_complex_normal(rng, data.shape)
    return data + np.sqrt(noise.noise_var) * w


def reference_power(pair: HypothesisPair) -> float:
    """SNR reference: average per-coordinate power of the scatterer-absent law.

    ||mean_h0||^2 / N + iso_var_h0. Using the absent-hypothesis channel keeps
    the SNR a statement about channel-estimate quality, independent of the
    scatterer's strength.
    """
    h0 = pair.h0
    return float(np.sum(np.abs(h0.mean) ** 2) / h0.dim + h0.iso_var)


def noisy_pair(pair: HypothesisPair, noise: NoiseConfig) -> HypothesisPair:
    """Fold the estimation noise into both hypothesis laws.

    The observed channel estimate is channel plus independent white noise,
    so each hypothesis keeps its mean and gains noise_var of isotropic
    variance. Detectors built from this pair are exactly matched to the
    sampled data.
    """
    return HypothesisPair(
        h0=ComplexGaussianVector(
            mean=pair.h0.mean, iso_var=pair.h0.iso_var + noise.noise_var
        ),
        h1=ComplexGaussianVector(
            mean=pair.h1.mean, iso_var=pair.h1.iso_var + noise.noise_var
        ),
    )


def build_dataset(
    pair: HypothesisPair, per_class: int, noise: NoiseConfig, seed
) -> CsiDataset:
    """Sample a balanced labeled dataset: M absent columns then M present.

    Four independent child streams are derived from the seed (one per
    class for the channel draws, one per class for the noise), so the
    same seed always reproduces the same matrix bit for bit.
    """
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    s_h0, s_h1, s_n0, s_n1 = np.random.SeedSequence(seed).spawn(4)
    x0 = add_awgn(sample_csi(pair.h0, per_class, s_h0), noise, s_n0)
    x1 = add_awgn(sample_csi(pair.h1, per_class, s_h1), noise, s_n1)
    data = np.concatenate([x0, x1], axis=1)
    labels = np.concatenate(
        [np.zeros(per_class, dtype=np.int64), np.ones(per_class, dtype=np.int64)]
    )
    return CsiDataset(data=data, labels=labels, per_class=int(per_class))


def estimate_gaussian_params(samples: np.ndarray) -> GaussianEstimate:
    """Fit the isotropic Gaussian law to columns of ``samples``.

    The mean is the column average. The variance is the per-coordinate
    unbiased sample variance (1/(M-1) normalization), averaged across
    coordinates to a single isotropic figure.
    """
    samples = as_complex_matrix(samples, "samples")
    n, m = samples.shape
    if m < 2:
        raise ValueError(f"need at least 2 columns to estimate, got {m}")
    mean = samples.mean(axis=1)
    resid = samples - mean[:, None]
    per_dim = np.sum(np.abs(resid) ** 2, axis=1) / (m - 1)
    return GaussianEstimate(
        mean=mean, iso_var=float(np.mean(per_dim)), sample_count=m
    )


def perturb_params(est: GaussianEstimate, eps: float, seed) -> GaussianEstimate:
    """Relative random perturbation of estimated parameters.

    Each mean coordinate is scaled by (1 + eps*u_k) and the variance by
    (1 + eps*u), all u i.i.d. uniform on [-1, 1]. eps = 0 reproduces the
    input exactly; a perturbation that would drive the variance
    nonpositive is an error.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    rng = np.random.default_rng(seed)
    u_mean = rng.uniform(-1.0, 1.0, size=est.mean.shape[0])
    u_var = rng.uniform(-1.0, 1.0)
    new_var = est.iso_var * (1.0 + eps * u_var)
    if new_var <= 0:
        raise ValueError(
            f"perturbed variance {new_var} is not positive (eps={eps})"
        )
    return GaussianEstimate(
        mean=est.mean * (1.0 + eps * u_mean),
        iso_var=float(new_var),
        sample_count=est.sample_count,
    )


def save_dataset_csv(ds: CsiDataset, path) -> None:
    """Write one row per observation: label, then interleaved re/im parts.

    Floats carry 17 significant digits, enough for float64 to load back
    bit-exact.
    """
    n = ds.n_dim
    header = "label," + ",".join(f"re_{k},im_{k}" for k in range(n))
    lines = [header]
    for col, lab in zip(ds.data.T, ds.labels):
        parts = [str(int(lab))]
        for z in col:
            parts.append(f"{z.real:.17g}")
            parts.append(f"{z.imag:.17g}")
        lines.append(",".join(parts))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset_csv(path) -> CsiDataset:
    """Inverse of :func:`save_dataset_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines:
        raise ValueError(f"{path} is empty")
    header = lines[0].split(",")
    n = (len(header) - 1) // 2
    labels = []
    cols = []
    for ln in lines[1:]:
        cells = ln.split(",")
        labels.append(int(cells[0]))
        vals = np.array([float(c) for c in cells[1:]])
        cols.append(vals[0::2] + 1j * vals[1::2])
    data = np.stack(cols, axis=1)
    if data.shape[0] != n:
        raise ValueError(f"row width disagrees with header in {path}")
    labels_arr = np.asarray(labels, dtype=np.int64)
    return CsiDataset(
        data=data, labels=labels_arr, per_class=int(np.sum(labels_arr == 0))
    )
