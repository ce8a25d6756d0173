"""Closed-form channel models for a three-link sensing geometry.

The scene has a transmitter, a receiver, and (under the alternative
hypothesis) one passive scatterer. Three links matter: the direct
transmitter-receiver path, the transmitter-scatterer leg, and the
scatterer-receiver leg. Each link is a unit-power Rician fader; the
frequency response of an N-subcarrier block is then a complex Gaussian
vector whose mean and isotropic variance follow in closed form.

Everything here is an exact distribution-level computation. Sampling
lives in :mod:`csisense.dataset`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_nonnegative, check_positive

SPEED_OF_LIGHT = 299792458.0
"""Propagation speed used for the wavelength, in meters per second."""


@dataclass(frozen=True)
class LinkGeometry:
    """Physical layout and antenna parameters for the three links.

    Distances are in meters, powers in watts, gains dimensionless,
    carrier frequency in hertz. ``rcs`` is the scatterer's radar cross
    section in square meters; zero means a perfectly stealthy object.
    """

    tx_power: float
    tx_gain: float
    rx_gain: float
    carrier_freq: float
    dist_tr: float
    dist_ts: float
    dist_sr: float
    rcs: float

    def __post_init__(self) -> None:
        check_positive(self.tx_power, "tx_power")
        check_positive(self.tx_gain, "tx_gain")
        check_positive(self.rx_gain, "rx_gain")
        check_positive(self.carrier_freq, "carrier_freq")
        check_positive(self.dist_tr, "dist_tr")
        check_positive(self.dist_ts, "dist_ts")
        check_positive(self.dist_sr, "dist_sr")
        check_nonnegative(self.rcs, "rcs")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq


@dataclass(frozen=True)
class LinkFading:
    """Rician fading description of one link.

    ``k_factor`` is the ratio of line-of-sight to diffuse power (0 gives
    pure Rayleigh fading). ``doppler`` is the line-of-sight Doppler shift
    in hertz, ``los_delay`` the propagation delay in seconds,
    ``phase_offset`` a fixed phase in radians, and ``sample_period`` the
    spacing of the time samples in seconds.
    """

    k_factor: float
    doppler: float = 0.0
    los_delay: float = 0.0
    phase_offset: float = 0.0
    sample_period: float = 1e-6

    def __post_init__(self) -> None:
        check_nonnegative(self.k_factor, "k_factor")
        check_positive(self.sample_period, "sample_period")


@dataclass(frozen=True)
class ComplexGaussianVector:
    """A circularly-symmetric complex Gaussian law with isotropic covariance.

    ``mean`` is a length-N complex vector and the covariance is
    ``iso_var * I_N``, with ``iso_var`` the total per-coordinate variance
    (real and imaginary parts carry half each).
    """

    mean: np.ndarray
    iso_var: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.mean, dtype=np.complex128)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError(f"mean must be a nonempty 1-D vector, got shape {arr.shape}")
        object.__setattr__(self, "mean", arr)
        check_nonnegative(self.iso_var, "iso_var")

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


@dataclass(frozen=True)
class HypothesisPair:
    """The two candidate laws for one observed frequency response.

    ``h0`` is scatterer-absent (direct path only), ``h1`` scatterer-present
    (direct path plus the cascaded two-leg echo).
    """

    h0: ComplexGaussianVector
    h1: ComplexGaussianVector

    def __post_init__(self) -> None:
        if self.h0.dim != self.h1.dim:
            raise ValueError(
                f"hypothesis dims differ: {self.h0.dim} vs {self.h1.dim}"
            )

    @property
    def dim(self) -> int:
        return self.h0.dim


def friis_direct_amplitude(geom: LinkGeometry) -> float:
    """Received amplitude of the direct path from the one-way link budget.

    sqrt(P_T * G_T * G_R) * wavelength / (4 * pi * d_TR).
    """
    num = np.sqrt(geom.tx_power * geom.tx_gain * geom.rx_gain) * geom.wavelength
    return float(num / (4.0 * np.pi * geom.dist_tr))


def friis_scattered_amplitude(geom: LinkGeometry) -> float:
    """Received amplitude of the two-leg scattered path.

    sqrt(P_T * G_T * G_R * rcs) * wavelength / ((4*pi)^(3/2) * d_TS * d_SR).
    The radar cross section enters under the square root; both leg
    distances attenuate independently.
    """
    num = np.sqrt(geom.tx_power * geom.tx_gain * geom.rx_gain * geom.rcs)
    denom = (4.0 * np.pi) ** 1.5 * geom.dist_ts * geom.dist_sr
    return float(num * geom.wavelength / denom)


def k_factor_from_amplitude(amplitude: float, nlos_var: float) -> float:
    """Map a line-of-sight amplitude and diffuse variance to a Rician K factor.

    K = amplitude^2 / (2 * nlos_var). Experiments usually drive K directly;
    this helper connects the link budget to the fading description when a
    geometric configuration is given.
    """
    check_nonnegative(amplitude, "amplitude")
    check_positive(nlos_var, "nlos_var")
    return float(amplitude**2 / (2.0 * nlos_var))


def los_phase(n, fading: LinkFading, carrier_freq: float):
    """Line-of-sight phase at sample index ``n`` (scalar or array).

    theta[n] = -2*pi*f_c*tau0 + 2*pi*f_D*n*T_s + phase_offset.

    The delay and offset terms do not depend on n, so they only rotate the
    whole mean vector; the Doppler term is what shapes its spectrum.
    """
    n = np.asarray(n, dtype=np.float64)
    theta = (
        -2.0 * np.pi * carrier_freq * fading.los_delay
        + 2.0 * np.pi * fading.doppler * n * fading.sample_period
        + fading.phase_offset
    )
    return theta if theta.ndim else float(theta)


def rician_time_distribution(
    fading: LinkFading, carrier_freq: float, n_dim: int
) -> ComplexGaussianVector:
    """Time-domain law of one unit-power Rician link over ``n_dim`` samples.

    mean[n] = sqrt(K/(K+1)) * exp(j*theta[n]) and iso_var = 1/(K+1), so the
    per-sample power |mean[n]|^2 + iso_var is exactly 1 for every K.
    """
    if n_dim < 1:
        raise ValueError(f"n_dim must be >= 1, got {n_dim}")
    k = fading.k_factor
    theta = los_phase(np.arange(n_dim), fading, carrier_freq)
    mean = np.sqrt(k / (k + 1.0)) * np.exp(1j * np.atleast_1d(theta))
    return ComplexGaussianVector(mean=mean, iso_var=1.0 / (k + 1.0))


def dft_of_distribution(time_dist: ComplexGaussianVector) -> ComplexGaussianVector:
    """Push a time-domain law through the unnormalized DFT.

    The mean maps through the plain forward DFT (no 1/sqrt(N) factor,
    matching ``np.fft.fft``); an isotropic covariance stays isotropic with
    variance multiplied by N because the DFT matrix satisfies F F^H = N I.
    """
    mean_freq = np.fft.fft(time_dist.mean)
    return ComplexGaussianVector(
        mean=mean_freq, iso_var=float(time_dist.dim) * time_dist.iso_var
    )


def cascaded_variance_profile(
    ts: ComplexGaussianVector, sr: ComplexGaussianVector
) -> np.ndarray:
    """Exact per-coordinate variance of the elementwise product of two laws.

    For independent complex Gaussians x1, x2 the product variance is
    var = s1*s2 + s1*|mu2|^2 + s2*|mu1|^2 per coordinate. Returned as a
    length-N vector for diagnostics; :func:`cascaded_distribution` reduces
    it to a single isotropic figure.
    """
    if ts.dim != sr.dim:
        raise ValueError(f"link dims differ: {ts.dim} vs {sr.dim}")
    s1, s2 = ts.iso_var, sr.iso_var
    return (
        s1 * s2
        + s1 * np.abs(sr.mean) ** 2
        + s2 * np.abs(ts.mean) ** 2
    )


def cascaded_distribution(
    ts: ComplexGaussianVector, sr: ComplexGaussianVector
) -> ComplexGaussianVector:
    """Gaussian moment-match of the two-leg echo in the frequency domain.

    The echo's frequency response is the elementwise product of the leg
    responses. The product of independent complex Gaussians is not Gaussian,
    but its first two moments are closed-form: the mean is the elementwise
    product of means, and the per-coordinate variance follows
    :func:`cascaded_variance_profile`. Downstream models assume isotropic
    covariance, so the profile is averaged over coordinates; pull the full
    profile separately when the spread matters.
    """
    profile = cascaded_variance_profile(ts, sr)
    return ComplexGaussianVector(
        mean=ts.mean * sr.mean, iso_var=float(np.mean(profile))
    )


def hypothesis_models(
    tr: ComplexGaussianVector, cascaded: ComplexGaussianVector
) -> HypothesisPair:
    """Assemble the scatterer-absent/present pair from link laws.

    h0 is the direct path unchanged; h1 adds the independent echo, so means
    add and isotropic variances add.
    """
    if tr.dim != cascaded.dim:
        raise ValueError(f"link dims differ: {tr.dim} vs {cascaded.dim}")
    h1 = ComplexGaussianVector(
        mean=tr.mean + cascaded.mean, iso_var=tr.iso_var + cascaded.iso_var
    )
    return HypothesisPair(h0=tr, h1=h1)
