"""Channel simulation: banded / cyclic-banded / 2-D ISI channels, noise, frames.

All channel matrices are kept in compact band storage and never densified on
the transmit path.  Band storage convention (0-based): row ``k`` of ``band``
holds the coefficients ``H[k, k-B+j]`` for ``j = 0..2B``.  For the strictly
banded case, slots whose column index falls outside ``[0, K-1]`` are stored
as exact zeros; for the cyclic case the column index wraps modulo ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

# Gaussian-mixture noise is fixed to two components: weight 0.9 at the base
# variance and weight 0.1 at 10x the base variance.
MIXTURE_WEIGHT_OUTLIER = 0.1
MIXTURE_VARIANCE_FACTOR = 10.0
MIXTURE_POWER_FACTOR = (1.0 - MIXTURE_WEIGHT_OUTLIER) + MIXTURE_WEIGHT_OUTLIER * MIXTURE_VARIANCE_FACTOR

NOISE_KINDS = ("complex-gaussian", "complex-gaussian-mixture", "real-gaussian")

SPEED_OF_SOUND = 1500.0  # m/s, used for Doppler-rate draws


@dataclass
class BandedChannel:
    """Strictly banded K x K channel in compact band storage."""

    K: int
    B: int
    band: np.ndarray  # (K, 2B+1) complex, out-of-range slots exactly zero

    def __post_init__(self):
        if self.band.shape != (self.K, 2 * self.B + 1):
            raise ValueError(f"band must be ({self.K}, {2 * self.B + 1}), got {self.band.shape}")

    def to_dense(self) -> np.ndarray:
        """Reconstruct the dense K x K matrix (test/oracle use only)."""
        H = np.zeros((self.K, self.K), dtype=complex)
        for j in range(2 * self.B + 1):
            off = j - self.B
            for k in range(self.K):
                m = k + off
                if 0 <= m < self.K:
                    H[k, m] = self.band[k, j]
        return H


@dataclass
class CyclicBandedChannel:
    """Cyclically banded (near-banded) K x K channel in band storage."""

    K: int
    B: int
    band: np.ndarray  # (K, 2B+1) complex, columns wrap modulo K

    def __post_init__(self):
        if self.K <= 2 * self.B:
            raise ValueError(f"cyclic band self-overlaps: need K > 2B, got K={self.K}, B={self.B}")
        if self.band.shape != (self.K, 2 * self.B + 1):
            raise ValueError(f"band must be ({self.K}, {2 * self.B + 1}), got {self.band.shape}")

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.K, self.K), dtype=complex)
        for j in range(2 * self.B + 1):
            for k in range(self.K):
                H[k, (k - self.B + j) % self.K] = self.band[k, j]
        return H


@dataclass
class TdmrChannel:
    """2-D ISI channel: an (B+1) x (B+1) real impulse response on an N x K grid."""

    N: int
    K: int
    B: int
    h: np.ndarray  # (B+1, B+1) real

    def __post_init__(self):
        if self.h.shape != (self.B + 1, self.B + 1):
            raise ValueError(f"h must be ({self.B + 1}, {self.B + 1}), got {self.h.shape}")
        if min(self.N, self.K) < self.B + 1:
            raise ValueError("grid must be at least (B+1) x (B+1)")


@dataclass
class NoiseModel:
    """Noise description: kind plus base variance sigma2.

    For the Gaussian mixture the effective power is 1.9 * sigma2 (weights
    0.9/0.1, variance factor 10); ``power`` returns the effective value.
    """

    kind: str
    sigma2: float

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")

    @property
    def power(self) -> float:
        """Mean noise power E|n|^2."""
        if self.kind == "complex-gaussian-mixture":
            return MIXTURE_POWER_FACTOR * self.sigma2
        return self.sigma2

    def sample(self, shape, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "real-gaussian":
            return rng.standard_normal(shape) * np.sqrt(self.sigma2)
        if self.kind == "complex-gaussian":
            var = np.full(shape, self.sigma2)
        else:  # complex-gaussian-mixture
            outlier = rng.random(shape) < MIXTURE_WEIGHT_OUTLIER
            var = self.sigma2 * np.where(outlier, MIXTURE_VARIANCE_FACTOR, 1.0)
        scale = np.sqrt(var / 2.0)
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass
class Frame:
    """One transmission instance: symbols, received samples, SNR bookkeeping."""

    x: np.ndarray  # BPSK symbols in {-1,+1}; (K,) or (N, K)
    y: np.ndarray  # received samples; complex (K,) or real (N, K)
    snr_db: float
    sigma2: float


@dataclass
class UnderwaterParams:
    """Settings for the multipath underwater acoustic OFDM channel."""

    N_p: int = 15
    T: float = 104.86e-3  # symbol duration, s
    f_c: float = 13e3     # carrier frequency, Hz
    K: int = 1024
    sigma_v: float = 0.3  # Doppler-velocity std, m/s
    c: float = SPEED_OF_SOUND
    B: int = 1

    def __post_init__(self):
        if min(self.N_p, self.T, self.f_c, self.K, self.sigma_v, self.c) <= 0:
            raise ValueError("underwater parameters must be positive")
        if self.B < 0:
            raise ValueError("B must be nonnegative")


@dataclass
class DoublySelectiveParams:
    """Settings for the doubly selective OFDM channel (cyclic ICI band)."""

    K: int = 128
    f_d: float = 0.005      # max Doppler, normalized to the signaling rate
    N_h: int | None = None  # delay-spread tap count; default K/4
    tap_variance: float | None = None  # per-tap variance; default 1/N_h
    B: int = 1
    n_sinusoids: int = 16   # Jakes sum-of-sinusoids order

    def __post_init__(self):
        if self.K <= 0 or self.f_d < 0 or self.B < 0:
            raise ValueError("invalid doubly selective parameters")
        if self.N_h is None:
            if self.K % 4 != 0:
                raise ValueError("default N_h = K/4 requires K divisible by 4")
            self.N_h = self.K // 4
        if self.N_h <= 0:
            raise ValueError("N_h must be positive")
        if self.tap_variance is None:
            self.tap_variance = 1.0 / self.N_h
        if self.tap_variance <= 0:
            raise ValueError("tap_variance must be positive")


# ---------------------------------------------------------------------------
# Channel generators
# ---------------------------------------------------------------------------

def draw_banded_rayleigh(K: int, B: int, rng: np.random.Generator) -> BandedChannel:
    """Draw a banded channel with i.i.d. CN(0,1) in-band entries."""
    if K < 1 or B < 0:
        raise ValueError(f"invalid dimensions K={K}, B={B}")
    w = 2 * B + 1
    band = (rng.standard_normal((K, w)) + 1j * rng.standard_normal((K, w))) / np.sqrt(2.0)
    _zero_out_of_range(band, K, B)
    return BandedChannel(K=K, B=B, band=band)


def draw_near_banded_rayleigh(K: int, B: int, rng: np.random.Generator) -> CyclicBandedChannel:
    """Draw a cyclically banded channel with i.i.d. CN(0,1) band entries."""
    if K < 1 or B < 0:
        raise ValueError(f"invalid dimensions K={K}, B={B}")
    if K <= 2 * B:
        raise ValueError(f"cyclic band self-overlaps: need K > 2B, got K={K}, B={B}")
    w = 2 * B + 1
    band = (rng.standard_normal((K, w)) + 1j * rng.standard_normal((K, w))) / np.sqrt(2.0)
    return CyclicBandedChannel(K=K, B=B, band=band)


def draw_underwater_channel(p: UnderwaterParams, rng: np.random.Generator) -> BandedChannel:
    """Draw one realization of the underwater acoustic multipath channel.

    Path delays are uniform on [0, T/8]; amplitudes are Rayleigh with an
    exponential power-delay profile (decay T/16) normalized to unit total
    mean power; Doppler rates are v/c with v ~ N(0, sigma_v^2).
    """
    tau = rng.uniform(0.0, p.T / 8.0, size=p.N_p)
    pdp = np.exp(-tau / (p.T / 16.0))
    mean_power = pdp / pdp.sum()
    amp = rng.rayleigh(scale=np.sqrt(mean_power / 2.0))
    a = rng.normal(0.0, p.sigma_v, size=p.N_p) / p.c

    K, B = p.K, p.B
    offsets = np.arange(-B, B + 1, dtype=float)
    f_k = p.f_c + (np.arange(K) - K // 2) / p.T  # subcarriers -K/2 .. K/2-1
    band = np.zeros((K, 2 * B + 1), dtype=complex)
    for i in range(p.N_p):
        tau_eff = tau[i] / (1.0 + a[i])
        doppler = a[i] * f_k / (1.0 + a[i])  # Hz, per row
        beta_t = offsets[None, :] + (doppler * p.T)[:, None]
        rho = np.sinc(beta_t) * np.exp(1j * np.pi * beta_t)
        gain = (amp[i] / (1.0 + a[i])) * np.exp(-2j * np.pi * f_k * tau_eff)
        band += gain[:, None] * rho
    _zero_out_of_range(band, K, B)
    return BandedChannel(K=K, B=B, band=band)


def draw_doubly_selective_channel(p: DoublySelectiveParams, rng: np.random.Generator) -> CyclicBandedChannel:
    """Draw one realization of the doubly selective OFDM channel.

    Time-variant taps h[n, l] (n = 0..K-1, l = 0..N_h-1) follow a per-tap
    Jakes sum-of-sinusoids process; the subcarrier-domain matrix

        H[k, m] = (1/K) sum_n sum_l h[n, l] exp(-2j*pi*(l*m + (k-m)*n)/K)

    is truncated to the cyclic band |k-m| <= B (mod K).
    """
    K, B, N_h = p.K, p.B, p.N_h
    if K <= 2 * B:
        raise ValueError(f"cyclic band self-overlaps: need K > 2B, got K={K}, B={B}")
    taps = _jakes_taps(K, N_h, p.f_d, p.tap_variance, p.n_sinusoids, rng)
    # H[k, m] = (1/K) * sum_l G[(k-m) mod K, l] * exp(-2j pi l m / K)
    # with G[d, l] the DFT of tap l over time.
    G = np.fft.fft(taps, axis=0)
    ls = np.arange(N_h)
    rows = np.arange(K)
    band = np.zeros((K, 2 * B + 1), dtype=complex)
    for j in range(2 * B + 1):
        m = (rows - B + j) % K
        d = (B - j) % K
        phases = np.exp(-2j * np.pi * np.outer(m, ls) / K)
        band[:, j] = (phases @ G[d]) / K
    return CyclicBandedChannel(K=K, B=B, band=band)


def draw_tdmr_channel(B: int, rng: np.random.Generator, N: int = 200, K: int = 100) -> TdmrChannel:
    """Draw a (B+1) x (B+1) real Gaussian 2-D impulse response."""
    if B < 0:
        raise ValueError("B must be nonnegative")
    h = rng.standard_normal((B + 1, B + 1))
    return TdmrChannel(N=N, K=K, B=B, h=h)


def _jakes_taps(n_steps: int, n_taps: int, f_d: float, tap_variance: float,
                n_sinusoids: int, rng: np.random.Generator) -> np.ndarray:
    """Per-tap Jakes simulator: (n_steps, n_taps) complex WSSUS process."""
    alpha = rng.uniform(0.0, 2.0 * np.pi, size=(n_taps, n_sinusoids))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=(n_taps, n_sinusoids))
    n = np.arange(n_steps)[:, None, None]
    arg = 2.0 * np.pi * f_d * n * np.cos(alpha)[None, :, :] + phi[None, :, :]
    taps = np.exp(1j * arg).sum(axis=2) * np.sqrt(tap_variance / n_sinusoids)
    return taps


def _zero_out_of_range(band: np.ndarray, K: int, B: int) -> None:
    """Zero the band slots whose column index falls outside [0, K-1]."""
    for j in range(2 * B + 1):
        off = j - B
        if off < 0:
            band[: -off, j] = 0.0
        elif off > 0:
            band[K - off:, j] = 0.0


# ---------------------------------------------------------------------------
# Transmission
# ---------------------------------------------------------------------------

def transmit(channel, x: np.ndarray, noise: NoiseModel, rng: np.random.Generator,
             signal_power: float | None = None) -> Frame:
    """Push BPSK symbols through a channel and add noise.

    The received vector is computed directly from the band (no dense
    matrix is formed).  ``signal_power`` overrides the analytic mean
    signal power used to derive the recorded snr_db (see snr_to_sigma2).
    """
    x = np.asarray(x)
    if not np.all(np.abs(x) == 1):
        raise ValueError("x entries must be in {-1,+1}")
    if isinstance(channel, TdmrChannel):
        if x.shape != (channel.N, channel.K):
            raise ValueError(f"x shape {x.shape} does not match grid ({channel.N}, {channel.K})")
        clean = convolve2d(x, channel.h, mode="full")[: channel.N, : channel.K]
        y = clean + noise.sample(x.shape, rng)
    else:
        K, B = channel.K, channel.B
        if x.shape != (K,):
            raise ValueError(f"x shape {x.shape} does not match K={K}")
        y = band_matvec(channel, x.astype(float)) + noise.sample((K,), rng)
    snr_db = sigma2_to_snr_db(noise, channel.B, signal_power=signal_power)
    return Frame(x=x, y=y, snr_db=snr_db, sigma2=noise.sigma2)


def band_matvec(channel, v: np.ndarray) -> np.ndarray:
    """Compute H @ v from band storage (zero-padded or wrapped boundary)."""
    K, B, band = channel.K, channel.B, channel.band
    if isinstance(channel, CyclicBandedChannel):
        out = np.zeros(K, dtype=np.result_type(band, v))
        for j in range(2 * B + 1):
            out += band[:, j] * np.roll(v, B - j)
        return out
    vp = np.zeros(K + 2 * B, dtype=v.dtype)
    vp[B: B + K] = v
    out = np.zeros(K, dtype=np.result_type(band, v))
    for j in range(2 * B + 1):
        out += band[:, j] * vp[j: j + K]
    return out


# ---------------------------------------------------------------------------
# SNR bookkeeping
# ---------------------------------------------------------------------------

def mean_signal_power(B: int, noise_kind: str) -> float:
    """Analytic interior-position mean received-signal power.

    2B+1 for unit-variance complex Rayleigh bands; (B+1)^2 for the real
    TDMR response (real-gaussian noise marks the 2-D case).
    """
    if noise_kind == "real-gaussian":
        return float((B + 1) ** 2)
    return float(2 * B + 1)


def snr_to_sigma2(snr_db: float, B: int, noise_kind: str,
                  signal_power: float | None = None) -> float:
    """Base noise variance for a target SNR.

    sigma2 = S / (eff * 10^(snr_db/10)) with S the analytic interior mean
    signal power and eff = 1.9 for the Gaussian mixture (so that the
    effective noise power 0.9*sigma2 + 0.1*10*sigma2 sits in the SNR
    denominator), eff = 1 otherwise.
    """
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    S = mean_signal_power(B, noise_kind) if signal_power is None else signal_power
    eff = MIXTURE_POWER_FACTOR if noise_kind == "complex-gaussian-mixture" else 1.0
    return S / (eff * 10.0 ** (snr_db / 10.0))


def sigma2_to_snr_db(noise: NoiseModel, B: int, signal_power: float | None = None) -> float:
    """Inverse of snr_to_sigma2 for a given noise model."""
    S = mean_signal_power(B, noise.kind) if signal_power is None else signal_power
    return 10.0 * np.log10(S / noise.power)


def sample_training_snr(range_db: tuple[float, float], rng: np.random.Generator) -> float:
    """Uniform SNR draw in the dB domain."""
    low, high = range_db
    if low > high:
        raise ValueError("snr range must satisfy low <= high")
    return float(rng.uniform(low, high))


def draw_bpsk(shape, rng: np.random.Generator) -> np.ndarray:
    """Uniform BPSK symbols in {-1,+1}."""
    return rng.integers(0, 2, size=shape) * 2.0 - 1.0
