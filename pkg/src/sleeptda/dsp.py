"""Signal preprocessing and coherence-distance matrices.

The chain for one 30-second epoch is::

    notch filter -> Fourier coefficients -> kernel-smoothed cross spectra
    -> squared coherence -> distance 1 - C -> mean over each frequency band

Frequencies of Fourier bins are ``k * sample_rate / T`` Hz for ``k = 0..T-1``.
Bins above Nyquist alias negative frequencies and never fall in an EEG band.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import signal as sps

from .errors import AlignmentError, EmptyBandError, InvalidParameterError, ValidationError

log = logging.getLogger(__name__)

STAGES = ("Awake", "NREM1", "NREM2", "NREM3", "REM")
BAND_NAMES = ("Delta", "Theta", "Alpha", "Beta", "Gamma")
BANDS = {
    "Delta": (0.5, 4.0),
    "Theta": (4.0, 8.0),
    "Alpha": (8.0, 12.0),
    "Beta": (12.0, 30.0),
    "Gamma": (30.0, 50.0),
}
EPOCH_SECONDS = 30.0
NOTCH_CENTERS = (60.0, 120.0)
NOTCH_HALF_WIDTH = 1.25
FILTER_ORDER = 3
COHERENCE_EPS = 1e-12


@dataclass(frozen=True)
class MultichannelSignal:
    """Channel-major samples at a fixed integer rate."""

    samples: np.ndarray
    sample_rate: int
    channel_ids: tuple = ()

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 2:
            raise ValidationError(f"samples must be 2-D (channels, time), got shape {x.shape}")
        if x.shape[0] < 2:
            raise ValidationError("at least two channels are required")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        ids = tuple(self.channel_ids) or tuple(f"ch{i}" for i in range(x.shape[0]))
        if len(ids) != x.shape[0]:
            raise ValidationError(f"{len(ids)} channel ids for {x.shape[0]} channels")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "channel_ids", ids)

    @property
    def n_channels(self):
        return self.samples.shape[0]

    @property
    def n_samples(self):
        return self.samples.shape[1]

    @property
    def duration_s(self):
        return self.n_samples / self.sample_rate

    def with_samples(self, samples):
        return MultichannelSignal(samples, self.sample_rate, self.channel_ids)


class Annotation(NamedTuple):
    """A labelled time interval, in seconds from the start of the recording."""

    onset: float
    duration: float
    label: str

    @property
    def end(self):
        return self.onset + self.duration


@dataclass(frozen=True)
class Epoch:
    signal: MultichannelSignal
    stage: str
    index: int
    duration_s: float = EPOCH_SECONDS


@dataclass(frozen=True)
class SpectralMatrix:
    """Smoothed cross-spectral matrix, shape (channels, channels, bins)."""

    values: np.ndarray
    freqs: np.ndarray


@dataclass(frozen=True)
class BandDistanceMatrix:
    values: np.ndarray
    band: str
    epoch_index: int = 0
    stage: str = ""
    meta: dict = field(default_factory=dict, compare=False)


# --------------------------------------------------------------------- filter

def design_bandstop(sample_rate, notch_centers=NOTCH_CENTERS, half_width=NOTCH_HALF_WIDTH,
                    order=FILTER_ORDER):
    """Second-order sections for a cascade of Butterworth bandstop filters.

    Each notch is an ``order``-th order Butterworth bandstop with -3 dB
    edges at ``center +/- half_width`` Hz.

    Returns
    -------
    sos : ndarray, shape (n_sections, 6)
    """
    nyq = sample_rate / 2.0
    sections = []
    for c in notch_centers:
        lo, hi = c - half_width, c + half_width
        if c >= nyq or hi >= nyq or lo <= 0:
            raise InvalidParameterError(
                f"notch {c} Hz (+/-{half_width}) must lie strictly inside (0, {nyq}) Hz")
        sections.append(sps.butter(order, [lo, hi], btype="bandstop", fs=sample_rate,
                                   output="sos"))
    if not sections:
        return np.array([[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]])
    return np.vstack(sections)


def bandstop_filter(signal, notch_centers=NOTCH_CENTERS, *, half_width=NOTCH_HALF_WIDTH,
                    order=FILTER_ORDER, zero_phase=False):
    """Remove mains interference from every channel independently.

    The filter runs forward only (causal, zero initial state) unless
    ``zero_phase`` is set, in which case it runs forward and backward.
    """
    if signal.n_samples == 0:
        raise ValidationError("cannot filter an empty signal")
    sos = design_bandstop(signal.sample_rate, notch_centers, half_width, order)
    if zero_phase:
        y = sps.sosfiltfilt(sos, signal.samples, axis=-1)
    else:
        y = sps.sosfilt(sos, signal.samples, axis=-1)
    return signal.with_samples(y)


# ------------------------------------------------------------------- epoching

def as_annotation(item):
    if isinstance(item, Annotation):
        return item
    if len(item) == 2:
        (onset, duration), label = item
        return Annotation(float(onset), float(duration), str(label))
    return Annotation(float(item[0]), float(item[1]), str(item[2]))


def _multiple_of(x, step):
    q = x / step
    return abs(q - round(q)) < 1e-9


def segment_epochs(signal, stage_annotations, *, duration_s=EPOCH_SECONDS, return_dropped=False):
    """Cut a recording into labelled fixed-length epochs.

    Parameters
    ----------
    signal : MultichannelSignal
    stage_annotations : sequence
        ``((onset, duration), stage)`` pairs or :class:`Annotation` items.
        Onsets and durations must be multiples of ``duration_s``; an
        annotation spanning several epochs labels all of them.
    return_dropped : bool
        Also return the number of epochs discarded for non-finite samples.

    Returns
    -------
    epochs : list of Epoch
        One per epoch interval that is both labelled and fully inside the
        signal, in time order. Trailing partial intervals are discarded.
    """
    n_per = duration_s * signal.sample_rate
    if abs(n_per - round(n_per)) > 1e-9:
        raise InvalidParameterError("epoch duration must be a whole number of samples")
    n_per = int(round(n_per))
    n_full = signal.n_samples // n_per
    labels = {}
    for row, item in enumerate(stage_annotations):
        ann = as_annotation(item)
        if ann.label not in STAGES:
            raise ValidationError(f"unknown sleep stage {ann.label!r}")
        if not (_multiple_of(ann.onset, duration_s) and _multiple_of(ann.duration, duration_s)) \
                or ann.duration <= 0 or ann.onset < 0:
            raise AlignmentError(
                f"stage annotation {row} ({ann.onset}s +{ann.duration}s) is not aligned "
                f"to {duration_s}s epochs")
        first = int(round(ann.onset / duration_s))
        for idx in range(first, first + int(round(ann.duration / duration_s))):
            labels[idx] = ann.label

    epochs, dropped = [], 0
    for idx in sorted(i for i in labels if i < n_full):
        chunk = signal.samples[:, idx * n_per:(idx + 1) * n_per]
        if not np.isfinite(chunk).all():
            dropped += 1
            continue
        epochs.append(Epoch(signal.with_samples(chunk), labels[idx], idx, duration_s))
    if dropped:
        log.warning("dropped %d epoch(s) containing non-finite samples", dropped)
    if return_dropped:
        return epochs, dropped
    return epochs


# ------------------------------------------------------------------- spectra

def fourier_coefficients(x):
    r"""Unitary DFT with time indexed from 1.

    .. math:: d(\omega_k) = T^{-1/2} \sum_{t=1}^{T} X(t) e^{-2\pi i t k / T}

    Works along the last axis, so a (channels, T) array gives all channels.
    """
    x = np.asarray(x, dtype=np.float64)
    T = x.shape[-1]
    if T < 1:
        raise ValidationError("need at least one sample")
    k = np.arange(T)
    # numpy sums from t=0; the extra factor shifts the time origin to t=1
    return np.fft.fft(x, axis=-1) * np.exp(-2j * np.pi * k / T) / math.sqrt(T)


def daniell_kernel(m, modified=True):
    """Normalized Daniell weights of length ``2m + 1``.

    The modified kernel gives the two end points half weight.
    """
    if m < 0:
        raise InvalidParameterError("kernel half-width must be >= 0")
    w = np.ones(2 * m + 1)
    if modified and m > 0:
        w[0] = w[-1] = 0.5
    return w / w.sum()


def _check_kernel(kernel, n_bins):
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 1 or kernel.size % 2 == 0:
        raise InvalidParameterError("kernel must be 1-D with odd length 2m+1")
    if (kernel < 0).any() or abs(kernel.sum() - 1.0) > 1e-9:
        raise InvalidParameterError("kernel weights must be non-negative and sum to 1")
    if kernel.size > n_bins:
        raise InvalidParameterError(f"kernel length {kernel.size} exceeds {n_bins} spectral bins")
    return kernel


def _circular_smooth(p, kernel):
    # out[..., k] = sum_l kernel[l] * p[..., k + l - m], indices mod T
    m = kernel.size // 2
    out = np.zeros_like(p)
    for l, w in enumerate(kernel):
        if w:
            out += w * np.roll(p, m - l, axis=-1)
    return out


def smoothed_cross_spectrum(spec_i, spec_j, kernel):
    """Kernel-smoothed cross periodogram ``sum_w k(w - w_k) d_i(w) conj(d_j(w))``.

    Smoothing wraps around the ends of the spectrum.
    """
    spec_i = np.asarray(spec_i, dtype=np.complex128)
    spec_j = np.asarray(spec_j, dtype=np.complex128)
    if spec_i.shape != spec_j.shape:
        raise InvalidParameterError("spectra must have equal length")
    kernel = _check_kernel(kernel, spec_i.shape[-1])
    if np.array_equal(spec_i, spec_j):
        # auto spectrum: exactly real, fused multiply-adds can leave ~1e-17 imaginary parts
        prod = (spec_i.real ** 2 + spec_i.imag ** 2).astype(np.complex128)
    else:
        prod = spec_i * np.conj(spec_j)
    return _circular_smooth(prod, kernel)


def cross_spectral_matrix(samples, kernel, sample_rate=1.0, fmax=None):
    """Smoothed cross spectra of every channel pair.

    Parameters
    ----------
    samples : array, shape (C, T)
    kernel : array
        Smoothing weights, length 2m+1.
    fmax : float, optional
        Only return bins below this frequency (Hz). Smoothing still wraps
        around the full spectrum.

    Returns
    -------
    SpectralMatrix
        ``values[i, j]`` is the smoothed cross spectrum of channels i and j.
    """
    d = fourier_coefficients(samples)
    T = d.shape[-1]
    kernel = _check_kernel(kernel, T)
    m = kernel.size // 2
    n_out = T if fmax is None else min(T, int(math.ceil(fmax * T / sample_rate)))
    k_out = np.arange(n_out)
    # row r of ``prod`` is bin (r - m) mod T, so tap l is the slice [l, l + n_out)
    ext = np.arange(-m, n_out + m) % T
    dn = d[:, ext].T
    prod = dn[:, :, None] * np.conj(dn[:, None, :])
    acc = np.zeros((n_out, d.shape[0], d.shape[0]), dtype=np.complex128)
    for l, w in enumerate(kernel):
        if w:
            acc += w * prod[l:l + n_out]
    values = np.ascontiguousarray(acc.transpose(1, 2, 0))
    # auto spectra are real up to round-off
    idx = np.arange(d.shape[0])
    values[idx, idx] = values[idx, idx].real
    return SpectralMatrix(values, k_out * sample_rate / T)


def squared_coherence(f_ij, f_ii, f_jj, *, eps=COHERENCE_EPS, reference=None):
    """Squared coherence ``|f_ij|^2 / (f_ii f_jj)``, clamped to [0, 1].

    Bins whose denominator falls below ``(eps * reference)**2`` get 0, where
    ``reference`` defaults to the largest auto-spectrum value supplied.
    """
    f_ij = np.asarray(f_ij)
    f_ii = np.real(np.asarray(f_ii))
    f_jj = np.real(np.asarray(f_jj))
    if reference is None:
        reference = max(float(np.max(f_ii, initial=0.0)), float(np.max(f_jj, initial=0.0)))
    denom = f_ii * f_jj
    floor = (eps * reference) ** 2
    ok = denom > floor
    out = np.zeros(np.broadcast(f_ij, denom).shape)
    num = np.abs(f_ij) ** 2
    np.divide(num, denom, out=out, where=ok)
    return np.clip(out, 0.0, 1.0)


def coherence_matrix(spectral, *, eps=COHERENCE_EPS):
    """Squared coherence for all channel pairs of a :class:`SpectralMatrix`."""
    S = spectral.values
    auto = np.real(np.diagonal(S, axis1=0, axis2=1)).T  # (C, T)
    ref = float(auto.max(initial=0.0))
    return squared_coherence(S, auto[:, None, :], auto[None, :, :], eps=eps, reference=ref)


def coherence_distance(coherence):
    """Distance ``1 - C``."""
    return 1.0 - np.asarray(coherence)


def band_bins(freqs, band, bands=BANDS):
    """Boolean mask of Fourier bins in ``[lo, hi)`` for the named band, DC excluded."""
    try:
        lo, hi = bands[band]
    except KeyError:
        raise InvalidParameterError(f"unknown band {band!r}") from None
    freqs = np.asarray(freqs)
    mask = (freqs >= lo) & (freqs < hi) & (freqs > 0)
    if not mask.any():
        raise EmptyBandError(f"band {band} [{lo}, {hi}) Hz contains no Fourier bins")
    return mask


def band_average(distances, freqs, band, *, bands=BANDS, epoch_index=0, stage=""):
    """Average per-bin distance matrices over the bins of one band.

    Parameters
    ----------
    distances : array, shape (C, C, T)
    freqs : array, shape (T,)
        Frequency in Hz of every bin.
    """
    mask = band_bins(freqs, band, bands)
    D = np.asarray(distances)[:, :, mask].mean(axis=-1)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    np.clip(D, 0.0, 1.0, out=D)
    return BandDistanceMatrix(D, band, epoch_index, stage)


def epoch_distance_matrices(epoch, kernel=None, *, bands=BANDS, band_names=None, eps=COHERENCE_EPS):
    """All band distance matrices of one (already filtered) epoch."""
    if kernel is None:
        kernel = daniell_kernel(4)
    sig = epoch.signal
    names = band_names or list(bands)
    fmax = max(bands[b][1] for b in names)
    spectral = cross_spectral_matrix(sig.samples, kernel, sig.sample_rate, fmax=fmax)
    D = coherence_distance(coherence_matrix(spectral, eps=eps))
    return [band_average(D, spectral.freqs, b, bands=bands, epoch_index=epoch.index,
                         stage=epoch.stage) for b in names]
