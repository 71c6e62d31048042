"""Micro-Doppler spectrograms and the power burst curve (PBC).

The PBC is the per-frame spectrogram power summed over a positive and a
negative Doppler band that both exclude the zero-Doppler region.  After a
causal moving average, frames at or above ``min + rel*(max - min)`` form
activity spans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .config import StftConfig
from .errors import ConfigError, NoActivityError, SizeError

DEFAULT_WINDOW_S = 0.2


@dataclass(frozen=True)
class StftParams:
    window_len: int
    hop: int
    window_kind: str = "hann"

    @classmethod
    def resolve(cls, stft_cfg, prf):
        """Fill the automatic (zero) entries of an :class:`StftConfig`."""
        window_len = stft_cfg.window_len or max(2, int(round(DEFAULT_WINDOW_S * prf)))
        hop = stft_cfg.hop or max(1, window_len // 4)
        return cls(window_len, hop, stft_cfg.window_kind)

    @property
    def nfft(self):
        # odd length keeps the shifted frequency axis symmetric about 0 Hz
        return self.window_len | 1


@dataclass(frozen=True, eq=False)
class Spectrogram:
    power: np.ndarray  # [n_freq, n_frames]
    freq_axis: np.ndarray
    frame_times: np.ndarray
    stft_params: StftParams


@dataclass(frozen=True, eq=False)
class PowerCurve:
    values: np.ndarray
    frame_times: np.ndarray
    filtered: bool = False


@dataclass(frozen=True)
class ActivitySpan:
    start_s: float
    end_s: float
    peak_power: float
    frame_span: tuple[int, int]


def slow_time_signal(cube, span=None, range_bins=None):
    """Sum of the cube over ``range_bins`` (all when ``None``) for pulses in ``span``."""
    start, end = (0, cube.n_pulses) if span is None else (int(span[0]), int(span[1]))
    if not 0 <= start <= end <= cube.n_pulses:
        raise SizeError(f"pulse span {span} outside cube of {cube.n_pulses} pulses")
    rows = slice(None) if range_bins is None else np.asarray(range_bins, dtype=int)
    return cube.samples[rows, start:end].astype(np.complex128).sum(axis=0)


def spectrogram(cube, span=None, params=None, range_bins=None):
    """Short-time Fourier power of the slow-time signal over pulses ``[start, end)``.

    Frame times refer to window centers.  The Doppler axis is two-sided,
    ascending, in Hz.
    """
    if params is None:
        params = StftParams.resolve(StftConfig(), cube.prf)
    start = 0 if span is None else int(span[0])
    sig = slow_time_signal(cube, span, range_bins)
    L = params.window_len
    if sig.size < L:
        raise SizeError(f"span of {sig.size} pulses is shorter than one {L}-pulse window")
    frames = sliding_window_view(sig, L)[:: params.hop]
    taper = get_window(params.window_kind, L, fftbins=False)
    spec = np.fft.fftshift(np.fft.fft(frames * taper, n=params.nfft, axis=1), axes=1)
    power = (spec.real**2 + spec.imag**2).T
    freqs = np.fft.fftshift(np.fft.fftfreq(params.nfft, 1.0 / cube.prf))
    centers = start + np.arange(frames.shape[0]) * params.hop + (L - 1) / 2.0
    return Spectrogram(power, freqs, centers / cube.prf, params)


def band_mask(freq_axis, band_pos, band_neg):
    """Bins whose center lies in ``[K_P1, K_P2]`` or ``[K_N1, K_N2]``."""
    if band_pos[0] <= 0 or band_neg[1] >= 0:
        raise ConfigError(f"PBC bands {band_pos}, {band_neg} must exclude 0 Hz")
    lo, hi = freq_axis.min(), freq_axis.max()
    for band in (band_pos, band_neg):
        if band[0] < lo - 1e-9 or band[1] > hi + 1e-9:
            raise ConfigError(f"PBC band {band} exceeds the Doppler axis [{lo:g}, {hi:g}] Hz")
    f = freq_axis
    return ((f >= band_pos[0]) & (f <= band_pos[1])) | ((f >= band_neg[0]) & (f <= band_neg[1]))


def power_burst_curve(spec, band_pos=(20.0, 270.0), band_neg=(-270.0, -20.0)):
    mask = band_mask(spec.freq_axis, band_pos, band_neg)
    return PowerCurve(spec.power[mask].sum(axis=0), spec.frame_times, filtered=False)


def smooth_pbc(pbc, w=5):
    """Causal w-point moving average; the first frames average what is available."""
    if w < 1:
        raise ValueError(f"moving-average window must be >= 1, got {w}")
    v = np.asarray(pbc.values, dtype=float)
    sums = np.convolve(v, np.ones(w))[: v.size]
    counts = np.minimum(np.arange(1, v.size + 1), w)
    return PowerCurve(sums / counts, pbc.frame_times, filtered=True)


def pbc_threshold(pbc, rel_threshold=0.03):
    lo, hi = float(np.min(pbc.values)), float(np.max(pbc.values))
    return lo + rel_threshold * (hi - lo)


def _runs(mask):
    """Inclusive ``(start, end)`` index pairs of the True runs of ``mask``."""
    edges = np.diff(np.concatenate(([0], mask.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def segment_pbc(pbc, rel_threshold=0.03, min_span=0.5, gap_merge=5):
    """Activity spans of a smoothed PBC.

    Frames at or above the threshold form runs; runs separated by fewer than
    ``gap_merge`` frames are merged, and spans shorter than ``min_span``
    seconds (or a single frame) are dropped.

    Raises
    ------
    NoActivityError
        The curve is flat, so no threshold separates activity from rest.
    """
    v = np.asarray(pbc.values, dtype=float)
    if v.size == 0 or np.max(v) == np.min(v):
        raise NoActivityError("power burst curve is flat")
    thr = pbc_threshold(pbc, rel_threshold)
    runs = _runs(v >= thr)
    merged = []
    for s, e in runs:
        if merged and s - merged[-1][1] - 1 < gap_merge:
            merged[-1] = (merged[-1][0], e)
        else:
            merged.append((s, e))
    t = pbc.frame_times
    spans = []
    for s, e in merged:
        start_s, end_s = float(t[s]), float(t[e])
        if end_s <= start_s or end_s - start_s < min_span:
            continue
        spans.append(ActivitySpan(start_s, end_s, float(v[s : e + 1].max()), (s, e)))
    return spans


def analyze_interval(cube, pulse_span, cfg, range_bins=None):
    """Spectrogram, raw and smoothed PBC and spans for one in-place interval."""
    params = StftParams.resolve(cfg.stft, cube.prf)
    spec = spectrogram(cube, pulse_span, params, range_bins)
    raw = power_burst_curve(spec, cfg.pbc.band_pos, cfg.pbc.band_neg)
    smoothed = smooth_pbc(raw, cfg.pbc.ma_window)
    spans = segment_pbc(smoothed, cfg.pbc.rel_threshold, cfg.pbc.min_span, cfg.pbc.gap_merge)
    return spec, raw, smoothed, spans
