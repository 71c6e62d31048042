"""Range-map pre-processing: dB magnitude, column normalization,
slow-time sub-sampling, box smoothing and thresholding.

Rows are range bins (row 0 nearest the radar), columns are slow time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import convolve2d

from .errors import SizeError, StageError


class Stage(enum.IntEnum):
    RAW_DB = 0
    NORMALIZED = 1
    DOWNSAMPLED = 2
    FILTERED = 3
    THRESHOLDED = 4


@dataclass(frozen=True)
class AxisMap:
    """Affine index-to-physical map: ``value = offset + index * scale``."""

    scale: float
    offset: float = 0.0

    def __call__(self, index):
        return self.offset + np.asarray(index, dtype=float) * self.scale

    def inverse(self, value):
        return (np.asarray(value, dtype=float) - self.offset) / self.scale


@dataclass(frozen=True, eq=False)
class RangeMapImage:
    pixels: np.ndarray
    row_to_meters: AxisMap
    col_to_seconds: AxisMap
    stage: Stage

    @property
    def shape(self):
        return self.pixels.shape

    def _next(self, pixels, stage, **axes):
        return replace(self, pixels=pixels, stage=stage, **axes)


def _require(img, stage, op):
    if img.stage != stage:
        raise StageError(f"{op} expects a {stage.name.lower()} image, got {img.stage.name.lower()}")


def magnitude_db(cube, db_floor=-120.0):
    """20*log10|sample|, clamped below at ``db_floor``."""
    mag = np.abs(cube.samples.astype(np.complex128))
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag)
    db = np.maximum(db, db_floor)
    return RangeMapImage(
        pixels=db,
        row_to_meters=AxisMap(cube.range_resolution, cube.range_offset),
        col_to_seconds=AxisMap(1.0 / cube.prf, 0.0),
        stage=Stage.RAW_DB,
    )


def normalize_columns(img):
    """Shift every column to a zero minimum, then divide by its maximum.

    Constant columns become all-zero.
    """
    _require(img, Stage.RAW_DB, "normalize_columns")
    shifted = img.pixels - img.pixels.min(axis=0, keepdims=True)
    peak = shifted.max(axis=0, keepdims=True)
    out = np.divide(shifted, peak, out=np.zeros_like(shifted), where=peak > 0)
    return img._next(out, Stage.NORMALIZED)


def uniform_indices(n_src, n_dst):
    """Nearest-index uniform selection of ``n_dst`` out of ``n_src`` samples."""
    stride = n_src / n_dst
    return np.floor(np.arange(n_dst) * stride + 0.5).astype(int)


def downsample_slow_time(img, target):
    """Keep uniformly spaced rows/columns so the image becomes ``target``.

    The axis maps are rescaled by the source/target ratio; for integer
    strides every retained pixel keeps its exact physical coordinates,
    otherwise within half a source sample.
    """
    _require(img, Stage.NORMALIZED, "downsample_slow_time")
    rows, cols = img.shape
    m_new, n_new = target
    if m_new > rows or n_new > cols or m_new < 1 or n_new < 1:
        raise SizeError(f"cannot downsample {rows}x{cols} to {m_new}x{n_new}")
    r_idx = uniform_indices(rows, m_new)
    c_idx = uniform_indices(cols, n_new)
    pixels = img.pixels[np.ix_(r_idx, c_idx)]
    return img._next(
        pixels,
        Stage.DOWNSAMPLED,
        row_to_meters=AxisMap(img.row_to_meters.scale * rows / m_new, img.row_to_meters.offset),
        col_to_seconds=AxisMap(img.col_to_seconds.scale * cols / n_new, img.col_to_seconds.offset),
    )


def box_kernel(k):
    side = 2 * k + 1
    return np.full((side, side), 1.0 / side**2)


def smooth(img, k=1):
    """Uniform (2k+1)x(2k+1) mean filter with zero padding."""
    _require(img, Stage.DOWNSAMPLED, "smooth")
    out = convolve2d(img.pixels, box_kernel(k), mode="same", boundary="fill", fillvalue=0.0)
    return img._next(out, Stage.FILTERED)


def threshold(img, tau=0.75):
    """Zero every pixel below ``tau``."""
    _require(img, Stage.FILTERED, "threshold")
    if not 0 < tau <= 1:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    out = np.where(img.pixels >= tau, img.pixels, 0.0)
    return img._next(out, Stage.THRESHOLDED)


def preprocess(cube, cfg):
    """Run all five stages; returns the list of intermediate images.

    The downsampling target is capped at the source size so small cubes
    pass through unchanged along that axis.
    """
    p = cfg.preproc
    raw = magnitude_db(cube, p.db_floor)
    norm = normalize_columns(raw)
    target = (min(p.downsample_target[0], norm.shape[0]), min(p.downsample_target[1], norm.shape[1]))
    ds = downsample_slow_time(norm, target)
    filt = smooth(ds, p.kernel_half_width)
    return [raw, norm, ds, filt, threshold(filt, p.rm_threshold)]
