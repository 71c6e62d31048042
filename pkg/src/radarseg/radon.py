"""Discrete Radon transform of a thresholded range-map and line extraction.

Coordinate frames
-----------------
Both frames put the origin at the image center ``(cy, cx) = ((rows-1)/2,
(cols-1)/2)``.

Projection frame: ``x = col - cx`` (slow time), ``y = cy - row`` (up) and
``x' = x*cos(theta) + y*sin(theta)``.  A horizontal trace at ``row`` peaks
at ``theta = 90`` with ``x' = cy - row``.

Line frame: ``X = cx - col``, ``Y = cy - row``.  The locus of a peak is
``Y = m*X + n`` with ``m = cot(theta)`` and ``n = x'/sin(theta)``, i.e.
``row = cy - n + m*(col - cx)``: ``m`` is the slope in rows per column
(positive = range increasing) and ``n`` the height above the center row
at the center column.  Line intersections are solved in this frame.

Projection
----------
Each pixel is split into four equal sub-pixels at its quarter-cell
centers.  Offset bins are one pixel wide and centered on integer ``x'``; a
sub-pixel landing on a bin edge is shared evenly by the two neighbors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import maximum_filter

from .errors import (
    ConsistencyError,
    EmptyInputError,
    NoPeaksError,
    ParallelLinesError,
    StageError,
    VerticalLineError,
)
from .rangemap import AxisMap, Stage

BORDER_EPS = 1e-9
_TRIG_EPS = 1e-12
_CHUNK = 1 << 22


def theta_grid(theta_step=1.0):
    """Angles ``0, step, ..., < 180`` in degrees."""
    n = int(math.floor(180.0 / theta_step + 1e-9))
    thetas = np.arange(n) * theta_step
    return thetas[thetas < 180.0 - 1e-9]


def clean_trig(thetas_deg):
    """cos/sin with round-off at multiples of 90 degrees snapped to 0."""
    rad = np.deg2rad(np.asarray(thetas_deg, dtype=float))
    c, s = np.cos(rad), np.sin(rad)
    c[np.abs(c) < _TRIG_EPS] = 0.0
    s[np.abs(s) < _TRIG_EPS] = 0.0
    return c, s


def n_offset_bins(rows, cols):
    return 2 * math.ceil(math.hypot(rows, cols) / 2) + 1


@dataclass(frozen=True)
class ImageGeometry:
    rows: int
    cols: int
    row_to_meters: AxisMap = AxisMap(1.0)
    col_to_seconds: AxisMap = AxisMap(1.0)

    @classmethod
    def of(cls, img):
        rows, cols = img.shape
        return cls(rows, cols, img.row_to_meters, img.col_to_seconds)

    @property
    def cy(self):
        return (self.rows - 1) / 2.0

    @property
    def cx(self):
        return (self.cols - 1) / 2.0

    def to_line_frame(self, row, col):
        """``(row, col)`` to line-frame ``(X, Y)``."""
        return self.cx - np.asarray(col, float), self.cy - np.asarray(row, float)

    def to_pixel(self, x, y):
        """Line-frame ``(X, Y)`` to ``(row, col)``."""
        return self.cy - np.asarray(y, float), self.cx - np.asarray(x, float)


@dataclass(frozen=True, eq=False)
class RadonImage:
    accum: np.ndarray  # [n_offsets, n_angles]
    thetas: np.ndarray
    offsets: np.ndarray
    image_shape: tuple[int, int] = (1, 1)

    @property
    def theta_step(self):
        return float(self.thetas[1] - self.thetas[0]) if len(self.thetas) > 1 else 180.0


class PeakClass(enum.Enum):
    HORIZONTAL = "horizontal"
    SLOPED = "sloped"


@dataclass(frozen=True)
class RadonPeak:
    theta: float
    x_prime: float
    value: float
    class_hint: PeakClass
    theta_index: int = -1
    offset_index: int = -1


@dataclass(frozen=True)
class LineModel:
    """``Y = m*X + n`` in the line frame, with provenance and extent.

    ``support`` is the column range carrying the line's mass in the image;
    ``valid_span`` is the support clipped at neighboring transitions.
    """

    m: float
    n: float
    theta_src: float
    x_prime_src: float
    geometry: ImageGeometry
    valid_span: tuple[float, float]
    support: tuple[float, float] = None
    mass: float = 0.0
    centroid_col: float = float("nan")

    def __post_init__(self):
        if self.support is None:
            object.__setattr__(self, "support", self.valid_span)

    def y_at(self, x):
        return self.m * np.asarray(x, float) + self.n

    def row_at(self, col):
        x, _ = self.geometry.to_line_frame(0.0, col)
        return self.geometry.cy - self.y_at(x)

    @property
    def row_intercept(self):
        """Row where the line crosses column 0."""
        return float(self.row_at(0.0))

    def time_span(self):
        cmap = self.geometry.col_to_seconds
        return float(cmap(self.valid_span[0])), float(cmap(self.valid_span[1]))


@dataclass(frozen=True)
class TransitionPoint:
    col: float
    row: float
    time_s: float
    range_m: float


def _subpixels(pixels):
    """Projection-frame sub-pixel coordinates and quarter weights of the nonzero pixels."""
    rows, cols = pixels.shape
    r, c = np.nonzero(pixels)
    w = pixels[r, c] / 4.0
    cy, cx = (rows - 1) / 2.0, (cols - 1) / 2.0
    x0, y0 = c - cx, cy - r
    dx = np.array([-0.25, -0.25, 0.25, 0.25])
    dy = np.array([-0.25, 0.25, -0.25, 0.25])
    x = (x0[:, None] + dx[None, :]).ravel()
    y = (y0[:, None] + dy[None, :]).ravel()
    return x, y, np.repeat(w, 4)


def _bin_positions(xp, half):
    """Bin index and split flags for projected positions.

    Returns ``(k, lower, upper)``: position falls in bin ``k``, or exactly on
    the edge ``k-1 | k`` (``lower``) or ``k | k+1`` (``upper``).
    """
    u = xp + (half + 0.5)
    k = np.floor(u)
    r = u - k
    lower = r < BORDER_EPS
    upper = r > 1.0 - BORDER_EPS
    return k.astype(np.int64), lower, upper


def project_pixels(pixels, thetas):
    """Radon accumulator ``[n_offsets, len(thetas)]`` of a 2-D array."""
    pixels = np.asarray(pixels, dtype=float)
    rows, cols = pixels.shape
    n_off = n_offset_bins(rows, cols)
    half = (n_off - 1) // 2
    n_ang = len(thetas)
    accum = np.zeros(n_off * n_ang)
    x, y, w = _subpixels(pixels)
    if x.size == 0:
        return accum.reshape(n_ang, n_off).T
    c, s = clean_trig(thetas)
    step = max(1, _CHUNK // x.size)
    for start in range(0, n_ang, step):
        sl = slice(start, min(start + step, n_ang))
        xp = x[None, :] * c[sl, None] + y[None, :] * s[sl, None]
        k, lower, upper = _bin_positions(xp, half)
        base = (np.arange(sl.start, sl.stop) * n_off)[:, None]
        ww = np.broadcast_to(w, xp.shape)
        split = lower | upper
        whole = ~split
        idx = [(k + base)[whole]]
        wts = [ww[whole]]
        # edge hits: half to each neighbor
        for mask, other in ((lower, k - 1), (upper, k + 1)):
            if mask.any():
                idx += [(k + base)[mask], (other + base)[mask]]
                wts += [ww[mask] / 2.0, ww[mask] / 2.0]
        accum += np.bincount(np.concatenate(idx), weights=np.concatenate(wts), minlength=accum.size)
    return accum.reshape(n_ang, n_off).T


def radon_transform(img, theta_step=1.0):
    """Radon transform of a thresholded range-map over ``[0, 180)`` degrees."""
    if img.stage != Stage.THRESHOLDED:
        raise StageError(f"radon_transform expects a thresholded image, got {img.stage.name.lower()}")
    if img.pixels.size == 0:
        raise EmptyInputError("cannot project an empty image")
    thetas = theta_grid(theta_step)
    accum = project_pixels(img.pixels, thetas)
    half = (accum.shape[0] - 1) // 2
    return RadonImage(accum, thetas, np.arange(-half, half + 1, dtype=float), img.pixels.shape)


def _classify(theta, step):
    return PeakClass.HORIZONTAL if abs(theta - 90.0) <= 2 * step + 1e-9 else PeakClass.SLOPED


def detect_peaks(radon, min_separation=(5.0, 5), min_rel_height=0.5, max_peaks=6, min_contrast=6.0):
    """Strongest well-separated local maxima of the accumulator.

    A candidate must be a local maximum over the ``min_separation``
    neighborhood, reach ``min_rel_height`` of the global maximum, and exceed
    ``min_contrast`` times the value the image mass would give if it were
    spread evenly over the image's projected width at that angle (this
    rejects the diffuse response of noise-only images).  Candidates are
    accepted greedily by value so that plateaus yield a single peak.
    """
    acc = radon.accum
    gmax = float(acc.max()) if acc.size else 0.0
    if gmax <= 0:
        raise NoPeaksError("Radon accumulator is empty")
    step = radon.theta_step
    a = int(round(min_separation[0] / step))
    b = int(min_separation[1])
    local = acc >= maximum_filter(acc, size=(2 * b + 1, 2 * a + 1), mode="nearest")
    c, s = clean_trig(radon.thetas)
    rows, cols = radon.image_shape
    width = np.maximum(cols * np.abs(c) + rows * np.abs(s), 1.0)
    uniform = acc.sum(axis=0) / width
    cand = local & (acc > 0) & (acc >= min_rel_height * gmax) & (acc >= min_contrast * uniform[None, :])
    oi, ti = np.nonzero(cand)
    if oi.size == 0:
        raise NoPeaksError(
            f"no Radon peak reaches {min_rel_height:g} of the maximum with contrast >= {min_contrast:g}"
        )
    vals = acc[oi, ti]
    order = np.lexsort((oi, ti, -vals))
    kept = []
    for j in order:
        if any(abs(ti[j] - t) <= a and abs(oi[j] - o) <= b for t, o in kept):
            continue
        kept.append((ti[j], oi[j]))
        if len(kept) == max_peaks:
            break
    return [
        RadonPeak(
            theta=float(radon.thetas[t]),
            x_prime=float(radon.offsets[o]),
            value=float(acc[o, t]),
            class_hint=_classify(radon.thetas[t], step),
            theta_index=int(t),
            offset_index=int(o),
        )
        for t, o in kept
    ]


def refine_peak(peak, img, halfwidth=3.0, iterations=3, max_shift_deg=2.0):
    """Sub-grid estimate of a peak's ``(theta, x')``.

    The projection of the pixels inside the strip ``|x' - peak.x_prime| <=
    halfwidth`` has minimum second moment along the principal normal of
    those pixels; that normal gives the refined angle and the strip's mass
    centroid the refined offset.  Falls back to the grid peak when the
    strip is too sparse or the estimate leaves ``max_shift_deg``.
    """
    pixels = np.asarray(img.pixels if hasattr(img, "pixels") else img, dtype=float)
    rows, cols = pixels.shape
    r, c = np.nonzero(pixels)
    if r.size < 2:
        return peak
    w_all = pixels[r, c]
    x_all = c - (cols - 1) / 2.0
    y_all = (rows - 1) / 2.0 - r
    theta, xprime = peak.theta, peak.x_prime
    for _ in range(iterations):
        ct, st = math.cos(math.radians(theta)), math.sin(math.radians(theta))
        sel = np.abs(x_all * ct + y_all * st - xprime) <= halfwidth
        if sel.sum() < 3:
            return peak
        w = w_all[sel]
        x, y = x_all[sel], y_all[sel]
        wsum = w.sum()
        mx, my = (w * x).sum() / wsum, (w * y).sum() / wsum
        dx, dy = x - mx, y - my
        cov = np.array([[(w * dx * dx).sum(), (w * dx * dy).sum()], [(w * dx * dy).sum(), (w * dy * dy).sum()]])
        evals, evecs = np.linalg.eigh(cov)
        nx, ny = evecs[:, 0]
        if nx * ct + ny * st < 0:
            nx, ny = -nx, -ny
        theta = math.degrees(math.atan2(ny, nx))
        xprime = mx * nx + my * ny
    if abs(theta - peak.theta) > max_shift_deg:
        return peak
    return replace(peak, theta=float(theta), x_prime=float(xprime))


def peak_to_line(peak, geometry):
    """Line ``Y = cot(theta)*X + x'/sin(theta)`` from a Radon peak."""
    c, s = clean_trig([peak.theta])
    c, s = float(c[0]), float(s[0])
    if s == 0.0:
        raise VerticalLineError(f"peak at theta={peak.theta:g} deg describes a vertical line")
    span = (0.0, float(geometry.cols - 1))
    return LineModel(
        m=c / s,
        n=peak.x_prime / s,
        theta_src=peak.theta,
        x_prime_src=peak.x_prime,
        geometry=geometry,
        valid_span=span,
        mass=peak.value,
    )


def line_support(line, img, halfwidth=2.0, quantile=0.01):
    """Mass, mass-centroid column and column extent of pixels near a line.

    Pixels within ``halfwidth`` rows of the line count as support; the
    extent runs between the ``quantile`` and ``1 - quantile`` points of the
    cumulative mass so isolated noise near the line's extension is ignored.
    """
    pixels = np.asarray(img.pixels if hasattr(img, "pixels") else img, dtype=float)
    r, c = np.nonzero(pixels)
    near = np.abs(r - line.row_at(c)) <= halfwidth
    if not near.any():
        return 0.0, float("nan"), None
    cols, w = c[near], pixels[r[near], c[near]]
    mass = float(w.sum())
    centroid = float((w * cols).sum() / mass)
    per_col = np.bincount(cols, weights=w, minlength=pixels.shape[1])
    cum = np.cumsum(per_col) / mass
    start = int(np.searchsorted(cum, quantile, side="left"))
    end = int(np.searchsorted(cum, 1.0 - quantile, side="left"))
    return mass, centroid, (float(start), float(min(end, pixels.shape[1] - 1)))


def order_lines(lines, img, halfwidth=2.0):
    """Attach support to each line and sort by support centroid in slow time.

    Lines without any supporting pixel are dropped.
    """
    out = []
    for line in lines:
        mass, centroid, support = line_support(line, img, halfwidth)
        if support is None:
            continue
        out.append(replace(line, mass=mass, centroid_col=centroid, support=support, valid_span=support))
    return sorted(out, key=lambda ln: ln.centroid_col)


def default_slope_epsilon(theta_step=1.0):
    return math.tan(math.radians(theta_step / 2.0))


def merge_parallel(lines, slope_epsilon):
    """Merge consecutive lines whose slopes differ by at most ``slope_epsilon``.

    The heavier line's parameters win; supports are united.
    """
    merged = []
    for line in lines:
        if merged and abs(merged[-1].m - line.m) <= slope_epsilon:
            prev = merged[-1]
            keep = prev if prev.mass >= line.mass else line
            mass = prev.mass + line.mass
            support = (min(prev.support[0], line.support[0]), max(prev.support[1], line.support[1]))
            centroid = (prev.centroid_col * prev.mass + line.centroid_col * line.mass) / mass if mass else keep.centroid_col
            merged[-1] = replace(keep, mass=mass, support=support, valid_span=support, centroid_col=centroid)
        else:
            merged.append(line)
    return merged


def intersect_lines(a, b, slope_epsilon=None):
    """Crossing point of two lines (Cramer's rule on the 2x2 system)."""
    if slope_epsilon is None:
        slope_epsilon = default_slope_epsilon()
    det = a.m - b.m
    if abs(det) <= slope_epsilon:
        raise ParallelLinesError(f"lines are parallel within {slope_epsilon:g} (m={a.m:g}, {b.m:g})")
    x = (b.n - a.n) / det
    y = (a.m * b.n - b.m * a.n) / det
    geo = a.geometry
    row, col = geo.to_pixel(x, y)
    return TransitionPoint(
        col=float(col),
        row=float(row),
        time_s=float(geo.col_to_seconds(col)),
        range_m=float(geo.row_to_meters(row)),
    )


def transition_times(lines, slope_epsilon=None):
    """Intersections of consecutive lines: K lines give K-1 transitions.

    Raises
    ------
    ConsistencyError
        An intersection falls outside the observed slow-time extent.
    """
    out = []
    for a, b in zip(lines, lines[1:]):
        tp = intersect_lines(a, b, slope_epsilon)
        cols = a.geometry.cols
        if not -0.5 <= tp.col <= cols - 0.5:
            raise ConsistencyError(
                f"lines intersect at column {tp.col:.1f}, outside the observation [0, {cols - 1}]"
            )
        out.append(tp)
    return out


def clip_spans(lines, transitions):
    """Restrict each line's valid span to lie between its neighboring transitions."""
    if len(transitions) != max(len(lines) - 1, 0):
        raise ConsistencyError(f"{len(lines)} lines need {max(len(lines) - 1, 0)} transitions")
    out = []
    for k, line in enumerate(lines):
        start, end = line.support
        if k > 0:
            start = transitions[k - 1].col
        if k < len(lines) - 1:
            end = transitions[k].col
        out.append(replace(line, valid_span=(float(start), float(end))))
    return out


@dataclass
class LineExtraction:
    """Everything the Radon stage produced for one image."""

    radon: RadonImage
    peaks: list = field(default_factory=list)
    lines: list = field(default_factory=list)
    transitions: list = field(default_factory=list)


def extract_lines(img, cfg):
    """Radon transform, peak picking, line fitting, ordering and intersection."""
    rc = cfg.radon
    radon = radon_transform(img, rc.theta_step)
    peaks = detect_peaks(
        radon,
        min_separation=rc.peak_min_separation,
        min_rel_height=rc.peak_min_rel_height,
        max_peaks=rc.max_peaks,
        min_contrast=rc.peak_min_contrast,
    )
    geometry = ImageGeometry.of(img)
    lines = []
    for peak in peaks:
        refined = refine_peak(peak, img, rc.refine_halfwidth)
        try:
            lines.append(peak_to_line(refined, geometry))
        except VerticalLineError:
            continue
    if not lines:
        raise NoPeaksError("every Radon peak describes a vertical line")
    eps = default_slope_epsilon(rc.theta_step)
    lines = merge_parallel(order_lines(lines, img, rc.support_halfwidth), eps)
    transitions = transition_times(lines, eps)
    return LineExtraction(radon, peaks, clip_spans(lines, transitions), transitions)
