"""Self-contained image output: binary PGM/PPM pixmaps and SVG line plots."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import IoError


def ensure_dir(out_dir):
    """Create ``out_dir`` if needed; raise :class:`IoError` if that fails."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out_dir}: {exc}") from exc
    return out_dir


def write_bytes(path, data):
    path = Path(path)
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def write_text(path, text):
    return write_bytes(path, text.encode("utf-8"))


def to_gray(values, lo=None, hi=None):
    """Scale to 8-bit gray; ``lo``/``hi`` default to the data range."""
    v = np.asarray(values, dtype=float)
    lo = float(np.min(v)) if lo is None else lo
    hi = float(np.max(v)) if hi is None else hi
    if hi <= lo:
        return np.zeros(v.shape, dtype=np.uint8)
    return np.round(255.0 * np.clip((v - lo) / (hi - lo), 0.0, 1.0)).astype(np.uint8)


def pgm_bytes(gray):
    """Binary (P5) 8-bit graymap encoding."""
    gray = np.ascontiguousarray(gray, dtype=np.uint8)
    h, w = gray.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + gray.tobytes()


def write_pgm(path, gray):
    return write_bytes(path, pgm_bytes(gray))


def write_ppm(path, rgb):
    """Binary (P6) 8-bit pixmap from an ``(h, w, 3)`` array."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    return write_bytes(path, f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes())


def heat_rgb(gray):
    """Black-red-yellow-white ramp for an 8-bit array."""
    g = np.asarray(gray, dtype=float) / 255.0
    r = np.clip(3 * g, 0, 1)
    gr = np.clip(3 * g - 1, 0, 1)
    b = np.clip(3 * g - 2, 0, 1)
    return np.round(255 * np.stack([r, gr, b], axis=-1)).astype(np.uint8)


def spectrogram_gray(spec, dynamic_range_db=60.0):
    """Log-compressed power relative to the image maximum, positive Doppler at the top."""
    db = 10 * np.log10(np.maximum(spec.power, np.finfo(float).tiny))
    top = float(db.max())
    return to_gray(db, top - dynamic_range_db, top)[::-1]


def spectrogram_rgb(spec, marker_times=(), dynamic_range_db=60.0):
    """Heat-map spectrogram with cyan vertical markers at ``marker_times`` seconds."""
    rgb = heat_rgb(spectrogram_gray(spec, dynamic_range_db))
    t = spec.frame_times
    if t.size:
        for tm in marker_times:
            if t[0] <= tm <= t[-1]:
                col = int(np.argmin(np.abs(t - tm)))
                rgb[:, col] = (0, 255, 255)
    return rgb


def _fmt(v):
    return f"{v:.2f}"


def curve_svg(times, values, threshold=None, spans=(), width=800, height=300, title=""):
    """Line plot of ``values`` vs ``times`` as SVG text.

    A dashed horizontal line marks ``threshold`` and translucent boxes
    mark ``spans`` (objects with ``start_s``/``end_s``).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    pad = 40
    t0, t1 = (float(t[0]), float(t[-1])) if t.size else (0.0, 1.0)
    lo = float(v.min()) if v.size else 0.0
    hi = float(v.max()) if v.size else 1.0
    if threshold is not None:
        lo, hi = min(lo, threshold), max(hi, threshold)
    if hi <= lo:
        hi = lo + 1.0
    if t1 <= t0:
        t1 = t0 + 1.0

    def sx(x):
        return pad + (x - t0) / (t1 - t0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - lo) / (hi - lo) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{pad}" y="20" font-family="sans-serif" font-size="14">{title}</text>')
    for span in spans:
        x0, x1 = sx(span.start_s), sx(span.end_s)
        parts.append(
            f'<rect class="span" x="{_fmt(x0)}" y="{pad}" width="{_fmt(x1 - x0)}" '
            f'height="{height - 2 * pad}" fill="green" fill-opacity="0.15"/>'
        )
    if t.size:
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(t, v))
        parts.append(f'<polyline class="curve" fill="none" stroke="black" stroke-width="1" points="{pts}"/>')
    if threshold is not None:
        y = _fmt(sy(threshold))
        parts.append(
            f'<line class="threshold" data-value="{threshold!r}" x1="{pad}" y1="{y}" '
            f'x2="{width - pad}" y2="{y}" stroke="red" stroke-dasharray="6,4"/>'
        )
    parts.append(
        f'<text x="{pad}" y="{height - 10}" font-family="sans-serif" font-size="11">'
        f"t = {t0:.2f} .. {t1:.2f} s</text>"
    )
    parts.append("</svg>\n")
    return "\n".join(parts)
