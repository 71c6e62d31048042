"""Synthetic radar scenarios with known ground truth.

A single extended point scatterer (Gaussian range profile) walks at
constant speeds or stays put while a band-limited micro-Doppler burst is
injected.  The subject enters the scene with its first non-quiet event;
``quiet`` afterwards means present but motionless (zero-Doppler return
only).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal.windows import tukey

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, IoError, SizeError
from .ingest import RadarCube, write_radar_cube
from .rangemap import AxisMap, RangeMapImage, Stage

EVENT_KINDS = ("walk", "still_burst", "quiet")
MAX_WALK_SPEED = 3.0


@dataclass(frozen=True)
class Event:
    kind: str
    duration_s: float
    speed_m_per_s: float = 0.0
    doppler_band_hz: tuple[float, float] = (40.0, 250.0)
    burst_amplitude: float = 0.7
    # fraction of the burst spent in the two cosine ramps
    taper: float = 0.1


@dataclass(frozen=True)
class ScenarioSpec:
    events: tuple[Event, ...]
    start_range_m: float = 9.5
    noise_db: float = 25.0
    prf: float = 600.0
    range_resolution: float = 0.05
    M: int = 256
    N: int = 12000
    range_offset: float = 0.0
    wavelength_m: float = 0.0125
    extent_m: float = 0.15
    amplitude: float = 1.0
    present_from_start: bool = False

    def validate(self):
        if self.M < 1 or self.N < 1:
            raise ConfigError(f"scenario dimensions must be positive, got M={self.M}, N={self.N}")
        if self.prf <= 0 or self.range_resolution <= 0:
            raise ConfigError("prf and range_resolution must be positive")
        for i, ev in enumerate(self.events):
            if ev.kind not in EVENT_KINDS:
                raise ConfigError(f"event {i}: unknown kind {ev.kind!r}")
            if not ev.duration_s > 0:
                raise ConfigError(f"event {i}: duration_s must be > 0, got {ev.duration_s}")
            if abs(ev.speed_m_per_s) > MAX_WALK_SPEED:
                raise ConfigError(f"event {i}: walk speed {ev.speed_m_per_s} outside +-{MAX_WALK_SPEED} m/s")
            if ev.kind == "still_burst":
                lo, hi = ev.doppler_band_hz
                if not (-self.prf / 2 <= lo < hi <= self.prf / 2):
                    raise ConfigError(f"event {i}: Doppler band {ev.doppler_band_hz} outside +-prf/2")
                if not 0 <= ev.taper <= 1:
                    raise ConfigError(f"event {i}: taper must lie in [0, 1]")
        return self


@dataclass
class GroundTruth:
    transition_times_s: list = field(default_factory=list)
    activity_spans_s: list = field(default_factory=list)
    # (m, n, theta_deg, x_prime) per range-map line, in image coordinates
    line_params: list = field(default_factory=list)
    # (start_s, end_s, kind) of each line segment
    segments_s: list = field(default_factory=list)


def doppler_hz(speed, wavelength):
    """Doppler shift ``2 v / lambda``; receding (v > 0) is positive."""
    return 2.0 * speed / wavelength


def line_from_motion(range0, speed, t0, image_dims, spec):
    """Centered-frame ``(m, n, theta, x')`` of a constant-speed range trace.

    ``range0`` is the range at time ``t0``.
    """
    rows, cols = image_dims
    rs = spec.range_resolution * spec.M / rows
    cs = (spec.N / spec.prf) / cols
    cy, cx = (rows - 1) / 2.0, (cols - 1) / 2.0
    m = speed * cs / rs
    row0 = (range0 - spec.range_offset) / rs
    n = cy - row0 - m * (cx - t0 / cs)
    theta = math.degrees(math.atan2(1.0, m))
    return m, n, theta, n * math.sin(math.radians(theta))


def _band_noise(rng, n, band, prf):
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    spec = np.fft.fft(z)
    f = np.fft.fftfreq(n, 1.0 / prf)
    spec[(f < band[0]) | (f > band[1])] = 0.0
    out = np.fft.ifft(spec)
    rms = np.sqrt(np.mean(np.abs(out) ** 2))
    return out / rms if rms > 0 else out


def synth_cube(spec, seed=0, image_dims=(128, 384)):
    """Simulate ``spec``; returns ``(RadarCube, GroundTruth)``.

    ``image_dims`` is the downsampled range-map size the ground-truth line
    parameters refer to.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    prf = spec.prf
    counts = [int(round(ev.duration_s * prf)) for ev in spec.events]
    if sum(counts) > spec.N:
        raise SizeError(f"events need {sum(counts)} pulses but the cube holds N={spec.N}")

    n = spec.N
    rng_m = np.full(n, np.nan)  # subject range, NaN while absent
    signal = np.zeros(n, dtype=np.complex128)
    truth = GroundTruth()

    # motion pieces (t0, t1, class, speed, range at t0)
    pieces = []
    present = spec.present_from_start
    r = spec.start_range_m
    start = 0
    for ev, cnt in zip(spec.events, counts):
        if cnt == 0:
            continue
        t0 = start / prf
        idx = slice(start, start + cnt)
        present = present or ev.kind != "quiet"
        if present:
            speed = ev.speed_m_per_s if ev.kind == "walk" else 0.0
            cls = "translation" if ev.kind == "walk" and speed != 0 else "in_place"
            pieces.append((t0, (start + cnt) / prf, cls, speed, r))
            rng_m[idx] = r + speed * np.arange(cnt) / prf
            r = r + speed * cnt / prf
        if ev.kind == "still_burst":
            env = tukey(cnt, ev.taper) if cnt > 1 else np.ones(cnt)
            signal[idx] += ev.burst_amplitude * env * _band_noise(rng, cnt, ev.doppler_band_hz, prf)
            truth.activity_spans_s.append((t0, t0 + cnt / prf))
        start += cnt
    if present and start < n:
        rng_m[start:] = r
        pieces.append((start / prf, n / prf, "in_place", 0.0, r))

    merged = []
    for piece in pieces:
        if merged and merged[-1][2:4] == piece[2:4]:
            merged[-1] = (merged[-1][0], piece[1]) + merged[-1][2:]
        else:
            merged.append(piece)
    for k, (t0, t1, cls, speed, r0) in enumerate(merged):
        truth.segments_s.append((t0, t1, cls))
        truth.line_params.append(line_from_motion(r0, speed, t0, image_dims, spec))
        if k > 0:
            truth.transition_times_s.append(t0)

    alive = ~np.isnan(rng_m)
    phase = np.where(alive, 4.0 * np.pi * np.nan_to_num(rng_m) / spec.wavelength_m, 0.0)
    body = np.where(alive, spec.amplitude * np.exp(1j * phase), 0.0)
    signal = (signal + body) * alive

    bins = spec.range_offset + np.arange(spec.M) * spec.range_resolution
    profile = np.exp(-0.5 * ((bins[:, None] - np.nan_to_num(rng_m)[None, :]) / spec.extent_m) ** 2)
    samples = profile * signal[None, :]
    sigma2 = spec.amplitude**2 / 10 ** (spec.noise_db / 10.0)
    noise = rng.standard_normal((spec.M, n)) + 1j * rng.standard_normal((spec.M, n))
    samples = samples + noise * math.sqrt(sigma2 / 2.0)
    cube = RadarCube(samples.astype(np.complex64), prf, spec.range_resolution, spec.range_offset)
    return cube, truth


def paper_scenario(**overrides):
    """Walk toward the radar, then sit, pause, and stand (the reference scenario)."""
    events = (
        Event("walk", 8.0, speed_m_per_s=-0.8),
        Event("quiet", 1.0),
        Event("still_burst", 2.5, doppler_band_hz=(-250.0, -40.0)),
        Event("quiet", 2.5),
        Event("still_burst", 2.5, doppler_band_hz=(40.0, 250.0)),
    )
    return ScenarioSpec(events=overrides.pop("events", events), **overrides)


def random_walk_sit_stand(rng, noise_db=25.0):
    """Randomized walk-sit-stand scenario within the paper scenario's envelope."""
    walk_s = float(rng.uniform(8.5, 10.0))
    speed = float(rng.uniform(0.6, 1.0)) * (1 if rng.random() < 0.5 else -1)
    start = 9.5 if speed < 0 else float(rng.uniform(1.0, 2.5))
    gap = float(rng.uniform(0.8, 1.2))
    sit = float(rng.uniform(1.8, 2.5))
    pause = float(rng.uniform(1.5, 2.2))
    stand = float(rng.uniform(1.8, 2.5))
    events = (
        Event("walk", walk_s, speed_m_per_s=speed),
        Event("quiet", gap),
        Event("still_burst", sit, doppler_band_hz=(-250.0, -40.0)),
        Event("quiet", pause),
        Event("still_burst", stand, doppler_band_hz=(40.0, 250.0)),
    )
    return ScenarioSpec(events=events, start_range_m=start, noise_db=noise_db)


def two_burst_scenario(rng, noise_db=25.0):
    """In-place only: two bursts separated by a quiet gap."""
    lead = float(rng.uniform(0.8, 1.5))
    b1 = float(rng.uniform(1.2, 2.5))
    gap = float(rng.uniform(1.5, 3.0))
    b2 = float(rng.uniform(1.2, 2.5))
    events = (
        Event("quiet", lead),
        Event("still_burst", b1, doppler_band_hz=(-250.0, -40.0)),
        Event("quiet", gap),
        Event("still_burst", b2, doppler_band_hz=(40.0, 250.0)),
    )
    return ScenarioSpec(events=events, start_range_m=float(rng.uniform(2.0, 8.0)), noise_db=noise_db,
                        N=6000, present_from_start=True)


def _rasterize(img, m, n, span, amplitude):
    rows, cols = img.shape
    cy, cx = (rows - 1) / 2.0, (cols - 1) / 2.0
    # row(col) = m*col + b in pixel coordinates
    b = cy - n - m * cx
    c0, c1 = span
    if abs(m) <= 1.0:
        cs = np.arange(math.ceil(c0), math.floor(c1) + 1)
        rr = m * cs + b
        r0 = np.floor(rr).astype(int)
        f = rr - r0
        for rows_, wts in ((r0, 1 - f), (r0 + 1, f)):
            ok = (rows_ >= 0) & (rows_ < rows) & (cs >= 0) & (cs < cols)
            np.maximum.at(img, (rows_[ok], cs[ok]), amplitude * wts[ok])
    else:
        lo, hi = sorted((m * c0 + b, m * c1 + b))
        rs = np.arange(max(0, math.ceil(lo)), min(rows - 1, math.floor(hi)) + 1)
        cc = (rs - b) / m
        c_0 = np.floor(cc).astype(int)
        f = cc - c_0
        for cols_, wts in ((c_0, 1 - f), (c_0 + 1, f)):
            ok = (cols_ >= 0) & (cols_ < cols)
            np.maximum.at(img, (rs[ok], cols_[ok]), amplitude * wts[ok])


def synth_line_image(lines, dims=(128, 384), amplitude=1.0, noise=0.0, seed=0,
                     row_to_meters=AxisMap(1.0), col_to_seconds=AxisMap(1.0)):
    """Anti-aliased rasterization of centered-frame lines ``y = m*x + n``.

    Each entry of ``lines`` is ``(m, n)`` or ``(m, n, col_start, col_end)``.
    Returns a thresholded-stage image and the ground truth (line
    parameters and consecutive intersections).
    """
    rows, cols = dims
    img = np.zeros(dims)
    truth = GroundTruth()
    parsed = []
    for line in lines:
        m, n = float(line[0]), float(line[1])
        span = (float(line[2]), float(line[3])) if len(line) > 2 else (0.0, cols - 1.0)
        _rasterize(img, m, n, span, amplitude)
        theta = math.degrees(math.atan2(1.0, m))
        truth.line_params.append((m, n, theta, n * math.sin(math.radians(theta))))
        parsed.append((m, n))
    cx = (cols - 1) / 2.0
    for (ma, na), (mb, nb) in zip(parsed, parsed[1:]):
        if ma != mb:
            x = (nb - na) / (ma - mb)
            truth.transition_times_s.append(float(col_to_seconds(cx - x)))
    if noise > 0:
        rng = np.random.default_rng(seed)
        img = img + noise * np.abs(rng.standard_normal(dims))
    return RangeMapImage(img, row_to_meters, col_to_seconds, Stage.THRESHOLDED), truth


def scenario_from_mapping(doc):
    doc = dict(doc)
    try:
        events = tuple(
            Event(**{**e, **({"doppler_band_hz": tuple(e["doppler_band_hz"])} if "doppler_band_hz" in e else {})})
            for e in doc.pop("events", [])
        )
        spec = ScenarioSpec(events=events, **doc)
    except TypeError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc
    return spec.validate()


def load_scenario(path):
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed scenario {path}: {exc}") from exc
    return scenario_from_mapping(doc)


def format_scenario(spec):
    lines = [
        f"{k} = {getattr(spec, k)!r}"
        for k in ("start_range_m", "noise_db", "prf", "range_resolution", "M", "N",
                  "range_offset", "wavelength_m", "extent_m", "amplitude")
    ]
    lines.append(f"present_from_start = {'true' if spec.present_from_start else 'false'}")
    for ev in spec.events:
        lines += [
            "",
            "[[events]]",
            f'kind = "{ev.kind}"',
            f"duration_s = {ev.duration_s!r}",
            f"speed_m_per_s = {ev.speed_m_per_s!r}",
            f"doppler_band_hz = [{ev.doppler_band_hz[0]!r}, {ev.doppler_band_hz[1]!r}]",
            f"burst_amplitude = {ev.burst_amplitude!r}",
            f"taper = {ev.taper!r}",
        ]
    return "\n".join(lines) + "\n"


def format_truth(truth):
    def arr(values):
        return "[" + ", ".join(repr(float(v)) for v in values) + "]"

    out = [
        f"transition_times_s = {arr(truth.transition_times_s)}",
        "activity_spans_s = [" + ", ".join(arr(s) for s in truth.activity_spans_s) + "]",
        "line_params = [" + ", ".join(arr(p) for p in truth.line_params) + "]",
        "segments_s = [" + ", ".join(
            f'[{float(a)!r}, {float(b)!r}, "{k}"]' for a, b, k in truth.segments_s
        ) + "]",
    ]
    return "\n".join(out) + "\n"


def parse_truth(text):
    doc = tomllib.loads(text)
    return GroundTruth(
        transition_times_s=list(doc.get("transition_times_s", [])),
        activity_spans_s=[tuple(s) for s in doc.get("activity_spans_s", [])],
        line_params=[tuple(p) for p in doc.get("line_params", [])],
        segments_s=[(a, b, k) for a, b, k in doc.get("segments_s", [])],
    )


def write_synthetic(spec, seed, out_path, image_dims=(128, 384)):
    """Generate a cube and write ``<stem>.hdr``, ``<stem>.bin`` and ``<stem>.truth``."""
    cube, truth = synth_cube(spec, seed, image_dims)
    hdr, payload = write_radar_cube(cube, out_path)
    truth_path = hdr.with_suffix(".truth")
    try:
        truth_path.write_text(format_truth(truth), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {truth_path}: {exc}") from exc
    return hdr, payload, truth_path
