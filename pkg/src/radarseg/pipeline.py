"""End-to-end run: cube and config in, timeline and report out.

Stages run in order: range-map preprocessing, Radon line extraction,
micro-Doppler analysis of each in-place interval, then timeline fusion.
Any stage failure is re-raised as :class:`PipelineError` naming the stage,
and files already written by the failed run are removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plots
from .config import PipelineConfig, dump_config, load_config
from .errors import PipelineError, RadarSegError
from .ingest import load_radar_cube
from .microdoppler import StftParams, analyze_interval, pbc_threshold, power_burst_curve, smooth_pbc, spectrogram
from .radon import extract_lines
from .rangemap import preprocess
from .segmenter import MotionClass, build_timeline, classify_slope, interval_bounds

TIMELINE_NAME = "timeline.csv"
REPORT_NAME = "report.txt"
CONFIG_NAME = "config.toml"


@dataclass(eq=False)
class IntervalAnalysis:
    """Micro-Doppler products for the in-place interval of one line."""

    line_index: int
    pulse_span: tuple[int, int]
    range_bins: np.ndarray
    spectrogram: object
    raw: object
    smoothed: object
    threshold: float
    spans: list


@dataclass(eq=False)
class RunReport:
    timeline: object
    transitions: list
    spans: list
    parameters: PipelineConfig
    artifact_paths: list = field(default_factory=list)
    cube: object = None
    stages: list = field(default_factory=list)
    extraction: object = None
    intervals: list = field(default_factory=list)

    def to_text(self):
        """Key/value summary; parseable as TOML."""
        seg = self.parameters.segment
        out = ["status = \"ok\""]
        lines = self.extraction.lines if self.extraction else []
        out.append(f"lines = {len(lines)}")
        for k, line in enumerate(lines):
            cls, direction, slope = classify_slope(line, seg.slope_floor)
            t0, t1 = line.time_span()
            out += [
                f"line.{k}.class = \"{cls.value}\"",
                f"line.{k}.direction = \"{direction.value}\"",
                f"line.{k}.slope_m_per_s = {slope:.6f}",
                f"line.{k}.m = {line.m:.6f}",
                f"line.{k}.n = {line.n:.6f}",
                f"line.{k}.theta_deg = {line.theta_src:.6f}",
                f"line.{k}.span_s = [{t0:.6f}, {t1:.6f}]",
            ]
        out.append(f"transitions = {len(self.transitions)}")
        for k, tp in enumerate(self.transitions):
            out += [f"transition.{k}.time_s = {tp.time_s:.6f}", f"transition.{k}.range_m = {tp.range_m:.6f}"]
        out.append(f"spans = {len(self.spans)}")
        for k, (line_index, span) in enumerate(self.spans):
            out += [
                f"span.{k}.line = {line_index}",
                f"span.{k}.start_s = {span.start_s:.6f}",
                f"span.{k}.end_s = {span.end_s:.6f}",
            ]
        out.append(f"segments = {len(self.timeline.segments)}")
        out.append(f"coverage = {self.timeline.coverage:.6f}")
        out.append(f"config_snapshot = \"{CONFIG_NAME}\"")
        return "\n".join(out) + "\n"

    @property
    def activity_spans(self):
        return [span for _, span in self.spans]


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except RadarSegError as exc:
        raise PipelineError(name, exc) from exc


def line_range_bins(line, img, cube, halfwidth):
    """Cube range bins whose image row lies within ``halfwidth`` rows of the line."""
    rows = line.row_at(np.asarray(line.valid_span, dtype=float))
    lo, hi = float(np.min(rows)) - halfwidth, float(np.max(rows)) + halfwidth
    bins = np.arange(cube.n_range)
    bin_rows = img.row_to_meters.inverse(cube.range_offset + bins * cube.range_resolution)
    picked = bins[(bin_rows >= lo - 0.5) & (bin_rows <= hi + 0.5)]
    return picked if picked.size else None


def interval_pulses(t0, t1, cube):
    p0 = max(0, int(math.floor(t0 * cube.prf)))
    p1 = min(cube.n_pulses, int(math.ceil(t1 * cube.prf)) + 1)
    return p0, max(p0, p1)


def analyze_inplace(cube, img, lines, cfg):
    """Run the micro-Doppler stage on each in-place line's guarded interval.

    Intervals shorter than one STFT window carry no spans.
    """
    params = StftParams.resolve(cfg.stft, cube.prf)
    out = []
    for k, line in enumerate(lines):
        cls, _, _ = classify_slope(line, cfg.segment.slope_floor)
        if cls is not MotionClass.IN_PLACE:
            continue
        t0, t1 = interval_bounds(lines, k, cfg.segment.transition_guard)
        span = interval_pulses(t0, t1, cube)
        if span[1] - span[0] < params.window_len:
            continue
        bins = line_range_bins(line, img, cube, cfg.radon.support_halfwidth)
        spec, raw, smoothed, spans = analyze_interval(cube, span, cfg, bins)
        thr = pbc_threshold(smoothed, cfg.pbc.rel_threshold)
        out.append(IntervalAnalysis(k, span, bins, spec, raw, smoothed, thr, spans))
    return out


def process_cube(cube, cfg):
    """In-memory pipeline; returns a :class:`RunReport` without artifacts."""
    stages = _stage("rangemap", preprocess, cube, cfg)
    extraction = _stage("radon", extract_lines, stages[-1], cfg)
    intervals = _stage("microdoppler", analyze_inplace, cube, stages[-1], extraction.lines, cfg)
    inplace = {a.line_index: a.spans for a in intervals}
    timeline = _stage(
        "segmenter",
        build_timeline,
        extraction.lines,
        extraction.transitions,
        inplace,
        cfg.segment.slope_floor,
        cfg.segment.transition_guard,
        (0.0, cube.duration_s),
    )
    spans = [(a.line_index, s) for a in intervals for s in a.spans]
    return RunReport(timeline, extraction.transitions, spans, cfg, [], cube, stages, extraction, intervals)


def _stage_dumps(report):
    """``{file name: bytes}`` for the optional per-stage debug output."""
    files = {}
    pgm = plots.pgm_bytes
    for img in report.stages:
        lo, hi = (None, None) if img.stage.name == "RAW_DB" else (0.0, 1.0)
        files[f"rangemap_{int(img.stage)}_{img.stage.name.lower()}.pgm"] = pgm(plots.to_gray(img.pixels, lo, hi))
    ex = report.extraction
    files["radon.pgm"] = pgm(plots.to_gray(ex.radon.accum))
    rows = ["# theta_deg x_prime value"] + [f"{p.theta:.6f} {p.x_prime:.6f} {p.value:.6f}" for p in ex.peaks]
    files["radon_peaks.txt"] = ("\n".join(rows) + "\n").encode("utf-8")
    for a in report.intervals:
        files[f"spectrogram_line{a.line_index}.pgm"] = pgm(plots.spectrogram_gray(a.spectrogram))
        rows = [f"{t:.6f} {v:.9e}" for t, v in zip(a.smoothed.frame_times, a.smoothed.values)]
        files[f"pbc_line{a.line_index}.txt"] = ("\n".join(rows) + "\n").encode("utf-8")
    return files


def _remove(paths):
    for p in paths:
        try:
            Path(p).unlink()
        except OSError:
            pass


def write_outputs(report, out_dir, dump_stages=False):
    files = {
        TIMELINE_NAME: report.timeline.to_csv().encode("utf-8"),
        CONFIG_NAME: dump_config(report.parameters).encode("utf-8"),
    }
    if dump_stages:
        files.update(_stage_dumps(report))
    files[REPORT_NAME] = report.to_text().encode("utf-8")
    written = []
    try:
        out_dir = plots.ensure_dir(out_dir)
        for name, data in files.items():
            written.append(plots.write_bytes(out_dir / name, data))
    except RadarSegError as exc:
        _remove(written)
        raise PipelineError("output", exc) from exc
    report.artifact_paths = [str(p) for p in written]
    return report


def run_pipeline(cube_path, config_path=None, out_dir=None, dump_stages=False):
    """Load, process and (when ``out_dir`` is given) write all run artifacts."""
    cfg = _stage("config", load_config, config_path)
    cube = _stage("ingest", load_radar_cube, cube_path)
    report = process_cube(cube, cfg)
    if out_dir is not None:
        write_outputs(report, out_dir, dump_stages)
    return report


def overview_spectrogram(report):
    """Full-observation spectrogram of the range bins any line touches."""
    cube, cfg = report.cube, report.parameters
    bins = None
    if report.extraction is not None and report.stages:
        picked = [line_range_bins(l, report.stages[-1], cube, cfg.radon.support_halfwidth)
                  for l in report.extraction.lines]
        picked = [b for b in picked if b is not None]
        if picked:
            bins = np.unique(np.concatenate(picked))
    return spectrogram(cube, None, StftParams.resolve(cfg.stft, cube.prf), bins)


def render_plots(report, out_dir):
    """Write range-map stages, the Radon accumulator, an annotated
    spectrogram and PBC plots; returns the written paths."""
    out_dir = plots.ensure_dir(out_dir)
    written = []
    for img in report.stages:
        lo, hi = (None, None) if img.stage.name == "RAW_DB" else (0.0, 1.0)
        name = f"rangemap_{int(img.stage)}_{img.stage.name.lower()}.pgm"
        written.append(plots.write_pgm(out_dir / name, plots.to_gray(img.pixels, lo, hi)))
    if report.extraction is not None:
        written.append(plots.write_pgm(out_dir / "radon.pgm", plots.to_gray(report.extraction.radon.accum)))

    cfg = report.parameters
    spec = overview_spectrogram(report)
    marks = [tp.time_s for tp in report.transitions]
    written.append(plots.write_ppm(out_dir / "spectrogram.ppm", plots.spectrogram_rgb(spec, marks)))

    pbc = smooth_pbc(power_burst_curve(spec, cfg.pbc.band_pos, cfg.pbc.band_neg), cfg.pbc.ma_window)
    svg = plots.curve_svg(pbc.frame_times, pbc.values, pbc_threshold(pbc, cfg.pbc.rel_threshold),
                          report.activity_spans, title="power burst curve")
    written.append(plots.write_text(out_dir / "pbc.svg", svg))
    for a in report.intervals:
        svg = plots.curve_svg(a.smoothed.frame_times, a.smoothed.values, a.threshold, a.spans,
                              title=f"power burst curve, line {a.line_index}")
        written.append(plots.write_text(out_dir / f"pbc_line{a.line_index}.svg", svg))
    return written
