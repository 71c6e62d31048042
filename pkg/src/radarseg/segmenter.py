"""Fuse range-map lines and PBC spans into one labeled motion timeline."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

from .errors import ConsistencyError


class MotionClass(enum.Enum):
    TRANSLATION = "translation"
    IN_PLACE = "in_place"


class Direction(enum.Enum):
    APPROACHING = "approaching"
    RECEDING = "receding"
    NONE = "none"


class Source(enum.Enum):
    RADON_LINE = "radon_line"
    PBC_SPAN = "pbc_span"


@dataclass(frozen=True)
class MotionSegment:
    start_s: float
    end_s: float
    motion_class: MotionClass
    direction: Direction
    source: Source
    slope_m_per_s: float = 0.0

    def straddles(self, t):
        return self.start_s < t < self.end_s


@dataclass
class Timeline:
    segments: list = field(default_factory=list)
    coverage: float = 0.0

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["start_s", "end_s", "class", "direction", "slope_m_per_s", "source"])
        for s in self.segments:
            writer.writerow([
                f"{s.start_s:.3f}",
                f"{s.end_s:.3f}",
                s.motion_class.value,
                s.direction.value,
                f"{s.slope_m_per_s:.3f}",
                s.source.value,
            ])
        return buf.getvalue()


def read_timeline_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        MotionSegment(
            float(r["start_s"]),
            float(r["end_s"]),
            MotionClass(r["class"]),
            Direction(r["direction"]),
            Source(r["source"]),
            float(r["slope_m_per_s"]),
        )
        for r in rows
    ]


def physical_slope(line):
    """Range rate in m/s of a line whose slope is in rows per column."""
    geo = line.geometry
    return line.m * geo.row_to_meters.scale / geo.col_to_seconds.scale


def classify_slope(line, slope_floor=0.1):
    """``(MotionClass, Direction, slope_m_per_s)`` for a range-map line.

    Range rates within ``slope_floor`` of zero count as in-place; otherwise
    negative rates approach the radar and positive rates recede.
    """
    slope = float(physical_slope(line))
    if abs(slope) <= slope_floor:
        return MotionClass.IN_PLACE, Direction.NONE, 0.0
    if slope < 0:
        return MotionClass.TRANSLATION, Direction.APPROACHING, slope
    return MotionClass.TRANSLATION, Direction.RECEDING, slope


def interval_bounds(lines, k, guard=0.0):
    """Time interval of line ``k`` after backing off ``guard`` seconds from each transition."""
    t0, t1 = lines[k].time_span()
    if k > 0:
        t0 += guard
    if k < len(lines) - 1:
        t1 -= guard
    return t0, t1


def _check_consistency(lines, transitions):
    if len(transitions) != max(len(lines) - 1, 0):
        raise ConsistencyError(f"{len(lines)} lines cannot have {len(transitions)} transitions")
    for k, tp in enumerate(transitions):
        a, b = lines[k], lines[k + 1]
        # either support, or the gap between a's end and b's start
        ok = (
            a.support[0] <= tp.col <= a.support[1]
            or b.support[0] <= tp.col <= b.support[1]
            or a.support[1] <= tp.col <= b.support[0]
        )
        if not ok:
            raise ConsistencyError(
                f"transition {k} at column {tp.col:.1f} lies outside both lines' support "
                f"{a.support} and {b.support}"
            )


def build_timeline(lines, transitions, inplace_spans, slope_floor=0.1, guard=0.5, observation=None):
    """Labeled, non-overlapping motion segments.

    Translation lines become one segment over their valid span; in-place
    lines contribute one segment per PBC span (``inplace_spans`` maps line
    index to spans).  Segments stay ``guard`` seconds clear of every
    transition so that none covers the true switch instant when the
    estimate is off by less than ``guard``.
    """
    _check_consistency(lines, transitions)
    segments = []
    for k, line in enumerate(lines):
        cls, direction, slope = classify_slope(line, slope_floor)
        t0, t1 = interval_bounds(lines, k, guard)
        if cls is MotionClass.TRANSLATION:
            if t1 > t0:
                segments.append(MotionSegment(t0, t1, cls, direction, Source.RADON_LINE, slope))
            continue
        for span in inplace_spans.get(k, ()):
            s0, s1 = max(span.start_s, t0), min(span.end_s, t1)
            if s1 > s0:
                segments.append(MotionSegment(s0, s1, cls, Direction.NONE, Source.PBC_SPAN, 0.0))

    segments.sort(key=lambda s: (s.start_s, s.end_s))
    resolved = []
    for seg in segments:
        if resolved and seg.start_s < resolved[-1].end_s:
            if seg.end_s <= resolved[-1].end_s:
                continue
            seg = MotionSegment(resolved[-1].end_s, seg.end_s, seg.motion_class, seg.direction,
                                seg.source, seg.slope_m_per_s)
        resolved.append(seg)

    if observation is None and lines:
        geo = lines[0].geometry
        observation = (float(geo.col_to_seconds(-0.5)), float(geo.col_to_seconds(geo.cols - 0.5)))
    total = (observation[1] - observation[0]) if observation else 0.0
    labeled = sum(s.end_s - s.start_s for s in resolved)
    return Timeline(resolved, labeled / total if total > 0 else 0.0)
