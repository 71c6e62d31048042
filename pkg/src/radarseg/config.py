"""Pipeline configuration.

Every tunable lives in :class:`PipelineConfig`.  Documents are UTF-8
``key = value`` text with dotted keys (``pbc.ma_window = 5``), parsed as
TOML; keys that are not given keep their defaults.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError


@dataclass(frozen=True)
class PreprocConfig:
    db_floor: float = -120.0
    downsample_target: tuple[int, int] = (128, 384)
    kernel_half_width: int = 1
    rm_threshold: float = 0.75


@dataclass(frozen=True)
class RadonConfig:
    theta_step: float = 1.0
    # (degrees, offset bins)
    peak_min_separation: tuple[float, int] = (5.0, 5)
    peak_min_rel_height: float = 0.5
    max_peaks: int = 6
    # peak / (image mass spread evenly over its projected width at that angle)
    peak_min_contrast: float = 6.0
    # rows either side of a line that count as its support
    support_halfwidth: float = 2.0
    refine_halfwidth: float = 3.0


@dataclass(frozen=True)
class StftConfig:
    # 0 selects 0.2 s worth of pulses
    window_len: int = 0
    # 0 selects window_len // 4
    hop: int = 0
    window_kind: str = "hann"


@dataclass(frozen=True)
class PbcConfig:
    band_pos: tuple[float, float] = (20.0, 270.0)
    band_neg: tuple[float, float] = (-270.0, -20.0)
    ma_window: int = 5
    rel_threshold: float = 0.03
    min_span: float = 0.5
    gap_merge: int = 5


@dataclass(frozen=True)
class SegmentConfig:
    slope_floor: float = 0.1
    transition_guard: float = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    preproc: PreprocConfig = field(default_factory=PreprocConfig)
    radon: RadonConfig = field(default_factory=RadonConfig)
    stft: StftConfig = field(default_factory=StftConfig)
    pbc: PbcConfig = field(default_factory=PbcConfig)
    segment: SegmentConfig = field(default_factory=SegmentConfig)

    def validate(self):
        """Raise :class:`ConfigError` if any value is outside its bounds."""
        p, r, s, b, g = self.preproc, self.radon, self.stft, self.pbc, self.segment
        _check(0 < p.rm_threshold <= 1, "preproc.rm_threshold", p.rm_threshold, "(0, 1]")
        _check(math.isfinite(p.db_floor), "preproc.db_floor", p.db_floor, "finite")
        _check(all(v >= 1 for v in p.downsample_target), "preproc.downsample_target",
               p.downsample_target, ">= 1 each")
        _check(p.kernel_half_width >= 0, "preproc.kernel_half_width", p.kernel_half_width, ">= 0")
        _check(0 < r.theta_step <= 90, "radon.theta_step", r.theta_step, "(0, 90]")
        _check(r.peak_min_separation[0] >= 0 and r.peak_min_separation[1] >= 0,
               "radon.peak_min_separation", r.peak_min_separation, ">= 0 each")
        _check(0 < r.peak_min_rel_height <= 1, "radon.peak_min_rel_height",
               r.peak_min_rel_height, "(0, 1]")
        _check(r.max_peaks >= 1, "radon.max_peaks", r.max_peaks, ">= 1")
        _check(r.peak_min_contrast >= 0, "radon.peak_min_contrast", r.peak_min_contrast, ">= 0")
        _check(r.support_halfwidth > 0, "radon.support_halfwidth", r.support_halfwidth, "> 0")
        _check(r.refine_halfwidth > 0, "radon.refine_halfwidth", r.refine_halfwidth, "> 0")
        _check(s.window_len >= 0, "stft.window_len", s.window_len, ">= 0 (0 = auto)")
        _check(s.hop >= 0, "stft.hop", s.hop, ">= 0 (0 = auto)")
        _check(s.window_kind in WINDOW_KINDS, "stft.window_kind", s.window_kind,
               "one of " + ", ".join(WINDOW_KINDS))
        _check(b.band_pos[0] < b.band_pos[1], "pbc.band_pos", b.band_pos, "K_P1 < K_P2")
        _check(b.band_neg[0] < b.band_neg[1], "pbc.band_neg", b.band_neg, "K_N1 < K_N2")
        _check(b.ma_window >= 1, "pbc.ma_window", b.ma_window, ">= 1")
        _check(0 < b.rel_threshold < 1, "pbc.rel_threshold", b.rel_threshold, "(0, 1)")
        _check(b.min_span >= 0, "pbc.min_span", b.min_span, ">= 0")
        _check(b.gap_merge >= 0, "pbc.gap_merge", b.gap_merge, ">= 0")
        _check(g.slope_floor >= 0, "segment.slope_floor", g.slope_floor, ">= 0")
        _check(g.transition_guard >= 0, "segment.transition_guard", g.transition_guard, ">= 0")
        return self

    def to_flat(self):
        """Return ``{dotted_key: value}`` for every parameter."""
        flat = {}
        for section in dataclasses.fields(self):
            sub = getattr(self, section.name)
            for f in dataclasses.fields(sub):
                flat[f"{section.name}.{f.name}"] = getattr(sub, f.name)
        return flat


WINDOW_KINDS = ("hann", "hamming", "blackman", "boxcar")


def _check(ok, key, value, bounds):
    if not ok:
        raise ConfigError(f"{key} = {value!r} out of range; expected {bounds}")


def _coerce(key, value, default):
    """Coerce a parsed TOML value to the type of ``default``."""
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"{key} expects {len(default)} values, got {value!r}")
        return tuple(_coerce(key, v, d) for v, d in zip(value, default))
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key} expects a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} expects an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} expects a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key} expects a string, got {value!r}")
        return value
    raise TypeError(f"unsupported config field type for {key}")


def _flatten(doc, prefix=""):
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, name + ".")
        else:
            yield name, value


def config_from_mapping(doc):
    """Build a validated config from a (possibly nested) mapping."""
    defaults = PipelineConfig()
    sections = {f.name: getattr(defaults, f.name) for f in dataclasses.fields(defaults)}
    updates = {name: {} for name in sections}
    for key, value in _flatten(doc):
        section, _, name = key.partition(".")
        if section not in sections or not name or "." in name:
            raise ConfigError(f"unknown config key {key!r}")
        sub = sections[section]
        if name not in {f.name for f in dataclasses.fields(sub)}:
            raise ConfigError(f"unknown config key {key!r}")
        updates[section][name] = _coerce(key, value, getattr(sub, name))
    cfg = PipelineConfig(**{s: dataclasses.replace(sections[s], **updates[s]) for s in sections})
    return cfg.validate()


def parse_config(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config document: {exc}") from exc
    return config_from_mapping(doc)


def load_config(path=None):
    """Load a config document; ``None`` returns the defaults."""
    if path is None:
        return PipelineConfig().validate()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _format_value(value):
    if isinstance(value, tuple):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dump_config(cfg):
    """Serialize ``cfg`` as a dotted-key document that :func:`parse_config` reads back."""
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in cfg.to_flat().items())
