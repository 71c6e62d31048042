"""Radar cube container and its on-disk format.

A cube is stored as two files sharing a stem:

``<stem>.hdr``
    UTF-8 text, one ``key = value`` per line with keys ``version``, ``M``,
    ``N``, ``prf``, ``range_resolution`` and ``range_offset``.
``<stem>.bin``
    Little-endian float32 pairs ``(I, Q)``, range-bin major: all ``N``
    pulses of bin 0, then bin 1, and so on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import load_config  # noqa: F401  part of the ingest API
from .errors import DataError, FormatError, IoError, SizeError

FORMAT_VERSION = 1
HEADER_SUFFIX = ".hdr"
PAYLOAD_SUFFIX = ".bin"
_PAYLOAD_DTYPE = np.dtype("<f4")


@dataclass(frozen=True, eq=False)
class RadarCube:
    """Complex baseband samples indexed by (range bin, slow-time pulse).

    Parameters
    ----------
    samples : np.ndarray
        complex64 array of shape ``(M, N)``.
    prf : float
        Pulse repetition frequency in Hz.
    range_resolution : float
        Meters per range bin.
    range_offset : float
        Range of bin 0 in meters.
    """

    samples: np.ndarray
    prf: float
    range_resolution: float
    range_offset: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise SizeError(f"cube samples must be a non-empty 2-D array, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise DataError("cube contains non-finite samples")
        if not (self.prf > 0 and math.isfinite(self.prf)):
            raise DataError(f"prf must be positive, got {self.prf}")
        if not (self.range_resolution > 0 and math.isfinite(self.range_resolution)):
            raise DataError(f"range_resolution must be positive, got {self.range_resolution}")
        if not math.isfinite(self.range_offset):
            raise DataError("range_offset must be finite")
        samples = samples.astype(np.complex64, copy=False)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def n_range(self):
        return self.samples.shape[0]

    @property
    def n_pulses(self):
        return self.samples.shape[1]

    @property
    def duration_s(self):
        return self.n_pulses / self.prf


def cube_paths(path):
    """Return ``(header, payload)`` paths for a stem or either member file."""
    path = Path(path)
    if path.suffix in (HEADER_SUFFIX, PAYLOAD_SUFFIX):
        path = path.with_suffix("")
    return path.with_name(path.name + HEADER_SUFFIX), path.with_name(path.name + PAYLOAD_SUFFIX)


def format_header(cube):
    return (
        f"version = {FORMAT_VERSION}\n"
        f"M = {cube.n_range}\n"
        f"N = {cube.n_pulses}\n"
        f"prf = {cube.prf!r}\n"
        f"range_resolution = {cube.range_resolution!r}\n"
        f"range_offset = {cube.range_offset!r}\n"
    )


def parse_header(text):
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"header line {lineno} is not 'key = value': {raw!r}")
        fields[key.strip()] = value.strip()

    required = ("version", "M", "N", "prf", "range_resolution", "range_offset")
    missing = [k for k in required if k not in fields]
    if missing:
        raise FormatError(f"header missing keys: {', '.join(missing)}")
    unknown = sorted(set(fields) - set(required))
    if unknown:
        raise FormatError(f"header has unknown keys: {', '.join(unknown)}")
    try:
        version = int(fields["version"])
        m, n = int(fields["M"]), int(fields["N"])
        prf = float(fields["prf"])
        res = float(fields["range_resolution"])
        offset = float(fields["range_offset"])
    except ValueError as exc:
        raise FormatError(f"garbled header value: {exc}") from exc
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported cube format version {version}")
    if m < 1 or n < 1:
        raise FormatError(f"header dimensions must be positive, got M={m}, N={n}")
    return {"M": m, "N": n, "prf": prf, "range_resolution": res, "range_offset": offset}


def load_radar_cube(path):
    """Read a cube from ``<stem>.hdr`` + ``<stem>.bin``.

    Raises
    ------
    FormatError
        Header missing or unparsable.
    SizeError
        Payload length is not ``2*M*N`` float32 values.
    DataError
        Non-finite samples or invalid metadata.
    """
    hdr_path, bin_path = cube_paths(path)
    try:
        text = hdr_path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise FormatError(f"cube header not found: {hdr_path}") from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"cube header is not UTF-8: {hdr_path}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {hdr_path}: {exc}") from exc
    meta = parse_header(text)

    try:
        raw = bin_path.read_bytes()
    except FileNotFoundError as exc:
        raise SizeError(f"cube payload not found: {bin_path}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {bin_path}: {exc}") from exc
    m, n = meta["M"], meta["N"]
    expected = 2 * m * n * _PAYLOAD_DTYPE.itemsize
    if len(raw) != expected:
        raise SizeError(
            f"payload holds {len(raw) / _PAYLOAD_DTYPE.itemsize:g} floats, "
            f"header implies {2 * m * n} (M={m}, N={n})"
        )
    iq = np.frombuffer(raw, dtype=_PAYLOAD_DTYPE).reshape(m, n, 2)
    samples = np.empty((m, n), dtype=np.complex64)
    samples.real = iq[..., 0]
    samples.imag = iq[..., 1]
    return RadarCube(samples, meta["prf"], meta["range_resolution"], meta["range_offset"])


def write_radar_cube(cube, path):
    """Write ``cube`` next to ``path``; returns ``(header, payload)`` paths."""
    hdr_path, bin_path = cube_paths(path)
    iq = np.empty(cube.samples.shape + (2,), dtype=_PAYLOAD_DTYPE)
    iq[..., 0] = cube.samples.real
    iq[..., 1] = cube.samples.imag
    try:
        hdr_path.parent.mkdir(parents=True, exist_ok=True)
        bin_path.write_bytes(iq.tobytes())
        hdr_path.write_text(format_header(cube), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write cube {hdr_path.with_suffix('')}: {exc}") from exc
    return hdr_path, bin_path
