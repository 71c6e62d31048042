import numpy as np
import pytest

from radarseg.errors import DataError, FormatError, SizeError
from radarseg.ingest import RadarCube, cube_paths, format_header, load_radar_cube, write_radar_cube

HEADER = "version = 1\nM = 2\nN = 3\nprf = 1000\nrange_resolution = 0.3\nrange_offset = 0.5\n"


def _write_raw(tmp_path, header, floats):
    (tmp_path / "c.hdr").write_text(header, encoding="utf-8")
    np.asarray(floats, dtype="<f4").tofile(tmp_path / "c.bin")
    return tmp_path / "c"


def test_minimal_cube(tmp_path):
    stem = _write_raw(tmp_path, HEADER, np.arange(12))
    cube = load_radar_cube(stem)
    assert cube.samples.shape == (2, 3)
    assert (cube.prf, cube.range_resolution, cube.range_offset) == (1000.0, 0.3, 0.5)
    # interleaved I/Q, range-bin major
    assert cube.samples[0, 0] == 0 + 1j
    assert cube.samples[0, 2] == 4 + 5j
    assert cube.samples[1, 0] == 6 + 7j


def test_short_payload(tmp_path):
    stem = _write_raw(tmp_path, HEADER, np.arange(11))
    with pytest.raises(SizeError):
        load_radar_cube(stem)


def test_full_size_cube(tmp_path):
    rng = np.random.default_rng(0)
    samples = (rng.standard_normal((256, 12000)) + 1j * rng.standard_normal((256, 12000))).astype(np.complex64)
    write_radar_cube(RadarCube(samples, 600.0, 0.05), tmp_path / "big")
    cube = load_radar_cube(tmp_path / "big.hdr")
    assert cube.samples.shape == (256, 12000)
    assert np.array_equal(cube.samples, samples)


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(1)
    samples = (rng.standard_normal((5, 7)) * 1e3 + 1j * rng.standard_normal((5, 7))).astype(np.complex64)
    cube = RadarCube(samples, 123.5, 0.07, 1.25)
    hdr, payload = write_radar_cube(cube, tmp_path / "rt")
    back = load_radar_cube(payload)
    assert back.samples.tobytes() == samples.tobytes()
    assert format_header(back) == format_header(cube)


def test_cube_paths_accepts_any_member(tmp_path):
    a = cube_paths(tmp_path / "x")
    assert cube_paths(tmp_path / "x.hdr") == a == cube_paths(tmp_path / "x.bin")


@pytest.mark.parametrize(
    "header",
    [
        HEADER.replace("M = 2\n", ""),
        HEADER.replace("prf = 1000", "prf = fast"),
        HEADER.replace("version = 1", "version = 2"),
        HEADER + "colour = red\n",
        HEADER.replace("M = 2", "M 2"),
    ],
)
def test_bad_headers(tmp_path, header):
    stem = _write_raw(tmp_path, header, np.arange(12))
    with pytest.raises(FormatError):
        load_radar_cube(stem)


def test_missing_header(tmp_path):
    with pytest.raises(FormatError):
        load_radar_cube(tmp_path / "nothing")


def test_non_finite_samples(tmp_path):
    floats = np.arange(12, dtype=float)
    floats[5] = np.nan
    stem = _write_raw(tmp_path, HEADER, floats)
    with pytest.raises(DataError):
        load_radar_cube(stem)


@pytest.mark.parametrize("kwargs", [{"prf": 0.0}, {"range_resolution": -1.0}])
def test_invalid_metadata(kwargs):
    args = {"prf": 100.0, "range_resolution": 0.1, **kwargs}
    with pytest.raises((DataError, SizeError)):
        RadarCube(np.zeros((2, 2), np.complex64), **args)


def test_empty_cube_rejected():
    with pytest.raises(SizeError):
        RadarCube(np.zeros((0, 3), np.complex64), 100.0, 0.1)
