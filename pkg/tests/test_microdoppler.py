import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from radarseg.config import PbcConfig, PipelineConfig, StftConfig
from radarseg.errors import ConfigError, NoActivityError, SizeError
from radarseg.ingest import RadarCube
from radarseg.microdoppler import (
    PowerCurve,
    Spectrogram,
    StftParams,
    analyze_interval,
    band_mask,
    pbc_threshold,
    power_burst_curve,
    segment_pbc,
    smooth_pbc,
    spectrogram,
)
from radarseg.synth import Event, ScenarioSpec, synth_cube


def tone_cube(freq_hz, prf=1000.0, n=2000):
    t = np.arange(n) / prf
    return RadarCube(np.exp(2j * np.pi * freq_hz * t)[None, :].astype(np.complex64), prf, 0.1)


def curve(values, dt=0.05, filtered=True):
    values = np.asarray(values, dtype=float)
    return PowerCurve(values, np.arange(values.size) * dt, filtered)


def fake_spec(power, freqs):
    power = np.asarray(power, dtype=float)
    return Spectrogram(power, np.asarray(freqs, float), np.arange(power.shape[1]) * 0.1, StftParams(8, 2))


def test_stft_defaults_resolve():
    p = StftParams.resolve(StftConfig(), 600.0)
    assert (p.window_len, p.hop, p.window_kind) == (120, 30, "hann")
    assert p.nfft % 2 == 1
    assert StftParams.resolve(StftConfig(window_len=64, hop=16), 600.0).nfft == 65


def test_tone_ridge():
    spec = spectrogram(tone_cube(100.0))
    ridge = spec.freq_axis[np.argmax(spec.power, axis=0)]
    nearest = spec.freq_axis[np.argmin(np.abs(spec.freq_axis - 100.0))]
    assert np.all(ridge == nearest)
    np.testing.assert_allclose(spec.freq_axis, -spec.freq_axis[::-1], atol=1e-9)
    assert np.all(np.diff(spec.frame_times) > 0)


def test_frame_times_are_window_centres():
    cube = tone_cube(50.0, prf=1000.0, n=1000)
    spec = spectrogram(cube, span=(100, 900), params=StftParams(200, 50))
    assert spec.frame_times[0] == pytest.approx((100 + 99.5) / 1000.0)
    assert spec.frame_times[1] - spec.frame_times[0] == pytest.approx(0.05)


def test_zero_signal_zero_power():
    cube = RadarCube(np.zeros((3, 1000), np.complex64), 1000.0, 0.1)
    assert not spectrogram(cube).power.any()


def test_span_shorter_than_window():
    with pytest.raises(SizeError):
        spectrogram(tone_cube(10.0), span=(0, 100), params=StftParams(200, 50))
    with pytest.raises(SizeError):
        spectrogram(tone_cube(10.0), span=(0, 5000))


def test_range_bins_select_rows():
    t = np.arange(1200) / 600.0
    samples = np.zeros((4, 1200), np.complex64)
    samples[2] = np.exp(2j * np.pi * 80 * t)
    cube = RadarCube(samples, 600.0, 0.1)
    assert spectrogram(cube, range_bins=[0, 1]).power.max() == 0.0
    assert spectrogram(cube, range_bins=[2]).power.max() > 0.0


def test_sit_burst_energy_in_negative_band():
    spec_ = ScenarioSpec(
        events=(Event("quiet", 2.0), Event("still_burst", 2.0, doppler_band_hz=(-250.0, -40.0)), Event("quiet", 2.0)),
        N=3600,
        noise_db=25.0,
        present_from_start=True,
    )
    cube, truth = synth_cube(spec_, seed=2)
    spec = spectrogram(cube)
    (a, b), = truth.activity_spans_s
    inside = (spec.frame_times > a + 0.2) & (spec.frame_times < b - 0.2)
    neg = band_mask(spec.freq_axis, (20.0, 270.0), (-270.0, -20.0)) & (spec.freq_axis < 0)
    pos = band_mask(spec.freq_axis, (20.0, 270.0), (-270.0, -20.0)) & (spec.freq_axis > 0)
    burst_neg = spec.power[neg][:, inside].sum()
    assert burst_neg > 20 * spec.power[pos][:, inside].sum()
    assert burst_neg > 20 * spec.power[neg][:, spec.frame_times < a - 0.2].sum()


def test_pbc_counts_in_band_bins():
    freqs = np.linspace(-300, 300, 61)  # 10 Hz steps
    power = np.zeros((61, 4))
    in_band = np.flatnonzero(band_mask(freqs, (20.0, 270.0), (-270.0, -20.0)))
    power[in_band[:10]] = 1.0
    pbc = power_burst_curve(fake_spec(power, freqs))
    assert pbc.values.tolist() == [10.0] * 4
    assert not pbc.filtered


def test_default_bands():
    cfg = PbcConfig()
    assert cfg.band_pos == (20.0, 270.0) and cfg.band_neg == (-270.0, -20.0)


def test_zero_doppler_excluded():
    freqs = np.linspace(-300, 300, 61)
    power = np.zeros((61, 3))
    power[30] = 5.0
    power[29:32] = 5.0  # -10, 0, +10 Hz
    assert not power_burst_curve(fake_spec(power, freqs)).values.any()


@pytest.mark.parametrize(
    "pos, neg",
    [((-10.0, 270.0), (-270.0, -20.0)), ((20.0, 270.0), (-270.0, 5.0)), ((20.0, 400.0), (-270.0, -20.0))],
)
def test_bad_bands(pos, neg):
    with pytest.raises(ConfigError):
        band_mask(np.linspace(-300, 300, 61), pos, neg)


def test_smooth_constant_and_impulse():
    np.testing.assert_allclose(smooth_pbc(curve(np.full(12, 3.0), filtered=False), 5).values, 3.0)
    x = np.zeros(30)
    x[10] = 1.0
    out = smooth_pbc(curve(x, filtered=False), 5)
    assert out.filtered
    expected = np.zeros(30)
    expected[10:15] = 0.2
    np.testing.assert_allclose(out.values, expected, atol=1e-15)


def test_smooth_warm_up_averages_available_frames():
    out = smooth_pbc(curve([4.0, 2.0, 0.0, 6.0], filtered=False), 5).values
    np.testing.assert_allclose(out, [4.0, 3.0, 2.0, 3.0])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 100)), st.integers(1, 6))
def test_smooth_preserves_mean_with_zero_tails(core, w):
    x = np.concatenate([np.zeros(w), core, np.zeros(w)])
    out = smooth_pbc(curve(x, filtered=False), w).values
    # frames from w-1 on carry full windows; zero tails keep all mass inside
    assert out[w - 1 :].sum() == pytest.approx(x[w - 1 :].sum(), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_pbc_additive(n_frames, seed):
    rng = np.random.default_rng(seed)
    freqs = np.linspace(-300, 300, 31)
    a, b = rng.random((31, n_frames)), rng.random((31, n_frames))
    pa = power_burst_curve(fake_spec(a, freqs)).values
    pb = power_burst_curve(fake_spec(b, freqs)).values
    np.testing.assert_allclose(power_burst_curve(fake_spec(a + b, freqs)).values, pa + pb, rtol=1e-12)


def test_threshold_formula():
    assert pbc_threshold(curve([0.0, 0.5, 1.0]), 0.03) == pytest.approx(0.03)
    assert pbc_threshold(curve([2.0, 12.0]), 0.03) == pytest.approx(2.3)


def test_segment_simple_run():
    spans = segment_pbc(curve([0, 0, 1, 1, 1, 0, 0]), 0.03, min_span=0.0)
    assert len(spans) == 1
    assert spans[0].frame_span == (2, 4)
    assert (spans[0].start_s, spans[0].end_s) == pytest.approx((0.10, 0.20))
    assert spans[0].peak_power == 1.0


def test_segment_flat_curve():
    with pytest.raises(NoActivityError):
        segment_pbc(curve([2.0] * 8))


def test_segment_min_span_and_gap_merge():
    x = np.zeros(60)
    x[5:20] = 1.0
    x[22:30] = 1.0  # 2-frame gap: merged
    x[45:50] = 1.0  # 0.2 s long: dropped at min_span 0.5
    spans = segment_pbc(curve(x), 0.03, min_span=0.5, gap_merge=5)
    assert [s.frame_span for s in spans] == [(5, 29)]
    assert [s.frame_span for s in segment_pbc(curve(x), 0.03, min_span=0.0, gap_merge=0)] == [
        (5, 19), (22, 29), (45, 49)
    ]


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(2, 60), elements=st.floats(0, 1)), st.floats(0.01, 0.9), st.floats(0.01, 0.9))
def test_segment_monotone_in_threshold(x, a, b):
    lo, hi = sorted((a, b))
    if x.max() == x.min():
        return
    wide = segment_pbc(curve(x), lo, min_span=0.1, gap_merge=2)
    for s in segment_pbc(curve(x), hi, min_span=0.1, gap_merge=2):
        assert any(w.start_s <= s.start_s and s.end_s <= w.end_s for w in wide)


def test_planted_bursts_recovered():
    events = (
        Event("quiet", 2.0),
        Event("still_burst", 1.5, doppler_band_hz=(-250.0, -40.0)),
        Event("quiet", 2.5),
        Event("still_burst", 1.2, doppler_band_hz=(40.0, 250.0)),
        Event("quiet", 1.8),
    )
    cube, truth = synth_cube(ScenarioSpec(events=events, N=5400, present_from_start=True), seed=7)
    assert truth.activity_spans_s == [pytest.approx((2.0, 3.5)), pytest.approx((6.0, 7.2))]
    spec, raw, smoothed, spans = analyze_interval(cube, None, PipelineConfig())
    hop = spec.stft_params.hop / cube.prf
    delay = (PbcConfig().ma_window - 1) / 2
    assert len(spans) == 2
    for s, (a, b) in zip(spans, truth.activity_spans_s):
        for err in ((s.start_s - a) / hop, (s.end_s - b) / hop):
            assert -2.0 <= err <= 2.0 + delay
