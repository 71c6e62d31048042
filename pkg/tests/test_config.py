import pytest

from radarseg.config import PipelineConfig, dump_config, load_config, parse_config
from radarseg.errors import ConfigError


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    assert cfg == PipelineConfig()
    assert cfg.preproc.rm_threshold == 0.75
    assert cfg.pbc.ma_window == 5
    assert cfg.pbc.rel_threshold == 0.03


def test_missing_path_gives_defaults():
    assert load_config(None) == PipelineConfig()


def test_out_of_range_threshold_rejected():
    with pytest.raises(ConfigError, match="rm_threshold"):
        parse_config("preproc.rm_threshold = 1.5")


def test_finer_angle_grid_accepted():
    cfg = parse_config("radon.theta_step = 0.5")
    assert cfg.radon.theta_step == 0.5
    assert cfg.preproc == PipelineConfig().preproc


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="pbc.window"):
        parse_config("pbc.window = 3")
    with pytest.raises(ConfigError, match="bogus"):
        parse_config("bogus = 1")


def test_table_syntax_equivalent_to_dotted_keys():
    assert parse_config("[pbc]\nma_window = 7\n") == parse_config("pbc.ma_window = 7")


@pytest.mark.parametrize(
    "text",
    [
        "pbc.ma_window = 0",
        "pbc.rel_threshold = 1.0",
        "pbc.band_pos = [270.0, 20.0]",
        "pbc.band_neg = [-20.0, -270.0]",
        "radon.theta_step = 0",
        "pbc.ma_window = 2.5",
        "pbc.band_pos = [20.0]",
        "stft.window_kind = 'kaiser'",
        "preproc.rm_threshold = 'high'",
        "not valid toml ===",
    ],
)
def test_invalid_documents(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_integer_accepted_for_float_field():
    assert parse_config("preproc.rm_threshold = 1").preproc.rm_threshold == 1.0


def test_dump_round_trips(tmp_path):
    cfg = parse_config("radon.theta_step = 0.5\npbc.band_pos = [25.0, 200.0]\nstft.window_kind = 'hamming'")
    path = tmp_path / "cfg.toml"
    path.write_text(dump_config(cfg), encoding="utf-8")
    assert load_config(path) == cfg


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.toml")
