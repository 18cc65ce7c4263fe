"""Flat key=value run configuration: parsing, overrides, hashing."""
import pytest

from rankadapt.config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    load_config,
    parse_config_text,
)


def test_defaults_round_trip_through_canonical_text():
    cfg = RunConfig()
    again = parse_config_text(cfg.canonical_text())
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


def test_canonical_text_is_sorted_key_equals_value():
    lines = RunConfig().canonical_text().splitlines()
    keys = [line.split(" = ")[0] for line in lines]
    assert keys == sorted(keys)
    assert "seed = 0" in lines
    assert "encoder = gru" in lines


def test_parse_types_by_default_value():
    cfg = parse_config_text("seed = 7\ndropout = 0.1\nencoder = attention\n")
    assert cfg.seed == 7 and isinstance(cfg.seed, int)
    assert cfg.dropout == pytest.approx(0.1)
    assert cfg.encoder == "attention"


def test_parse_skips_comments_and_blank_lines():
    cfg = parse_config_text("# a comment\n\n  \nseed = 3\n")
    assert cfg.seed == 3


def test_unknown_key_rejected_with_line_number():
    with pytest.raises(ConfigError, match="line 2: unknown config key 'sede'"):
        parse_config_text("seed = 1\nsede = 2\n")


def test_malformed_line_rejected():
    with pytest.raises(ConfigError, match="line 1: expected 'key = value'"):
        parse_config_text("just words\n")


def test_bad_value_type_rejected():
    with pytest.raises(ConfigError, match="bad value for 'seed'"):
        parse_config_text("seed = lots\n")
    with pytest.raises(ConfigError, match="bad value for 'dropout'"):
        parse_config_text("dropout = none\n")


def test_hash_changes_with_any_key():
    assert RunConfig().config_hash() != RunConfig(seed=1).config_hash()
    assert RunConfig().config_hash() != RunConfig(dim=32).config_hash()
    assert len(RunConfig().config_hash()) == 12


def test_overrides_beat_file_which_beats_defaults():
    cfg = parse_config_text("num_users = 40\nseed = 5\n")
    cfg = apply_overrides(cfg, ["num_users=50"])
    assert cfg.num_users == 50    # flag wins
    assert cfg.seed == 5          # file survives
    assert cfg.num_items == 500   # default survives


def test_override_requires_key_value_form():
    with pytest.raises(ConfigError, match="--set expects key=value"):
        apply_overrides(RunConfig(), ["num_users"])
    with pytest.raises(ConfigError, match="unknown config key"):
        apply_overrides(RunConfig(), ["uzers=5"])


def test_load_config_reads_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 11\nencoder = mf\n")
    cfg = load_config(path)
    assert cfg.seed == 11
    assert cfg.encoder == "mf"


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "nope.cfg")


def test_d_vector_parses_channel_shares():
    cfg = RunConfig(recall_train_d="0.2,0.5,0.3")
    assert cfg.d_vector("recall_train_d") == pytest.approx((0.2, 0.5, 0.3))


def test_d_vector_validation():
    with pytest.raises(ConfigError, match="comma-separated floats"):
        RunConfig(recall_train_d="a,b,c").d_vector("recall_train_d")
    with pytest.raises(ConfigError, match="exactly 3"):
        RunConfig(recall_train_d="0.5,0.5").d_vector("recall_train_d")
    with pytest.raises(ConfigError, match="sum to 1"):
        RunConfig(recall_train_d="0.5,0.3,0.1").d_vector("recall_train_d")
    with pytest.raises(ConfigError, match="sum to 1"):
        RunConfig(recall_train_d="-0.2,0.9,0.3").d_vector("recall_train_d")
