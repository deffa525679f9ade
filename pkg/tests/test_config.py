import pytest

from dramcam import (ConfigError, DeviceConfig, EnergyModel, GEOMETRY_NARROW,
                     SystemConfig, TimingModel, dump_config, parse_config_text)


def test_default_timing_matches_ddr3_1600():
    t = TimingModel()
    assert t.t_rp_ns == pytest.approx(13.75)
    assert t.t_ras_ns == pytest.approx(35.0)
    assert t.ns(t.t_rcd) == pytest.approx(13.75)


def test_threshold_ordering_enforced():
    with pytest.raises(ConfigError):
        TimingModel(t_multi_threshold=6, t_copy_threshold=6)
    with pytest.raises(ConfigError):
        TimingModel(t_copy_threshold=11)  # not below t_rp
    with pytest.raises(ConfigError):
        TimingModel(copy_gap=1, multi_gap=1)  # gaps must be ordered too
    with pytest.raises(ConfigError):
        TimingModel(multi_gap=2)  # would not classify below t_multi


def test_device_geometry_validation():
    with pytest.raises(ConfigError):
        DeviceConfig(rows_per_subarray=7)  # odd
    with pytest.raises(ConfigError):
        DeviceConfig(rows_per_subarray=6)  # below minimum
    with pytest.raises(ConfigError):
        DeviceConfig(chips=0)


def test_energy_nonnegative():
    with pytest.raises(ConfigError):
        EnergyModel(act_pj=-1.0)


def test_narrow_geometry_preset():
    dev = DeviceConfig(**GEOMETRY_NARROW)
    assert dev.rows_per_subarray == 128 and dev.cols_per_subarray == 64


def test_total_columns():
    dev = DeviceConfig(chips=2, banks_per_chip=3, subarrays_per_bank=4,
                       cols_per_subarray=10, rows_per_subarray=16)
    assert dev.total_columns == 240


def test_config_text_round_trip():
    cfg = SystemConfig(
        device=DeviceConfig(chips=4, rows_per_subarray=64,
                            timing=TimingModel(t_ras=30, strict=False)),
        energy=EnergyModel(act_pj=10.0),
        host_assign_ns=99.0)
    again = parse_config_text(dump_config(cfg))
    assert again == cfg


def test_config_parse_comments_and_defaults():
    cfg = parse_config_text("# comment\nchips = 2\n\nact_pj = 5.5\n")
    assert cfg.device.chips == 2
    assert cfg.energy.act_pj == 5.5
    assert cfg.device.rows_per_subarray == 128  # default retained


@pytest.mark.parametrize("text", [
    "bogus_key = 1",
    "chips = lots",
    "strict_timing = maybe",
    "chips 2",
])
def test_config_parse_rejects_bad_lines(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)
