import pytest

from tgrsim.config import (ConfigError, DeviceMode, LaMode, SimConfig, TlMode, load_config,
                           parse_override)


def test_defaults_match_reference_deployment():
    c = SimConfig().validate()
    assert (c.num_cells, c.warmup_s, c.measure_s, c.drops, c.pdb_ms) == (12, 9.0, 9.0, 10, 10.0)
    assert c.scheduler.total_prbs == 273
    assert c.harq.processes == 16 and c.harq.max_retx == 3
    assert c.la.delta_up_db == 0.5 and c.la.tbler_target == 0.1
    assert c.radio.rank_penalty_legacy == (0.0, 1.0, 2.5, 4.5)
    assert c.radio.rank_penalty_tgr == (0.0, 0.5, 1.25, 2.25)


def test_round_trip_through_plain_dict():
    c = SimConfig.from_dict({"device_mode": "tgr", "tl_mode": "wifi6", "la_mode": "moolla",
                             "radio": {"bf_gain_db": 9.5}})
    again = SimConfig.from_dict(c.to_dict())
    assert again == c
    assert again.device_mode is DeviceMode.TGR and again.tl_mode is TlMode.WIFI6
    assert again.la_mode is LaMode.MOOLLA


@pytest.mark.parametrize("data,key", [
    ({"bogus": 1}, "bogus"),
    ({"radio": {"nope": 2}}, "radio.nope"),
    ({"max_rank": 5}, "max_rank"),
    ({"measure_s": 0}, "measure_s"),
    ({"drops": 0}, "drops"),
    ({"tl_mode": "wifi9"}, "tl_mode"),
    ({"traffic": {"frame_kb": {"mean": 93, "std": 10, "low": 141, "high": 46}}}, "traffic.frame_kb"),
])
def test_invalid_config_names_the_key(data, key):
    with pytest.raises(ConfigError) as exc:
        SimConfig.from_dict(data)
    assert exc.value.key.startswith(key)
    assert key in str(exc.value)


def test_parse_override_types_values():
    assert parse_override("radio.bf_gain_db=7") == {"radio": {"bf_gain_db": 7}}
    assert parse_override("device_mode=tgr") == {"device_mode": "tgr"}
    assert parse_override("sweep.ues_per_cell=[2, 4]") == {"sweep": {"ues_per_cell": [2, 4]}}
    with pytest.raises(ConfigError):
        parse_override("no-equals-sign")


def test_load_config_applies_overrides(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("num_cells: 4\nradio:\n  shadowing_std_db: 2.0\n")
    c = load_config(p, ["radio.shadowing_std_db=1.5", "ues_per_cell=3"])
    assert c.num_cells == 4 and c.ues_per_cell == 3 and c.radio.shadowing_std_db == 1.5


def test_rank_penalty_must_be_monotone():
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"radio": {"rank_penalty_legacy": [0, 2, 1, 3]}})
