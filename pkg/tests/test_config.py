import math

import pytest

from rthslab.config import (
    CONFIG_KEYS,
    DEFAULT_BRACE_STIFFNESS,
    ExperimentConfig,
    load_config,
    parse_config_text,
)
from rthslab.integrator import Scheme

from conftest import BRACE_K, DT


def test_defaults_reproduce_bench():
    cfg = ExperimentConfig()
    assert cfg.mass == 1.75
    assert cfg.frame_stiffness == 176.75
    assert cfg.brace_stiffness == BRACE_K
    assert cfg.damping_ratio == 0.02
    assert cfg.dt == DT
    assert cfg.delay_steps == 28
    assert cfg.driver == "fe"
    model = cfg.build_model()
    assert model.period == pytest.approx(0.294, abs=1e-12)


def test_empty_file_is_baseline(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("# nothing but comments\n\n")
    assert load_config(p) == ExperimentConfig()


def test_parse_overrides_and_comments():
    cfg = parse_config_text(
        """
        mass = 2.0          # heavier story
        delay_steps = 14
        pace = yes
        duration = 5.0
        record = none
        scheme = "chang"
        """
    )
    assert cfg.mass == 2.0
    assert cfg.delay_steps == 14
    assert cfg.pace is True
    assert cfg.duration == 5.0
    assert cfg.record is None
    assert cfg.scheme == "chang"


def test_parse_unknown_key_line_numbered():
    with pytest.raises(ValueError, match="line 2: unknown config key 'massiveness'"):
        parse_config_text("mass = 2.0\nmassiveness = 3.0\n")


def test_parse_bad_value_line_numbered():
    with pytest.raises(ValueError, match="line 1: bad value for 'mass'"):
        parse_config_text("mass = heavy\n")
    with pytest.raises(ValueError, match="line 3: bad value for 'pace'"):
        parse_config_text("\n\npace = maybe\n")


def test_parse_missing_equals():
    with pytest.raises(ValueError, match="line 1: expected 'key = value'"):
        parse_config_text("just words\n")


def test_later_lines_win():
    cfg = parse_config_text("seed = 1\nseed = 7\n")
    assert cfg.seed == 7


def test_config_keys_cover_all_fields():
    assert set(CONFIG_KEYS) == set(ExperimentConfig.__dataclass_fields__)
    assert CONFIG_KEYS == tuple(sorted(CONFIG_KEYS))


def test_with_overrides_validates():
    cfg = ExperimentConfig()
    c2 = cfg.with_overrides(seed=5, duration=2.0)
    assert c2.seed == 5
    assert cfg.seed == 0   # original untouched
    with pytest.raises(ValueError, match="unknown config keys: turbo"):
        cfg.with_overrides(turbo=True)


def test_driver_validation():
    with pytest.raises(ValueError, match="driver must be"):
        ExperimentConfig(driver="wizard")


def test_angle_route_recomputes_global_stiffness():
    cfg = parse_config_text("brace_angle_deg = 45.0\nbrace_axial_stiffness = 1000\n")
    model = cfg.build_model()
    assert model.brace_stiffness == pytest.approx(500.0)
    # direct-route default ignores the informational axial value
    base = ExperimentConfig()
    assert base.build_model().brace_stiffness == DEFAULT_BRACE_STIFFNESS


def test_angle_requires_axial():
    with pytest.raises(ValueError, match="requires brace_axial_stiffness"):
        ExperimentConfig(brace_angle_deg=45.0, brace_axial_stiffness=None)


def test_builders(record_2048):
    cfg = ExperimentConfig()
    icfg = cfg.build_integrator()
    assert icfg.scheme is Scheme.CHANG
    assert icfg.dt == DT
    act = cfg.build_actuator()
    assert act.delay_steps == 28
    assert cfg.build_actuator(delay_steps=0).delay_steps == 0
    ats = cfg.build_ats()
    assert ats.window == 2048
    assert ats.update_period == 1024
    assert ats.initial_a1 == pytest.approx(28 * DT)
    # zero-delay configs still get a usable (floor-delay) compensator anchor
    assert cfg.build_ats(delay_steps=0).a1_max > 0.0
    tc = cfg.build_rnn_train_config()
    assert tc.hidden_size == 10
    assert tc.epochs == 200
    assert tc.seed == 0
    assert cfg.build_rnn_train_config(hidden_size=5, seed=3).seed == 3


def test_load_motion_bundled_resampled():
    cfg = ExperimentConfig()
    gm = cfg.load_motion()
    assert gm.dt == pytest.approx(DT)
    assert len(gm.accel) == 81921


def test_load_motion_custom_record(tmp_path):
    p = tmp_path / "rec.csv"
    p.write_text("1.0\n-1.0\n1.0\n-1.0\n1.0\n")
    cfg = ExperimentConfig(record=str(p), record_units="mm/s2", record_dt=DT)
    gm = cfg.load_motion()
    assert len(gm.accel) == 5
    assert gm.accel[0] == 1.0


def test_echo_round_trips_every_key():
    cfg = ExperimentConfig(seed=9, duration=1.5)
    echoed = cfg.echo()
    assert set(echoed) == set(CONFIG_KEYS)
    assert echoed["seed"] == 9
    assert echoed["duration"] == 1.5
