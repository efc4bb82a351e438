import json

import numpy as np
import pytest

from fepid import (ConfigError, ScenarioConfig, config_to_dict, dump_config,
                   parse_config)

from conftest import SCENARIO_DIR


class TestParse:
    def test_minimal_document_gets_defaults(self):
        cfg = parse_config('{"sim": {"duration": 1}}')
        assert cfg.duration == 1.0
        assert cfg.dt == 1e-3
        assert cfg.plant.a_p == -1.0
        assert cfg.model.p == 3
        assert cfg.controller.dy_da == (1.0, 1.0, 1.0)
        np.testing.assert_array_equal(cfg.precisions.pi_z, np.ones(3))
        # the normalised dump spells out every effective value
        doc = config_to_dict(cfg)
        assert doc["sim"]["dt"] == 1e-3
        assert doc["plant"]["kind"] == "first_order"
        assert doc["controller"]["precisions"]["log_pi_z"] == [0.0, 0.0, 0.0]
        assert doc["controller"]["model"]["alpha"] == 1.0
        assert doc["sensor"]["meas_noise"]["sigma"] == 0.0
        assert doc["disturbance"]["kind"] == "none"

    def test_negative_dt_names_field(self):
        with pytest.raises(ConfigError, match="sim.dt"):
            parse_config('{"sim": {"duration": 1, "dt": -1}}')

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            parse_config('{"simulation": {}}')
        with pytest.raises(ConfigError, match="plant"):
            parse_config('{"plant": {"a_q": 1.0}}')

    def test_parse_error_has_position(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config('{"sim": }')

    def test_constraint_errors_name_fields(self):
        bad = [
            ('{"controller": {"kappa_x": 0}}', "kappa_x"),
            ('{"controller": {"tau_ema": -2}}', "tau_ema"),
            ('{"sensor": {"meas_noise": {"sigma": -0.5}}}', "sigma"),
            ('{"disturbance": {"onset": -1}}', "onset"),
            ('{"setpoints": [[1.0, 0.0], [0.5, 1.0]]}', "setpoints"),
            ('{"controller": {"model": {"p": 9}}}', "p"),
            ('{"controller": {"precisions": {"pi_z": [1, 1]}}}', "length"),
        ]
        for text, needle in bad:
            with pytest.raises(ConfigError, match=needle):
                parse_config(text)

    def test_pi_and_log_pi_exclusive(self):
        with pytest.raises(ConfigError, match="not both"):
            parse_config('{"controller": {"precisions": '
                         '{"pi_z": [1, 1, 1], "log_pi_z": [0, 0, 0]}}}')

    def test_channel_off_via_zero_precision(self):
        cfg = parse_config('{"controller": {"precisions": {"pi_z": [0.0, 1.0, 1.0]}}}')
        assert cfg.precisions.pi_z[0] == 0.0
        assert cfg.precisions.log_pi_z[0] == -np.inf

    def test_depth_follows_model(self):
        cfg = parse_config('{"controller": {"model": {"p": 4}, '
                           '"precisions": {"pi_z": [1, 1, 1, 1], "pi_w": [1, 1, 1]}}}')
        assert cfg.model.p == 4
        assert cfg.precisions.p == 4
        assert len(cfg.controller.dy_da) == 4


class TestRoundTrip:
    def test_dump_parse_identity_on_bundled_scenarios(self):
        for path in sorted(SCENARIO_DIR.glob("*.json")):
            cfg = parse_config(path.read_text())
            again = parse_config(dump_config(cfg))
            assert again == cfg, path.name
            assert dump_config(again) == dump_config(cfg)

    def test_dump_parse_identity_on_random_configs(self, rng):
        for _ in range(50):
            cfg = random_config(rng)
            text = dump_config(cfg)
            again = parse_config(text)
            assert again == cfg
            assert dump_config(again) == text

    def test_channel_off_round_trips(self):
        cfg = parse_config('{"controller": {"precisions": {"pi_z": [0.0, 1.0, 2.0]}}}')
        again = parse_config(dump_config(cfg))
        assert again.precisions.log_pi_z[0] == -np.inf
        assert again == cfg


def random_config(rng) -> ScenarioConfig:
    """A random valid document, exercised through the parser itself."""
    p = int(rng.integers(1, 5))
    doc = {
        "plant": {
            "kind": str(rng.choice(["first_order", "second_order", "nonlinear_first_order"])),
            "a_p": float(rng.uniform(-2, -0.1)),
            "b_p": float(rng.uniform(0.5, 2)),
            "omega": float(rng.uniform(0.5, 3)),
            "zeta": float(rng.uniform(0, 1.5)),
            "b_nl": float(rng.uniform(-1, 1)),
            "process_noise": {"kind": "white", "sigma": float(rng.uniform(0, 0.1)),
                              "seed": int(rng.integers(0, 100))},
            "x0": [float(rng.uniform(-1, 1))],
        },
        "sensor": {
            "meas_noise": {"kind": str(rng.choice(["white", "coloured"])),
                           "sigma": float(rng.uniform(0, 0.2)),
                           "gamma": float(rng.uniform(0.01, 1.0)),
                           "seed": int(rng.integers(0, 100))},
        },
        "disturbance": {
            "kind": str(rng.choice(["none", "step", "ramp", "polynomial"])),
            "amplitude": float(rng.uniform(-2, 2)),
            "onset": float(rng.uniform(0, 5)),
            "slope": float(rng.uniform(-1, 1)),
            "coefficients": [float(c) for c in rng.uniform(-1, 1, rng.integers(0, 3))],
        },
        "setpoints": [[0.0, float(rng.uniform(-1, 1))],
                      [float(rng.uniform(1, 5)), float(rng.uniform(-1, 1))]],
        "controller": {
            "kappa_x": float(rng.uniform(0.1, 10)),
            "kappa_a": float(rng.uniform(0.1, 10)),
            "kappa_pi": 0.0,
            "tau_ema": float(rng.uniform(0.5, 10)),
            "dy_da": [float(v) for v in rng.uniform(0, 1, p)],
            "clamp_expectations": bool(rng.integers(0, 2)),
            "u_max": None if rng.integers(0, 2) else float(rng.uniform(0.5, 5)),
            "learn_precisions": False,
            "model": {"alpha": float(rng.uniform(0.2, 4)),
                      "obs_gain": float(rng.uniform(0.5, 2)), "p": p},
            "precisions": {
                "pi_z": [float(v) for v in rng.uniform(0.1, 5, p)],
                "pi_w": [float(v) for v in rng.uniform(0.1, 5, p - 1)],
                "hyper_weight_z": [float(v) for v in rng.uniform(0, 2, p)],
                "hyper_weight_w": [float(v) for v in rng.uniform(0, 2, p - 1)],
                "hyper_target_z": [float(v) for v in rng.uniform(0.5, 3, p)],
                "hyper_target_w": [float(v) for v in rng.uniform(0.5, 3, p - 1)],
            },
        },
        "sim": {"duration": float(rng.uniform(1, 10)), "dt": 0.01,
                "seed": int(rng.integers(0, 1000)), "record_stride": int(rng.integers(1, 5))},
    }
    return parse_config(json.dumps(doc))
