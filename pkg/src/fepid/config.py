"""JSON scenario configuration: parsing, validation, normalised dump.

A scenario document has six optional top-level sections (plant, sensor,
disturbance, setpoints, controller, sim); every omitted field takes its
default, unknown keys are rejected, and ``dump_config`` echoes back a
normalised document in which every effective value is explicit.  Floats
are serialised with 17 significant digits so parse(dump(cfg)) == cfg.

Precisions may be given either as "log_pi_*" (canonical, emitted by the
dump) or as "pi_*" in natural units; hyperprior weights and targets ride
along in the controller.precisions block.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .controller import ControllerConfig
from .gencoords import GeneralisedSignal, MAX_DEPTH, NoiseSpec
from .genmodel import GenerativeModel, PrecisionState
from .plant import (DisturbanceSpec, PlantSpec, SensorSpec, VolatilityRamp)
from .simloop import ScenarioConfig


class ConfigError(ValueError):
    """Invalid scenario document; the message names the offending field."""


_NOISE_KEYS = {"kind", "sigma", "gamma", "seed"}
_PLANT_KEYS = {"kind", "a_p", "b_p", "c_p", "omega", "zeta", "b_nl", "process_noise", "x0"}
_SENSOR_KEYS = {"meas_noise", "volatility"}
_VOL_KEYS = {"start_sigma", "end_sigma", "t_start", "t_end"}
_DIST_KEYS = {"kind", "amplitude", "onset", "slope", "coefficients"}
_CTRL_KEYS = {"kappa_x", "kappa_a", "kappa_pi", "tau_ema", "dy_da", "clamp_expectations",
              "u_max", "learn_precisions", "model", "precisions"}
_MODEL_KEYS = {"alpha", "obs_gain", "p"}
_PREC_KEYS = {"pi_z", "pi_w", "log_pi_z", "log_pi_w", "hyper_weight_z", "hyper_weight_w",
              "hyper_target_z", "hyper_target_w"}
_SIM_KEYS = {"duration", "dt", "seed", "record_stride"}
_TOP_KEYS = {"plant", "sensor", "disturbance", "setpoints", "controller", "sim"}


def _require_mapping(obj: Any, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    return obj


def _reject_unknown(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")


def _number(section: dict, key: str, default: float, where: str,
            minimum: float | None = None, strict: bool = False,
            maximum: float | None = None) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number")
    value = float(value)
    if minimum is not None and (value <= minimum if strict else value < minimum):
        op = ">" if strict else ">="
        raise ConfigError(f"{where}.{key}: must be {op} {minimum}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{where}.{key}: must be <= {maximum}")
    return value


def _integer(section: dict, key: str, default: int, where: str, minimum: int = 0) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key}: expected an integer")
    if value < minimum:
        raise ConfigError(f"{where}.{key}: must be >= {minimum}")
    return value


def _boolean(section: dict, key: str, default: bool, where: str) -> bool:
    value = section.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{where}.{key}: expected a boolean")
    return value


def _vector(section: dict, key: str, default: list, where: str, length: int | None = None):
    value = section.get(key, default)
    if not isinstance(value, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise ConfigError(f"{where}.{key}: expected a list of numbers")
    if length is not None and len(value) != length:
        raise ConfigError(f"{where}.{key}: expected length {length}, got {len(value)}")
    return [float(v) for v in value]


def _noise(section: dict | None, where: str) -> NoiseSpec:
    section = _require_mapping(section if section is not None else {}, where)
    _reject_unknown(section, _NOISE_KEYS, where)
    kind = section.get("kind", "white")
    if kind not in ("white", "coloured"):
        raise ConfigError(f"{where}.kind: must be 'white' or 'coloured'")
    return NoiseSpec(
        kind=kind,
        sigma=_number(section, "sigma", 0.0, where, minimum=0.0),
        gamma=_number(section, "gamma", 0.1, where, minimum=0.0, strict=True),
        seed=_integer(section, "seed", 0, where),
    )


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document, applying defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    doc = _require_mapping(doc, "document")
    _reject_unknown(doc, _TOP_KEYS, "document")

    sim = _require_mapping(doc.get("sim", {}), "sim")
    _reject_unknown(sim, _SIM_KEYS, "sim")
    duration = _number(sim, "duration", 60.0, "sim", minimum=0.0, strict=True)
    dt = _number(sim, "dt", 1e-3, "sim", minimum=0.0, strict=True)
    if dt > duration:
        raise ConfigError("sim.dt: must be <= sim.duration")
    seed = _integer(sim, "seed", 0, "sim")
    record_stride = _integer(sim, "record_stride", 1, "sim", minimum=1)

    plant_sec = _require_mapping(doc.get("plant", {}), "plant")
    _reject_unknown(plant_sec, _PLANT_KEYS, "plant")
    plant_kind = plant_sec.get("kind", "first_order")
    if plant_kind not in ("first_order", "second_order", "nonlinear_first_order"):
        raise ConfigError("plant.kind: must be one of first_order, second_order, "
                          "nonlinear_first_order")
    x0 = plant_sec.get("x0", [0.0])
    if isinstance(x0, (int, float)) and not isinstance(x0, bool):
        x0 = [float(x0)]
    x0 = _vector({"x0": x0}, "x0", [0.0], "plant")
    try:
        plant = PlantSpec(
            kind=plant_kind,
            a_p=_number(plant_sec, "a_p", -1.0, "plant"),
            b_p=_number(plant_sec, "b_p", 1.0, "plant"),
            c_p=_number(plant_sec, "c_p", 1.0, "plant"),
            omega=_number(plant_sec, "omega", 1.0, "plant"),
            zeta=_number(plant_sec, "zeta", 0.7, "plant"),
            b_nl=_number(plant_sec, "b_nl", 0.0, "plant"),
            process_noise=_noise(plant_sec.get("process_noise"), "plant.process_noise"),
            x0=tuple(x0),
        )
    except ValueError as exc:
        raise ConfigError(f"plant: {exc}") from None

    sensor_sec = _require_mapping(doc.get("sensor", {}), "sensor")
    _reject_unknown(sensor_sec, _SENSOR_KEYS, "sensor")
    volatility = None
    if sensor_sec.get("volatility") is not None:
        vol = _require_mapping(sensor_sec["volatility"], "sensor.volatility")
        _reject_unknown(vol, _VOL_KEYS, "sensor.volatility")
        try:
            volatility = VolatilityRamp(
                start_sigma=_number(vol, "start_sigma", 0.0, "sensor.volatility", minimum=0.0),
                end_sigma=_number(vol, "end_sigma", 0.0, "sensor.volatility", minimum=0.0),
                t_start=_number(vol, "t_start", 0.0, "sensor.volatility", minimum=0.0),
                t_end=_number(vol, "t_end", 0.0, "sensor.volatility", minimum=0.0),
            )
        except ValueError as exc:
            raise ConfigError(f"sensor.volatility: {exc}") from None
    sensor = SensorSpec(meas_noise=_noise(sensor_sec.get("meas_noise"), "sensor.meas_noise"),
                        volatility=volatility)

    dist_sec = _require_mapping(doc.get("disturbance", {}), "disturbance")
    _reject_unknown(dist_sec, _DIST_KEYS, "disturbance")
    dist_kind = dist_sec.get("kind", "none")
    if dist_kind not in ("none", "step", "ramp", "polynomial"):
        raise ConfigError("disturbance.kind: must be one of none, step, ramp, polynomial")
    try:
        disturbance = DisturbanceSpec(
            kind=dist_kind,
            amplitude=_number(dist_sec, "amplitude", 0.0, "disturbance"),
            onset=_number(dist_sec, "onset", 0.0, "disturbance", minimum=0.0),
            slope=_number(dist_sec, "slope", 0.0, "disturbance"),
            coefficients=tuple(_vector(dist_sec, "coefficients", [], "disturbance")),
        )
    except ValueError as exc:
        raise ConfigError(f"disturbance: {exc}") from None

    setpoints = doc.get("setpoints", [[0.0, 0.0]])
    if not isinstance(setpoints, list) or not setpoints:
        raise ConfigError("setpoints: expected a non-empty list of [time, value] pairs")
    pairs = []
    for i, pair in enumerate(setpoints):
        if (not isinstance(pair, list) or len(pair) != 2 or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in pair)):
            raise ConfigError(f"setpoints[{i}]: expected a [time, value] pair of numbers")
        pairs.append((float(pair[0]), float(pair[1])))
    if any(b[0] < a[0] for a, b in zip(pairs, pairs[1:])):
        raise ConfigError("setpoints: times must be non-decreasing")

    ctrl_sec = _require_mapping(doc.get("controller", {}), "controller")
    _reject_unknown(ctrl_sec, _CTRL_KEYS, "controller")
    model_sec = _require_mapping(ctrl_sec.get("model", {}), "controller.model")
    _reject_unknown(model_sec, _MODEL_KEYS, "controller.model")
    p = _integer(model_sec, "p", 3, "controller.model", minimum=1)
    if p > MAX_DEPTH:
        raise ConfigError(f"controller.model.p: must be <= {MAX_DEPTH}")
    try:
        model = GenerativeModel(
            alpha=_number(model_sec, "alpha", 1.0, "controller.model", minimum=0.0, strict=True),
            obs_gain=_number(model_sec, "obs_gain", 1.0, "controller.model"),
            setpoint=GeneralisedSignal.from_value(pairs[0][1], p),
            p=p,
        )
    except ValueError as exc:
        raise ConfigError(f"controller.model: {exc}") from None

    prec_sec = _require_mapping(ctrl_sec.get("precisions", {}), "controller.precisions")
    _reject_unknown(prec_sec, _PREC_KEYS, "controller.precisions")
    for nat, canon in (("pi_z", "log_pi_z"), ("pi_w", "log_pi_w")):
        if nat in prec_sec and canon in prec_sec:
            raise ConfigError(f"controller.precisions: give {nat} or {canon}, not both")

    def _log_precisions(channel: str, size: int) -> list[float]:
        canon = "log_" + channel
        if canon in prec_sec:
            # null entries mean -inf: the explicit "channel off" value
            raw = prec_sec[canon]
            if not isinstance(raw, list) or len(raw) != size or any(
                    isinstance(v, bool) or not isinstance(v, (int, float, type(None)))
                    for v in raw):
                raise ConfigError(f"controller.precisions.{canon}: expected {size} "
                                  "numbers (null = channel off)")
            return [float("-inf") if v is None else float(v) for v in raw]
        pi = _vector(prec_sec, channel, [1.0] * size, "controller.precisions", length=size)
        if any(v < 0 for v in pi):
            raise ConfigError(f"controller.precisions.{channel}: must be >= 0")
        with np.errstate(divide="ignore"):
            return list(np.log(pi))

    log_pi_z = _log_precisions("pi_z", p)
    log_pi_w = _log_precisions("pi_w", p - 1)
    try:
        precisions = PrecisionState(
            log_pi_z=np.array(log_pi_z),
            log_pi_w=np.array(log_pi_w),
            hyper_weight_z=np.array(_vector(prec_sec, "hyper_weight_z", [0.0] * p,
                                            "controller.precisions", length=p)),
            hyper_weight_w=np.array(_vector(prec_sec, "hyper_weight_w", [0.0] * (p - 1),
                                            "controller.precisions", length=p - 1)),
            hyper_target_z=np.array(_vector(prec_sec, "hyper_target_z", [1.0] * p,
                                            "controller.precisions", length=p)),
            hyper_target_w=np.array(_vector(prec_sec, "hyper_target_w", [1.0] * (p - 1),
                                            "controller.precisions", length=p - 1)),
        )
    except ValueError as exc:
        raise ConfigError(f"controller.precisions: {exc}") from None

    u_max = ctrl_sec.get("u_max", None)
    if u_max is not None:
        u_max = _number(ctrl_sec, "u_max", 0.0, "controller", minimum=0.0, strict=True)
    try:
        controller = ControllerConfig(
            kappa_x=_number(ctrl_sec, "kappa_x", 1.0, "controller", minimum=0.0, strict=True),
            kappa_a=_number(ctrl_sec, "kappa_a", 1.0, "controller", minimum=0.0, strict=True),
            kappa_pi=_number(ctrl_sec, "kappa_pi", 0.0, "controller", minimum=0.0),
            tau_ema=_number(ctrl_sec, "tau_ema", 5.0, "controller", minimum=0.0, strict=True),
            dy_da=tuple(_vector(ctrl_sec, "dy_da", [1.0] * p, "controller", length=p)),
            clamp_expectations=_boolean(ctrl_sec, "clamp_expectations", False, "controller"),
            u_max=u_max,
            learn_precisions=_boolean(ctrl_sec, "learn_precisions", False, "controller"),
        )
    except ValueError as exc:
        raise ConfigError(f"controller: {exc}") from None

    try:
        return ScenarioConfig(
            plant=plant, sensor=sensor, disturbance=disturbance,
            setpoints=tuple(pairs), controller=controller, model=model,
            precisions=precisions, duration=duration, dt=dt, seed=seed,
            record_stride=record_stride,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _f(x: float):
    """Floats serialised via repr-exact decimal; ints stay ints."""
    if math.isinf(x) or math.isnan(x):
        return None
    return float(f"{x:.17g}")


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Normalised document with every effective value explicit."""
    noise = lambda ns: {"kind": ns.kind.value, "sigma": _f(ns.sigma),
                        "gamma": _f(ns.gamma), "seed": ns.seed}
    doc = {
        "plant": {
            "kind": cfg.plant.kind.value,
            "a_p": _f(cfg.plant.a_p), "b_p": _f(cfg.plant.b_p), "c_p": _f(cfg.plant.c_p),
            "omega": _f(cfg.plant.omega), "zeta": _f(cfg.plant.zeta),
            "b_nl": _f(cfg.plant.b_nl),
            "process_noise": noise(cfg.plant.process_noise),
            "x0": [_f(v) for v in cfg.plant.x0],
        },
        "sensor": {
            "meas_noise": noise(cfg.sensor.meas_noise),
            "volatility": None if cfg.sensor.volatility is None else {
                "start_sigma": _f(cfg.sensor.volatility.start_sigma),
                "end_sigma": _f(cfg.sensor.volatility.end_sigma),
                "t_start": _f(cfg.sensor.volatility.t_start),
                "t_end": _f(cfg.sensor.volatility.t_end),
            },
        },
        "disturbance": {
            "kind": cfg.disturbance.kind.value,
            "amplitude": _f(cfg.disturbance.amplitude),
            "onset": _f(cfg.disturbance.onset),
            "slope": _f(cfg.disturbance.slope),
            "coefficients": [_f(c) for c in cfg.disturbance.coefficients],
        },
        "setpoints": [[_f(t), _f(v)] for t, v in cfg.setpoints],
        "controller": {
            "kappa_x": _f(cfg.controller.kappa_x),
            "kappa_a": _f(cfg.controller.kappa_a),
            "kappa_pi": _f(cfg.controller.kappa_pi),
            "tau_ema": _f(cfg.controller.tau_ema),
            "dy_da": [_f(v) for v in cfg.controller.dy_da],
            "clamp_expectations": cfg.controller.clamp_expectations,
            "u_max": None if cfg.controller.u_max is None else _f(cfg.controller.u_max),
            "learn_precisions": cfg.controller.learn_precisions,
            "model": {"alpha": _f(cfg.model.alpha), "obs_gain": _f(cfg.model.obs_gain),
                      "p": cfg.model.p},
            "precisions": {
                "log_pi_z": [_f(v) for v in cfg.precisions.log_pi_z],
                "log_pi_w": [_f(v) for v in cfg.precisions.log_pi_w],
                "hyper_weight_z": [_f(v) for v in cfg.precisions.hyper_weight_z],
                "hyper_weight_w": [_f(v) for v in cfg.precisions.hyper_weight_w],
                "hyper_target_z": [_f(v) for v in cfg.precisions.hyper_target_z],
                "hyper_target_w": [_f(v) for v in cfg.precisions.hyper_target_w],
            },
        },
        "sim": {"duration": _f(cfg.duration), "dt": _f(cfg.dt), "seed": cfg.seed,
                "record_stride": cfg.record_stride},
    }
    return doc


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2)
