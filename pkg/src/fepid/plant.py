"""Ground-truth plants, disturbances and sensors.

These are deliberately distinct from the controller's generative model:
mismatch between the two (different rates, a second-order or saturating
plant against the controller's fixed linear model) is itself a scenario
family.  Integration is explicit Euler-Maruyama at the global simulation
step; disturbances enter additively at the plant input (load disturbances).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .gencoords import NoiseSpec


class PlantDivergedError(RuntimeError):
    """Plant state became non-finite during integration."""

    def __init__(self, t: float):
        super().__init__(f"plant state diverged at t={t:.6g}")
        self.t = t


class PlantKind(str, Enum):
    FIRST_ORDER = "first_order"
    SECOND_ORDER = "second_order"
    NONLINEAR_FIRST_ORDER = "nonlinear_first_order"


@dataclass(frozen=True)
class PlantSpec:
    """Continuous-time plant parameters.

    first_order:            dx = (a_p x + b_p (u + d) + w) dt
    second_order:           two-state damped oscillator, natural frequency
                            omega and damping zeta, forced by b_p (u + d) + w
    nonlinear_first_order:  first_order with b_nl * tanh(x) added to the drift

    The output is c_p * x (first state).  a_p < 0 gives a stable first-order
    plant; instability is not rejected, it is a valid test case.
    """

    kind: PlantKind = PlantKind.FIRST_ORDER
    a_p: float = -1.0           # state rate [1/s]
    b_p: float = 1.0            # input gain
    c_p: float = 1.0            # output gain
    omega: float = 1.0          # natural frequency [rad/s], second_order only
    zeta: float = 0.7           # damping ratio, second_order only
    b_nl: float = 0.0           # nonlinearity strength, nonlinear only
    process_noise: NoiseSpec = field(default_factory=NoiseSpec)
    x0: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "kind", PlantKind(self.kind))
        if isinstance(self.x0, (int, float)):
            object.__setattr__(self, "x0", (float(self.x0),))
        else:
            object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if self.kind == PlantKind.SECOND_ORDER:
            if self.omega <= 0:
                raise ValueError("omega must be > 0 for second_order")
            if self.zeta < 0:
                raise ValueError("zeta must be >= 0")

    @property
    def n_states(self) -> int:
        return 2 if self.kind == PlantKind.SECOND_ORDER else 1

    def initial_state(self) -> np.ndarray:
        x = np.zeros(self.n_states)
        x[: len(self.x0)] = self.x0[: self.n_states]
        return x


def plant_step(state: np.ndarray, spec: PlantSpec, u: float, d: float, w: float,
               dt: float, t: float = 0.0) -> np.ndarray:
    """Advance the plant one Euler step under control u, disturbance d, noise w."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    forcing = spec.b_p * (u + d) + w
    if spec.kind == PlantKind.SECOND_ORDER:
        x, xdot = state
        new = np.array([
            x + dt * xdot,
            xdot + dt * (-2.0 * spec.zeta * spec.omega * xdot - spec.omega**2 * x + forcing),
        ])
    else:
        drift = spec.a_p * state[0] + forcing
        if spec.kind == PlantKind.NONLINEAR_FIRST_ORDER:
            drift += spec.b_nl * np.tanh(state[0])
        new = np.array([state[0] + dt * drift])
    if not np.isfinite(new).all():
        raise PlantDivergedError(t + dt)
    return new


def plant_output(state: np.ndarray, spec: PlantSpec) -> float:
    """Noiseless plant output c_p * x."""
    return spec.c_p * float(state[0])


class DisturbanceKind(str, Enum):
    NONE = "none"
    STEP = "step"
    RAMP = "ramp"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class DisturbanceSpec:
    """Input-side (load) disturbance profile."""

    kind: DisturbanceKind = DisturbanceKind.NONE
    amplitude: float = 0.0      # step height [input units]
    onset: float = 0.0          # start time [s]
    slope: float = 0.0          # ramp rate [input units / s]
    coefficients: tuple[float, ...] = ()    # polynomial in (t - onset)

    def __post_init__(self):
        object.__setattr__(self, "kind", DisturbanceKind(self.kind))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.onset < 0:
            raise ValueError("onset must be >= 0")


def disturbance_at(spec: DisturbanceSpec, t: float) -> float:
    """Disturbance value at time t (onset-inclusive)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if spec.kind == DisturbanceKind.NONE:
        return 0.0
    tau = t - spec.onset
    if spec.kind == DisturbanceKind.STEP:
        return spec.amplitude if tau >= 0 else 0.0
    if tau <= 0:
        return 0.0
    if spec.kind == DisturbanceKind.RAMP:
        return spec.slope * tau
    return float(sum(c * tau**i for i, c in enumerate(spec.coefficients)))


@dataclass(frozen=True)
class VolatilityRamp:
    """Linear ramp of the measurement noise std over [t_start, t_end]."""

    start_sigma: float
    end_sigma: float
    t_start: float
    t_end: float

    def __post_init__(self):
        if self.start_sigma < 0 or self.end_sigma < 0:
            raise ValueError("sigmas must be >= 0")
        if self.t_end < self.t_start:
            raise ValueError("t_end must be >= t_start")

    def sigma_at(self, t: float) -> float:
        if t <= self.t_start:
            return self.start_sigma
        if t >= self.t_end or self.t_end == self.t_start:
            return self.end_sigma
        frac = (t - self.t_start) / (self.t_end - self.t_start)
        return self.start_sigma + frac * (self.end_sigma - self.start_sigma)


@dataclass(frozen=True)
class SensorSpec:
    """Measurement noise model, optionally with time-varying std.

    When a volatility ramp is present it rescales the (unit-std) noise path
    sample by sample; otherwise meas_noise.sigma applies throughout.  Unlike
    process noise, measurement samples carry std sigma directly: they model
    sensor accuracy, not an integrated noise density.
    """

    meas_noise: NoiseSpec = field(default_factory=NoiseSpec)
    volatility: Optional[VolatilityRamp] = None

    def sigma_at(self, t: float) -> float:
        if self.volatility is not None:
            return self.volatility.sigma_at(t)
        return self.meas_noise.sigma


def measure(x_out: float, sensor: SensorSpec, t: float, unit_noise: float) -> float:
    """Sensor reading: plant output plus unit_noise scaled to the current std.

    ``unit_noise`` is one sample of a unit-std noise path (white or
    coloured) drawn ahead of time by the simulation loop, which keeps the
    path deterministic and lets coloured noise keep its correlation
    structure under a volatility ramp.
    """
    return x_out + sensor.sigma_at(t) * unit_noise
