"""Active-inference controller dynamics and the classical PID oracle.

Three coupled flows descend the same functional on separated time scales:
fast recognition of hidden-state expectations, fast action, and slow
precision learning driven by exponentially smoothed squared errors.  In
clamp mode the expectations are pinned to the set-trajectory, which reduces
the action law to a classical PID controller whose gains are kappa_a times
the observation precisions: ki = kappa_a*pi_z[0], kp = kappa_a*pi_z[1],
kd = kappa_a*pi_z[2].

``pid_step`` is the independent oracle used to validate that limit; it is a
plain discrete positional PID and shares no code with the gradient path.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .gencoords import GeneralisedSignal, shift
from .genmodel import (GenerativeModel, PrecisionState, grad_action_from_errors,
                       grad_log_precisions, grad_mu_x_from_errors,
                       prediction_errors)


class IntegrationDivergedError(RuntimeError):
    """A controller state field became non-finite during integration."""

    def __init__(self, t: float, field_name: str):
        super().__init__(f"controller integration diverged at t={t:.6g} ({field_name} non-finite)")
        self.t = t
        self.field = field_name


def _default_dy_da(p: int = 3) -> tuple[float, ...]:
    return (1.0,) * p


@dataclass(frozen=True)
class ControllerConfig:
    """Learning rates and modes of the controller.

    Precision learning must be much slower than recognition; this is
    enforced as kappa_pi <= kappa_x / 100 whenever both are active.  dy_da
    is the assumed sensitivity of each observation order to the action; the
    all-ones default is the choice under which the clamp-mode action law
    reduces exactly to textbook PID with the gain mapping above.
    """

    kappa_x: float = 1.0            # recognition learning rate [1/s]
    kappa_a: float = 1.0            # action learning rate [1/s]
    kappa_pi: float = 0.0           # precision learning rate [1/s]
    tau_ema: float = 5.0            # squared-error smoothing time constant [s]
    dy_da: tuple[float, ...] = field(default_factory=_default_dy_da)
    clamp_expectations: bool = False    # pin mu_x to the set-trajectory (PID limit)
    u_max: Optional[float] = None       # action saturation bound, None = unbounded
    learn_precisions: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dy_da", tuple(float(v) for v in self.dy_da))
        object.__setattr__(self, "_dy_da_arr", np.array(self.dy_da))
        if self.kappa_x <= 0 or self.kappa_a <= 0:
            raise ValueError("kappa_x and kappa_a must be > 0")
        if self.kappa_pi < 0:
            raise ValueError("kappa_pi must be >= 0")
        if self.tau_ema <= 0:
            raise ValueError("tau_ema must be > 0")
        if self.u_max is not None and self.u_max <= 0:
            raise ValueError("u_max must be > 0 when set")
        if self.learn_precisions and self.kappa_pi > 0 and self.kappa_pi > self.kappa_x / 100.0:
            raise ValueError("precision learning requires kappa_pi <= kappa_x / 100")


@dataclass(frozen=True, eq=False)
class ControllerState:
    """Value-typed controller state; stepping returns a new instance."""

    mu_x: GeneralisedSignal
    action: float
    pr: PrecisionState
    ema_sq_z: np.ndarray        # smoothed squared observation errors, length p
    ema_sq_w: np.ndarray        # smoothed squared dynamics errors, length p-1
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "ema_sq_z", np.atleast_1d(np.asarray(self.ema_sq_z, dtype=float)))
        object.__setattr__(self, "ema_sq_w", np.atleast_1d(np.asarray(self.ema_sq_w, dtype=float)))

    @staticmethod
    def initial(m: GenerativeModel, pr: PrecisionState) -> "ControllerState":
        """Start at the prior: expectations on the set-trajectory, no action.

        Smoothed squared errors start at 1/pi (the value each precision
        currently implies) so precision learning starts from a neutral
        gradient rather than an artificial transient.
        """
        with np.errstate(divide="ignore", over="ignore"):
            ema_z = np.where(np.isfinite(pr.log_pi_z), np.exp(-pr.log_pi_z), 0.0)
            ema_w = np.where(np.isfinite(pr.log_pi_w), np.exp(-pr.log_pi_w), 0.0)
        return ControllerState(
            mu_x=GeneralisedSignal(m.setpoint.orders.copy()),
            action=0.0, pr=pr, ema_sq_z=ema_z, ema_sq_w=ema_w, t=0.0,
        )


def step_fast(s: ControllerState, cfg: ControllerConfig, m: GenerativeModel,
              y: GeneralisedSignal, dt: float) -> ControllerState:
    """One Euler step of recognition and action.

    Expectations follow d(mu_x)/dt = D mu_x - kappa_x * dF/dmu_x (or are
    copied from the set-trajectory in clamp mode); action descends the
    observation term through dy_da.  With saturation configured the action
    is clipped to [-u_max, u_max], which also halts integral-like windup:
    an outward gradient leaves a saturated action on the bound.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if cfg.clamp_expectations:
        mu_used = GeneralisedSignal(m.setpoint.orders.copy())
        new_mu = mu_used
        eps_z, eps_w = prediction_errors(m, y, mu_used)
    else:
        mu_used = s.mu_x
        eps_z, eps_w = prediction_errors(m, y, mu_used)
        flow = (shift(s.mu_x).orders
                - cfg.kappa_x * grad_mu_x_from_errors(m, s.pr, eps_z, eps_w))
        new_mu = GeneralisedSignal(s.mu_x.orders + dt * flow)

    dFda = grad_action_from_errors(s.pr, eps_z, cfg._dy_da_arr)
    new_action = s.action - dt * cfg.kappa_a * dFda
    if cfg.u_max is not None:
        new_action = float(np.clip(new_action, -cfg.u_max, cfg.u_max))

    beta = dt / cfg.tau_ema
    new_ema_z = s.ema_sq_z + beta * (eps_z**2 - s.ema_sq_z)
    new_ema_w = s.ema_sq_w + beta * (eps_w**2 - s.ema_sq_w)

    t = s.t + dt
    if not np.isfinite(new_mu.orders).all():
        raise IntegrationDivergedError(t, "mu_x")
    if not np.isfinite(new_action):
        raise IntegrationDivergedError(t, "action")
    if not (np.isfinite(new_ema_z).all() and np.isfinite(new_ema_w).all()):
        raise IntegrationDivergedError(t, "ema_sq")

    return ControllerState(mu_x=new_mu, action=new_action, pr=s.pr,
                           ema_sq_z=new_ema_z, ema_sq_w=new_ema_w, t=t)


def step_slow(s: ControllerState, cfg: ControllerConfig, m: GenerativeModel,
              dt: float) -> ControllerState:
    """One Euler step of precision learning on the smoothed squared errors."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if not cfg.learn_precisions or cfg.kappa_pi == 0.0:
        return s
    if not (np.isfinite(s.pr.log_pi_z).all() and np.isfinite(s.pr.log_pi_w).all()):
        raise IntegrationDivergedError(s.t, "log_pi")
    g_z, g_w = grad_log_precisions(s.pr, s.ema_sq_z, s.ema_sq_w)
    new_pr = replace(
        s.pr,
        log_pi_z=s.pr.log_pi_z - dt * cfg.kappa_pi * g_z,
        log_pi_w=s.pr.log_pi_w - dt * cfg.kappa_pi * g_w,
    )
    if not (np.isfinite(new_pr.log_pi_z).all() and np.isfinite(new_pr.log_pi_w).all()):
        raise IntegrationDivergedError(s.t, "log_pi")
    return replace(s, pr=new_pr)


def gains_from_precisions(pr: PrecisionState, kappa_a: float = 1.0) -> tuple[float, float, float]:
    """Map observation precisions to PID gains: (ki, kp, kd) = kappa_a * pi_z[0:3].

    Orders beyond the embedding depth contribute no gain (returned as 0);
    depth must be at least 1.
    """
    if pr.p < 1:
        raise ValueError("precision depth must be >= 1")
    pi_z = pr.pi_z
    gains = [kappa_a * float(pi_z[i]) if i < pr.p else 0.0 for i in range(3)]
    return gains[0], gains[1], gains[2]


def precisions_from_gains(ki: float, kp: float, kd: float, kappa_a: float = 1.0,
                          **kwargs) -> PrecisionState:
    """Inverse of the gain mapping, for configuring scenarios by gains."""
    pi_z = np.array([ki, kp, kd], dtype=float) / kappa_a
    pi_w = kwargs.pop("pi_w", np.ones(2))
    return PrecisionState.from_precisions(pi_z, pi_w, **kwargs)


@dataclass
class PidState:
    """Classical discrete PID controller state.

    The derivative is a backward difference passed through a first-order
    filter whose smoothing factor is 1/n_filt per sample (time constant
    n_filt * dt), taming sample-scale noise amplification.  n_filt = None
    uses the raw difference.
    """

    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    integral: float = 0.0
    prev_error: float = 0.0
    d_filt: float = 0.0
    n_filt: Optional[float] = 10.0
    u_max: Optional[float] = None

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0 or self.kd < 0:
            raise ValueError("gains must be >= 0")


def pid_step(ps: PidState, error: float, dt: float) -> tuple[PidState, float]:
    """One tick of the classical controller; returns (new state, output)."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    integral = ps.integral + error * dt
    raw = (error - ps.prev_error) / dt
    if ps.n_filt is None:
        d_filt = raw
    else:
        d_filt = ps.d_filt + (raw - ps.d_filt) / ps.n_filt
    u = ps.kp * error + ps.ki * integral + ps.kd * d_filt
    if ps.u_max is not None:
        u = float(np.clip(u, -ps.u_max, ps.u_max))
    new = replace(ps, integral=integral, prev_error=error, d_filt=d_filt)
    return new, u
