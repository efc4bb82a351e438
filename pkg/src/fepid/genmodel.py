"""The controller's generative model and its free-energy functional.

The model is linear: observations g(x) = obs_gain * x per order, and prior
dynamics f(x, v) = alpha * (v - x) pulling each order of the hidden state
toward the set-trajectory.  The cost functional is a sum of
precision-weighted squared prediction errors on two channels (observation
and dynamics), optional -log precision terms, and quadratic (Tikhonov)
penalties tying each precision to a hyperprior target.

Two structural facts used throughout: the observation term depends only on
observation precisions and the dynamics term only on dynamics precisions
(this is the two-degree-of-freedom property), and the dynamics channel has
p-1 entries because the top embedding order has no modelled successor.

All gradients are exact analytic derivatives of ``free_energy``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gencoords import DEFAULT_DEPTH, GeneralisedSignal

# Hyperprior targets pass through h before entering the penalty; identity by
# default, replaceable with any monotone map.
HyperMap = Callable[[np.ndarray], np.ndarray]


def _identity(x: np.ndarray) -> np.ndarray:
    return x


@dataclass(frozen=True, eq=False)
class GenerativeModel:
    """Linear generative model with a set-trajectory prior."""

    alpha: float = 1.0                      # prior-dynamics rate [1/s], > 0
    obs_gain: float = 1.0                   # observation map coefficient
    setpoint: GeneralisedSignal | None = None   # defaults to zeros at depth p
    p: int = DEFAULT_DEPTH

    def __post_init__(self):
        if self.setpoint is None:
            object.__setattr__(self, "setpoint", GeneralisedSignal.zeros(self.p))
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.setpoint.p != self.p:
            raise ValueError(f"setpoint depth {self.setpoint.p} != model depth {self.p}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, GenerativeModel):
            return NotImplemented
        return (self.alpha == other.alpha and self.obs_gain == other.obs_gain
                and self.p == other.p and self.setpoint == other.setpoint)


@dataclass(frozen=True, eq=False)
class PrecisionState:
    """Expected log-precisions per order, with their hyperprior targets.

    Observation-channel arrays have length p, dynamics-channel arrays p-1.
    Precisions live in log space so positivity is structural rather than
    clipped; -inf is permitted as the explicit "channel off" value (zero
    precision), but precision learning requires finite entries.
    """

    log_pi_z: np.ndarray                    # log expected observation precisions, length p
    log_pi_w: np.ndarray                    # log expected dynamics precisions, length p-1
    hyper_weight_z: np.ndarray | None = None    # per-order penalty weights >= 0
    hyper_weight_w: np.ndarray | None = None
    hyper_target_z: np.ndarray | None = None    # per-order targets > 0 [precision units]
    hyper_target_w: np.ndarray | None = None

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.log_pi_z, dtype=float))
        w = np.atleast_1d(np.asarray(self.log_pi_w, dtype=float))
        if w.size != z.size - 1:
            raise ValueError(f"log_pi_w must have length p-1 = {z.size - 1}, got {w.size}")
        object.__setattr__(self, "log_pi_z", z)
        object.__setattr__(self, "log_pi_w", w)

        def _check(name, value, size, default):
            if value is None:
                value = np.full(size, default, dtype=float)
            else:
                value = np.atleast_1d(np.asarray(value, dtype=float))
                if value.size != size:
                    raise ValueError(f"{name} must have length {size}, got {value.size}")
            object.__setattr__(self, name, value)
            return value

        wz = _check("hyper_weight_z", self.hyper_weight_z, z.size, 0.0)
        ww = _check("hyper_weight_w", self.hyper_weight_w, w.size, 0.0)
        tz = _check("hyper_target_z", self.hyper_target_z, z.size, 1.0)
        tw = _check("hyper_target_w", self.hyper_target_w, w.size, 1.0)
        if (wz < 0).any() or (ww < 0).any():
            raise ValueError("hyper weights must be >= 0")
        if (tz <= 0).any() or (tw <= 0).any():
            raise ValueError("hyper targets must be > 0")
        for name, arr in (("log_pi_z", z), ("log_pi_w", w)):
            if np.isnan(arr).any() or (arr == np.inf).any() or (arr > 709.0).any():
                raise ValueError(f"{name} entries must be < 709 and not NaN/+inf")
        object.__setattr__(self, "_pi_z", np.exp(z))
        object.__setattr__(self, "_pi_w", np.exp(w))

    @property
    def p(self) -> int:
        return self.log_pi_z.size

    @property
    def pi_z(self) -> np.ndarray:
        return self._pi_z

    @property
    def pi_w(self) -> np.ndarray:
        return self._pi_w

    def __eq__(self, other) -> bool:
        if not isinstance(other, PrecisionState):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("log_pi_z", "log_pi_w", "hyper_weight_z", "hyper_weight_w",
                      "hyper_target_z", "hyper_target_w")
        )

    @staticmethod
    def from_precisions(pi_z, pi_w, **kwargs) -> "PrecisionState":
        """Build from precisions in natural units (0 allowed: channel off)."""
        with np.errstate(divide="ignore"):
            return PrecisionState(
                log_pi_z=np.log(np.asarray(pi_z, dtype=float)),
                log_pi_w=np.log(np.asarray(pi_w, dtype=float)),
                **kwargs,
            )


@dataclass(frozen=True)
class FreeEnergyBreakdown:
    """Additive parts of the cost functional, in nats."""

    f_obs: float        # observation prediction-error term
    f_dyn: float        # dynamics prediction-error term
    f_log: float        # -log precision terms (0 when excluded)
    f_hyper_z: float    # observation hyperprior penalty
    f_hyper_w: float    # dynamics hyperprior penalty

    @property
    def total(self) -> float:
        return self.f_obs + self.f_dyn + self.f_log + self.f_hyper_z + self.f_hyper_w


def _check_depths(m: GenerativeModel, y: GeneralisedSignal, mu_x: GeneralisedSignal,
                  pr: PrecisionState | None = None):
    if y.p != m.p or mu_x.p != m.p:
        raise ValueError(f"depth mismatch: model p={m.p}, y p={y.p}, mu_x p={mu_x.p}")
    if pr is not None and pr.p != m.p:
        raise ValueError(f"depth mismatch: model p={m.p}, precisions p={pr.p}")


def prediction_errors(m: GenerativeModel, y: GeneralisedSignal,
                      mu_x: GeneralisedSignal) -> tuple[np.ndarray, np.ndarray]:
    """The two error channels of the functional.

    eps_z[i] = y[i] - obs_gain * mu_x[i]                       (length p)
    eps_w[i] = mu_x[i+1] - alpha * (setpoint[i] - mu_x[i])     (length p-1)
    """
    _check_depths(m, y, mu_x)
    mu = mu_x.orders
    eps_z = y.orders - m.obs_gain * mu
    eps_w = mu[1:] - m.alpha * (m.setpoint.orders[:-1] - mu[:-1])
    return eps_z, eps_w


def free_energy_from_errors(pr: PrecisionState, eps_z: np.ndarray, eps_w: np.ndarray,
                            include_log_terms: bool = False,
                            hyper_map_z: HyperMap = _identity,
                            hyper_map_w: HyperMap = _identity) -> FreeEnergyBreakdown:
    """Evaluate the functional from precomputed prediction errors."""
    pi_z, pi_w = pr.pi_z, pr.pi_w
    f_obs = 0.5 * float((pi_z * eps_z * eps_z).sum())
    f_dyn = 0.5 * float((pi_w * eps_w * eps_w).sum())
    if include_log_terms:
        f_log = -0.5 * float(pr.log_pi_z.sum()) - 0.5 * float(pr.log_pi_w.sum())
    else:
        f_log = 0.0
    res_z = pi_z - hyper_map_z(pr.hyper_target_z)
    res_w = pi_w - hyper_map_w(pr.hyper_target_w)
    f_hyper_z = 0.5 * float((pr.hyper_weight_z * res_z * res_z).sum())
    f_hyper_w = 0.5 * float((pr.hyper_weight_w * res_w * res_w).sum())
    return FreeEnergyBreakdown(f_obs, f_dyn, f_log, f_hyper_z, f_hyper_w)


def free_energy(m: GenerativeModel, y: GeneralisedSignal, mu_x: GeneralisedSignal,
                pr: PrecisionState, include_log_terms: bool = False,
                hyper_map_z: HyperMap = _identity,
                hyper_map_w: HyperMap = _identity) -> FreeEnergyBreakdown:
    """Evaluate the functional and return its additive decomposition.

    The log-precision terms are excluded by default (they are constant
    during state and action inference) and must be included when the
    functional is differentiated with respect to log-precisions.
    """
    _check_depths(m, y, mu_x, pr)
    eps_z, eps_w = prediction_errors(m, y, mu_x)
    return free_energy_from_errors(pr, eps_z, eps_w, include_log_terms,
                                   hyper_map_z, hyper_map_w)


def grad_mu_x_from_errors(m: GenerativeModel, pr: PrecisionState,
                          eps_z: np.ndarray, eps_w: np.ndarray) -> np.ndarray:
    """dF/dmu_x evaluated from precomputed prediction errors."""
    grad = -m.obs_gain * pr.pi_z * eps_z
    weighted_w = pr.pi_w * eps_w
    grad[:-1] += m.alpha * weighted_w
    grad[1:] += weighted_w
    return grad


def grad_mu_x(m: GenerativeModel, y: GeneralisedSignal, mu_x: GeneralisedSignal,
              pr: PrecisionState) -> np.ndarray:
    """dF/dmu_x per order.

    Order i receives -obs_gain * pi_z[i] * eps_z[i] from the observation
    channel, +alpha * pi_w[i] * eps_w[i] from its own dynamics error, and
    +pi_w[i-1] * eps_w[i-1] because it appears as the derivative term of
    the order below.
    """
    _check_depths(m, y, mu_x, pr)
    eps_z, eps_w = prediction_errors(m, y, mu_x)
    return grad_mu_x_from_errors(m, pr, eps_z, eps_w)


def grad_action_from_errors(pr: PrecisionState, eps_z: np.ndarray,
                            dy_da: np.ndarray) -> float:
    """dF/da evaluated from precomputed observation errors."""
    return float((dy_da * pr.pi_z * eps_z).sum())


def grad_action(m: GenerativeModel, y: GeneralisedSignal, mu_x: GeneralisedSignal,
                pr: PrecisionState, dy_da: np.ndarray) -> float:
    """dF/da through the observation channel.

    dy_da[i] is the assumed sensitivity of observation order i to the
    action; the dynamics channel contributes nothing since action enters
    only via y.
    """
    _check_depths(m, y, mu_x, pr)
    dy_da = np.asarray(dy_da, dtype=float)
    if dy_da.size != m.p:
        raise ValueError(f"dy_da must have length p={m.p}, got {dy_da.size}")
    eps_z, _ = prediction_errors(m, y, mu_x)
    return grad_action_from_errors(pr, eps_z, dy_da)


def grad_log_precisions(pr: PrecisionState, mean_sq_z: np.ndarray, mean_sq_w: np.ndarray,
                        hyper_map_z: HyperMap = _identity,
                        hyper_map_w: HyperMap = _identity) -> tuple[np.ndarray, np.ndarray]:
    """dF/d(log pi) per channel and order, at given mean squared errors.

    For precision pi with mean squared error s, weight mu_p and target eta:

        dF/dlog(pi) = pi * (s/2 - 1/(2 pi) + mu_p * (pi - eta))

    i.e. the chain rule through the log parameterisation applied to the
    quadratic, log and hyperprior terms.  With mu_p = 0 the unique
    stationary point is pi = 1/s.
    """
    mean_sq_z = np.asarray(mean_sq_z, dtype=float)
    mean_sq_w = np.asarray(mean_sq_w, dtype=float)
    if mean_sq_z.size != pr.p or mean_sq_w.size != pr.p - 1:
        raise ValueError("mean squared error arrays must match precision depths")
    pi_z, pi_w = pr.pi_z, pr.pi_w
    g_z = pi_z * (0.5 * mean_sq_z + pr.hyper_weight_z * (pi_z - hyper_map_z(pr.hyper_target_z))) - 0.5
    g_w = pi_w * (0.5 * mean_sq_w + pr.hyper_weight_w * (pi_w - hyper_map_w(pr.hyper_target_w))) - 0.5
    return g_z, g_w
