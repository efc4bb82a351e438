"""Generalised coordinates of motion.

A scalar signal is represented together with its temporal derivatives up to
a fixed embedding depth ``p`` (value, velocity, acceleration, ...).  This
module provides the container type, the derivative shift operator acting on
embedding orders, finite-difference embedding of sampled signals, and
white/coloured noise synthesis for driving simulations.

Precisions are kept diagonal per order throughout the toolkit; cross-order
covariance coupling is deliberately not modelled.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

DEFAULT_DEPTH = 3   # orders 0..2, matching I, P, D
MAX_DEPTH = 6       # deeper orders support PIID/PIIID-style controllers


@dataclass(frozen=True, eq=False)
class GeneralisedSignal:
    """A scalar and its derivatives at one instant.

    ``orders[0]`` is the value in signal units, ``orders[i]`` the i-th time
    derivative in units/s^i.  Entries are finite floats.
    """

    orders: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.orders, dtype=float))
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("orders must be a non-empty 1-d sequence")
        object.__setattr__(self, "orders", arr)

    @property
    def p(self) -> int:
        return self.orders.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, GeneralisedSignal):
            return NotImplemented
        return bool(np.array_equal(self.orders, other.orders))

    def __add__(self, other: "GeneralisedSignal") -> "GeneralisedSignal":
        return GeneralisedSignal(self.orders + other.orders)

    def __sub__(self, other: "GeneralisedSignal") -> "GeneralisedSignal":
        return GeneralisedSignal(self.orders - other.orders)

    def __mul__(self, scalar: float) -> "GeneralisedSignal":
        return GeneralisedSignal(self.orders * float(scalar))

    __rmul__ = __mul__

    @staticmethod
    def zeros(p: int = DEFAULT_DEPTH) -> "GeneralisedSignal":
        return GeneralisedSignal(np.zeros(p))

    @staticmethod
    def from_value(value: float, p: int = DEFAULT_DEPTH) -> "GeneralisedSignal":
        """Constant signal: order 0 set, higher derivatives zero."""
        orders = np.zeros(p)
        orders[0] = value
        return GeneralisedSignal(orders)


def shift(g: GeneralisedSignal) -> GeneralisedSignal:
    """Derivative operator on embedding orders.

    Each order is replaced by the next one up; the highest order is
    truncated to zero.  Applying ``shift`` p times therefore annihilates
    any signal of depth p.
    """
    out = np.empty_like(g.orders)
    out[:-1] = g.orders[1:]
    out[-1] = 0.0
    return GeneralisedSignal(out)


def embed(window: Sequence[float], dt: float, p: int = DEFAULT_DEPTH) -> GeneralisedSignal:
    """Embed the tail of a sampled signal into generalised coordinates.

    ``window`` is ordered oldest to newest.  Order 0 is the newest sample;
    order i is the i-th backward finite difference divided by dt**i.  The
    i-th difference needs i+1 samples, so the window must hold at least p.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    w = np.asarray(window, dtype=float)
    if w.ndim != 1 or w.size < p:
        raise ValueError(f"insufficient window: need at least {p} samples, got {w.size}")
    cur = w[-p:]
    orders = np.empty(p)
    orders[0] = cur[-1]
    for i in range(1, p):
        cur = cur[1:] - cur[:-1]
        orders[i] = cur[-1] / dt**i
    return GeneralisedSignal(orders)


class NoiseKind(str, Enum):
    WHITE = "white"
    COLOURED = "coloured"


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of a synthetic noise source.

    sigma is the standard deviation in signal units.  For coloured noise,
    gamma is the temporal smoothness (Gaussian kernel width, seconds).
    Identical (kind, sigma, gamma, seed, dt, n) always reproduce the same
    sample path.
    """

    kind: NoiseKind = NoiseKind.WHITE
    sigma: float = 0.0          # standard deviation [signal units]
    gamma: float = 0.1          # smoothness / kernel width [s], coloured only
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.kind == NoiseKind.COLOURED and self.gamma <= 0:
            raise ValueError("gamma must be > 0 for coloured noise")


def gaussian_kernel(gamma: float, dt: float) -> np.ndarray:
    """Unit-sum Gaussian FIR kernel of width gamma seconds, truncated at 4 gamma."""
    half = max(1, int(np.ceil(4.0 * gamma / dt)))
    t = np.arange(-half, half + 1) * dt
    k = np.exp(-0.5 * (t / gamma) ** 2)
    return k / k.sum()


def sample_noise(spec: NoiseSpec, n: int, dt: float) -> np.ndarray:
    """Draw a deterministic noise path of n samples at step dt.

    White noise is i.i.d. Gaussian with std sigma/sqrt(dt): scaled as a
    noise density so that Euler integration (x += dt * w) accumulates
    variance sigma**2 per unit time.  Coloured noise is a white sequence
    convolved with a Gaussian kernel of width gamma and rescaled so the
    empirical std matches sigma; being smooth, it enters dynamics as an
    ordinary (analytic) signal without the density scaling.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if spec.sigma == 0.0:
        return np.zeros(n)
    rng = np.random.default_rng(spec.seed)
    white = rng.standard_normal(n)
    if spec.kind == NoiseKind.WHITE:
        return white * (spec.sigma / np.sqrt(dt))
    kernel = gaussian_kernel(spec.gamma, dt)
    smooth = np.convolve(white, kernel, mode="same")
    std = smooth.std()
    if std == 0.0:
        return np.zeros(n)
    return smooth * (spec.sigma / std)
