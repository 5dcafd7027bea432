"""MagLev benchmark plant, its PID-derived reference model and test signals.

Linear plant in sensor volts (``x1`` position, ``x2`` its rate)::

    x1' = x2
    x2' = C2 x1 - C1 (u + w)        (input channel, default)
    x2' = C2 x1 - C1 u + w          (acceleration channel)

with ``C1 = 3518.85`` and ``C2 = 2180``. The reference model is the third
order companion form with a triple pole at -70.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import matlib
from .synthesis import ReferenceModel, UncertainLti

C1 = 3518.85  # input gain, (V/s^2)/V
C2 = 2180.0  # open-loop pole constant, 1/s^2
MODEL_GAIN = 343000.0  # 70**3
MODEL_A_R = np.array([
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [-343000.0, -14700.0, -210.0],
])
MODEL_C_R = np.array([[MODEL_GAIN, 0.0, 0.0]])
MODEL_B_R = np.array([[0.0], [0.0], [1.0]])
MODEL_X_R0 = np.array([1e-5, 0.0, 0.0])

# PID gains whose closed loop was used to pick the model
PID_KP, PID_KI, PID_KD = -4.8, -98.0, -0.06

# rounded gains as printed for the MagLev design
ROUNDED_G = np.array([[343000.0, 0.0, 0.0], [0.0, 343000.0, 0.0]])
ROUNDED_H = np.array([[212500.0, 0.0, -100.0]])

CHANNELS = ("input", "acceleration")


class NotHurwitzError(ValueError):
    """A closed loop meant to serve as reference model is not stable."""


class SingularityError(ValueError):
    """Ball position reached the magnet face (``pos <= 0``)."""


@dataclass(frozen=True)
class MaglevParams:
    m: float = 0.02  # kg
    g: float = 9.81  # m/s^2
    i0: float = 0.8  # A
    x0: float = 0.009  # m
    K1_coil: float = 1.05  # A/V
    K2_sensor: float = 143.48  # V/m
    C1: float = C1
    C2: float = C2
    u_limits: tuple[float, float] = (-5.0, 5.0)
    xv_range: tuple[float, float] = (-1.5, 3.75)

    @property
    def K_force(self) -> float:
        """Force constant balancing gravity at ``(x0, i0)``."""
        return self.m * self.g * self.x0 ** 2 / self.i0 ** 2

    @property
    def u0(self) -> float:
        """Coil voltage holding the ball at ``x0``."""
        return self.i0 / self.K1_coil


def maglev_plant(theta_M: float = 5.0, theta_dot_M: float = 5.0) -> UncertainLti:
    return UncertainLti(
        A=np.array([[0.0, 1.0], [C2, 0.0]]),
        B=np.array([[0.0], [-C1]]),
        C=np.array([[1.0, 0.0]]),
        theta_M=theta_M,
        theta_dot_M=theta_dot_M,
    )


def maglev_reference_model(x_r0=MODEL_X_R0) -> ReferenceModel:
    return ReferenceModel(A_r=MODEL_A_R, C_r=MODEL_C_R, B_r=MODEL_B_R, x_r0=x_r0)


def maglev_linear_deriv(x, u: float, w: float, channel: str = "input") -> tuple[float, float]:
    x1, x2 = x
    if channel == "input":
        return x2, C2 * x1 - C1 * (u + w)
    if channel == "acceleration":
        return x2, C2 * x1 - C1 * u + w
    raise ValueError(f"unknown disturbance channel {channel!r}")


def maglev_nonlinear_deriv(x, u: float, params: MaglevParams = MaglevParams()) -> tuple[float, float]:
    """Physical ball dynamics ``m x'' = m g - K i^2 / x^2`` with ``i = K1 u``.

    ``x`` is (position m, velocity m/s), ``u`` the absolute coil voltage.
    """
    pos, vel = x
    if pos <= 0.0:
        raise SingularityError(f"ball position {pos} m is at or past the magnet")
    i = params.K1_coil * u
    acc = params.g - params.K_force * i * i / (params.m * pos * pos)
    return vel, acc


def maglev_nonlinear_volts_deriv(x, u: float, w: float, channel: str = "input",
                                 params: MaglevParams = MaglevParams()) -> tuple[float, float]:
    """Nonlinear plant expressed in the linear model's coordinates.

    ``x`` is the sensor-volt deviation (``x_v``, ``x_v'``) and ``u`` the
    voltage deviation from ``u0``.
    """
    k2 = params.K2_sensor
    pos = params.x0 + x[0] / k2
    vel = x[1] / k2
    if channel == "input":
        _, acc = maglev_nonlinear_deriv((pos, vel), params.u0 + u + w, params)
        return x[1], k2 * acc
    if channel == "acceleration":
        _, acc = maglev_nonlinear_deriv((pos, vel), params.u0 + u, params)
        return x[1], k2 * acc + w
    raise ValueError(f"unknown disturbance channel {channel!r}")


def refmodel_deriv(x_r, r: float) -> np.ndarray:
    x_r = np.asarray(x_r, dtype=float)
    return MODEL_A_R @ x_r + MODEL_B_R[:, 0] * r


def companion(coeffs) -> np.ndarray:
    """Companion matrix of monic ``s^n + a_{n-1} s^{n-1} + ... + a_0``.

    ``coeffs`` is ``[1, a_{n-1}, ..., a_0]`` (numpy ``poly`` order).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.size - 1
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -coeffs[:0:-1]
    return A


def pid_to_model(Kp: float, Ki: float, Kd: float, c1: float = C1, c2: float = C2,
                 full_numerator: bool = False, x_r0=None) -> ReferenceModel:
    """Reference model from the PID + MagLev closed loop.

    The closed-loop denominator is
    ``s^3 - Kd c1 s^2 - (Kp c1 + c2) s - Ki c1``. By default the output row
    keeps only the constant numerator term (``[-Ki c1, 0, 0]``), which has
    unit DC gain; ``full_numerator`` uses ``-c1 (Kd s^2 + Kp s + Ki)``.
    """
    den = np.array([1.0, -Kd * c1, -(Kp * c1 + c2), -Ki * c1])
    A_r = companion(den)
    if not matlib.is_hurwitz(A_r):
        raise NotHurwitzError(f"PID closed loop is not Hurwitz (poles {np.roots(den)})")
    if full_numerator:
        C_r = np.array([[-c1 * Ki, -c1 * Kp, -c1 * Kd]])
    else:
        C_r = np.array([[den[-1], 0.0, 0.0]])
    return ReferenceModel(A_r=A_r, C_r=C_r, B_r=MODEL_B_R, x_r0=x_r0)


@dataclass(frozen=True)
class Disturbance:
    """Lumped disturbance ``w(t)``.

    ``sinusoid``: ``amplitude * sin(frequency * t)``; ``constant``:
    ``amplitude``; ``table``: piecewise-linear through ``table`` points
    ``(t, w)``; ``zero``.
    """

    kind: str = "sinusoid"
    amplitude: float = 5.0
    frequency: float = 1.0
    table: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("sinusoid", "constant", "table", "zero"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.kind == "table":
            if len(self.table) < 2:
                raise ValueError("table disturbance needs at least two points")
            ts = [p[0] for p in self.table]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("table times must be strictly increasing")

    def __call__(self, t: float) -> float:
        if self.kind == "sinusoid":
            return self.amplitude * math.sin(self.frequency * t)
        if self.kind == "constant":
            return self.amplitude
        if self.kind == "table":
            ts, ws = zip(*self.table)
            return float(np.interp(t, ts, ws))
        return 0.0

    @property
    def sup_w(self) -> float:
        if self.kind in ("sinusoid", "constant"):
            return abs(self.amplitude)
        if self.kind == "table":
            return max(abs(p[1]) for p in self.table)
        return 0.0

    @property
    def sup_wdot(self) -> float:
        if self.kind == "sinusoid":
            return abs(self.amplitude * self.frequency)
        if self.kind == "table":
            return max(abs((b[1] - a[1]) / (b[0] - a[0])) for a, b in zip(self.table, self.table[1:]))
        return 0.0


def disturbance_eval(d: Disturbance, t: float) -> tuple[float, float, float]:
    return d(t), d.sup_w, d.sup_wdot


@dataclass(frozen=True)
class CommandSignal:
    """Command ``r(t)`` fed to the reference model.

    ``trapezoid`` repeats every ``period``: ramp from 0 to ``amplitude`` at
    ``slope`` V/s, hold, ramp back down, hold at 0 (each hold lasts half the
    period minus one ramp). ``step`` is ``amplitude`` for ``t >= 0``.
    """

    kind: str = "sinusoid"
    amplitude: float = 1.0
    period: float = 2.0 * math.pi
    slope: float = 0.5

    def __post_init__(self):
        if self.kind not in ("sinusoid", "trapezoid", "step", "zero"):
            raise ValueError(f"unknown command kind {self.kind!r}")
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.kind == "trapezoid":
            if self.slope <= 0:
                raise ValueError("trapezoid slope must be positive")
            if self.ramp_time > self.period / 2:
                raise ValueError("trapezoid ramps do not fit in half a period")

    @property
    def ramp_time(self) -> float:
        return abs(self.amplitude) / self.slope

    def __call__(self, t: float) -> float:
        if self.kind == "sinusoid":
            return self.amplitude * math.sin(2.0 * math.pi * t / self.period)
        if self.kind == "trapezoid":
            tau = t % self.period
            half = self.period / 2.0
            ramp = self.ramp_time
            if tau < ramp:
                return self.amplitude * tau / ramp
            if tau < half:
                return self.amplitude
            if tau < half + ramp:
                return self.amplitude * (1.0 - (tau - half) / ramp)
            return 0.0
        if self.kind == "step":
            return self.amplitude
        return 0.0
