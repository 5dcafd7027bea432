"""Super-twisting tracking control laws.

Generic law, in the ``(eta, sigma)`` coordinates of a surface design::

    u  = H x_r + v
    v  = -[script_A, A22 - K A12] (eta, sigma) + v'
    v'_i = -k1 |sigma_i|^(1/2) sign(sigma_i) + Omega_i,   Omega_i' = -k2 sign(sigma_i)

MagLev laws use the estimated velocity from a sliding-mode observer and the
surface ``s = c1 z1 + z2_hat`` with ``z = (x1, x2_hat) - G x_r``. The control
is chosen so that ``s' = c1 e2 - lambda1 |s|^(1/2) sign(s) + Omega`` with
``Omega' = -lambda2 sign(s)``.

All integral states are advanced by explicit Euler and ``sign(0) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matlib import as_matrix, as_vector
from .plantlib import C1, C2, MODEL_GAIN, ROUNDED_H
from .regform import SurfaceDesign


def sign(x: float) -> float:
    return 1.0 if x > 0.0 else (-1.0 if x < 0.0 else 0.0)


def spow(x: float, p: float) -> float:
    """Signed power ``|x|^p sign(x)``; continuous at zero for ``p > 0``."""
    if x > 0.0:
        return x ** p
    if x < 0.0:
        return -((-x) ** p)
    return 0.0


@dataclass(frozen=True)
class StaGains:
    k1: float = 10.0
    k2: float = 10.0
    lambda1: float = 10.0
    lambda2: float = 10.0

    def __post_init__(self):
        for name in ("k1", "k2", "lambda1", "lambda2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_disturbance(cls, theta_dot_M: float, **kw) -> StaGains:
        """Generic-law default ``k2 = 1.1 theta_dot_M + 1``."""
        return cls(k2=1.1 * theta_dot_M + 1.0, **kw)

    def satisfies_gain_condition(self, theta_dot_M: float) -> bool:
        return self.k1 > 0 and self.k2 > theta_dot_M


STO_LAW_GAINS = StaGains(lambda1=10.0, lambda2=10.0)
HOSMO_LAW_GAINS = StaGains(lambda1=15.0, lambda2=15.0)


@dataclass(frozen=True)
class ControllerState:
    """Integral state ``Omega`` of the super-twisting law and the time."""

    omega_int: np.ndarray
    t: float = 0.0

    @classmethod
    def zero(cls, m: int = 1) -> ControllerState:
        return cls(omega_int=np.zeros(m))


def sta_core(sigma, state: ControllerState, gains: StaGains, dt: float):
    """One sample of the super-twisting law.

    Returns ``(v_prime, new_state)``; ``v_prime`` uses the current integral
    state, which is then advanced by ``-k2 sign(sigma) dt``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = as_vector(sigma, "sigma")
    pairs = [sta_scalar(si, oi, gains.k1, gains.k2, dt) for si, oi in zip(s, state.omega_int)]
    v = np.array([p[0] for p in pairs])
    new_om = np.array([p[1] for p in pairs])
    return v, ControllerState(omega_int=new_om, t=state.t + dt)


def sta_scalar(sigma: float, omega: float, k1: float, k2: float, dt: float) -> tuple[float, float]:
    """Scalar super-twisting step: ``(v', omega - k2 sign(sigma) dt)``."""
    return -k1 * spow(sigma, 0.5) + omega, omega - k2 * sign(sigma) * dt


def rtmf_control(H, x_r, v) -> np.ndarray:
    """Tracking control ``u = H x_r + v``."""
    H = as_matrix(H, "H")
    return H @ as_vector(x_r, "x_r") + as_vector(v, "v")


def generic_v(design: SurfaceDesign, eta, sigma, v_prime) -> np.ndarray:
    """Cancel the sigma-row drift and add the super-twisting term."""
    x = np.concatenate([as_vector(eta, "eta"), as_vector(sigma, "sigma")])
    return -design.sigma_rows @ x + as_vector(v_prime, "v_prime")


@dataclass(frozen=True)
class MaglevLaw:
    """Constants of the observer-based MagLev tracking law.

    ``H`` is the feedforward row used in ``u = H x_r + v``; the law cancels
    ``C1 H x_r`` exactly, so either the exact or the rounded ``H`` gives the
    same sliding dynamics.
    """

    H: tuple[float, float, float] = tuple(ROUNDED_H[0])
    model_gain: float = MODEL_GAIN
    c1: float = C1
    c2: float = C2
    surface_slope: float = 1.0

    @property
    def coef_xr1(self) -> float:
        """Coefficient of ``x_r1`` in the drift (``7.47e8`` for the rounded H)."""
        return self.c1 * self.H[0]

    @property
    def coef_xr3(self) -> float:
        """Coefficient of ``-x_r3`` in the drift (``8885`` for the rounded H)."""
        return -self.c1 * self.H[2] - self.model_gain

    def feedforward(self, x_r) -> float:
        return self.H[0] * x_r[0] + self.H[1] * x_r[1] + self.H[2] * x_r[2]

    def surface(self, y: float, xhat2: float, x_r) -> float:
        g = self.model_gain
        return self.surface_slope * (y - g * x_r[0]) + (xhat2 - g * x_r[1])

    def _v(self, xhat1, xhat2, x_r, injection, s_hat, omega, lambda1):
        g = self.model_gain
        drift = (
            self.surface_slope * (xhat2 - g * x_r[1])
            + injection
            + self.c2 * xhat1
            - g * x_r[2]
            - self.c1 * self.feedforward(x_r)
        )
        return (drift + lambda1 * spow(s_hat, 0.5) - omega) / self.c1


def maglev_v_sto(xhat, x_r, e1: float, s_hat: float, state: ControllerState,
                 gains: StaGains, dt: float, *, K2: float, law: MaglevLaw = MaglevLaw()):
    """Control ``v`` for the super-twisting-observer loop.

    ``K2`` is the observer's second injection gain; its ``K2 sign(e1)`` term
    enters ``v`` directly, so this ``v`` is discontinuous.
    """
    om = float(state.omega_int[0])
    v = law._v(xhat[0], xhat[1], x_r, K2 * sign(e1), s_hat, om, gains.lambda1)
    new = ControllerState(omega_int=np.array([om - gains.lambda2 * sign(s_hat) * dt]), t=state.t + dt)
    return v, new


def maglev_v_hosmo(xhat, x_r, e1: float, s_hat: float, state: ControllerState,
                   gains: StaGains, observer_integral: float, dt: float, *, L2: float,
                   law: MaglevLaw = MaglevLaw()):
    """Control ``v`` for the higher-order observer loop.

    ``observer_integral`` is the observer's running ``int L3 sign(e1)``
    (its third state), shared rather than re-integrated here.
    """
    om = float(state.omega_int[0])
    injection = L2 * spow(e1, 1.0 / 3.0) + observer_integral
    v = law._v(xhat[0], xhat[1], x_r, injection, s_hat, om, gains.lambda1)
    new = ControllerState(omega_int=np.array([om - gains.lambda2 * sign(s_hat) * dt]), t=state.t + dt)
    return v, new


def saturate(u: float, limits: tuple[float, float]) -> float:
    lo, hi = limits
    return min(max(u, lo), hi)
