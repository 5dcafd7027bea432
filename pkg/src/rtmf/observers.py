"""Sliding-mode velocity observers for the MagLev plant.

Both observers take the measured position ``y`` and the applied control ``u``
and are stepped by explicit Euler, ``e1 = y - xhat1``.

Super-twisting observer::

    xhat1' = xhat2 + K1 |e1|^(1/2) sign(e1)
    xhat2' = K2 sign(e1) - C1 u + C2 xhat1

Higher-order observer (third state integrates the disturbance)::

    xhat1' = xhat2 + L1 |e1|^(2/3) sign(e1)
    xhat2' = L2 |e1|^(1/3) sign(e1) + C2 xhat1 - C1 u + xhat3
    xhat3' = L3 sign(e1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .controllers import sign, spow
from .plantlib import C1, C2

STO_DEFAULT_GAINS = (50.0, 400.0)
HOSMO_DEFAULT_GAINS = (35.0, 100.0, 600.0)


@dataclass(frozen=True)
class StoState:
    xhat1: float = 0.0
    xhat2: float = 0.0
    K1: float = STO_DEFAULT_GAINS[0]
    K2: float = STO_DEFAULT_GAINS[1]
    c1: float = C1
    c2: float = C2

    def __post_init__(self):
        if self.K1 <= 0 or self.K2 <= 0:
            raise ValueError("STO gains must be positive")


@dataclass(frozen=True)
class HosmoState:
    xhat1: float = 0.0
    xhat2: float = 0.0
    xhat3: float = 0.0
    L1: float = HOSMO_DEFAULT_GAINS[0]
    L2: float = HOSMO_DEFAULT_GAINS[1]
    L3: float = HOSMO_DEFAULT_GAINS[2]
    c1: float = C1
    c2: float = C2

    def __post_init__(self):
        if min(self.L1, self.L2, self.L3) <= 0:
            raise ValueError("HOSMO gains must be positive")

    @property
    def injection_integral(self) -> float:
        """Running ``int L3 sign(e1) dt`` (equal to ``xhat3`` from a zero start)."""
        return self.xhat3


def sto_deriv(st: StoState, y: float, u: float) -> tuple[float, float]:
    e1 = y - st.xhat1
    return (
        st.xhat2 + st.K1 * spow(e1, 0.5),
        st.K2 * sign(e1) - st.c1 * u + st.c2 * st.xhat1,
    )


def sto_step(st: StoState, y_meas: float, u: float, dt: float) -> StoState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    d1, d2 = sto_deriv(st, y_meas, u)
    return StoState(st.xhat1 + dt * d1, st.xhat2 + dt * d2, st.K1, st.K2, st.c1, st.c2)


def hosmo_deriv(st: HosmoState, y: float, u: float) -> tuple[float, float, float]:
    e1 = y - st.xhat1
    return (
        st.xhat2 + st.L1 * spow(e1, 2.0 / 3.0),
        st.L2 * spow(e1, 1.0 / 3.0) + st.c2 * st.xhat1 - st.c1 * u + st.xhat3,
        st.L3 * sign(e1),
    )


def hosmo_step(st: HosmoState, y_meas: float, u: float, dt: float) -> HosmoState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    d1, d2, d3 = hosmo_deriv(st, y_meas, u)
    return HosmoState(
        st.xhat1 + dt * d1, st.xhat2 + dt * d2, st.xhat3 + dt * d3,
        st.L1, st.L2, st.L3, st.c1, st.c2,
    )


def recommend_sto_gains(theta_M: float) -> tuple[float, float]:
    """Gain rule ``K1 = 1.5 sqrt(theta_M)``, ``K2 = 1.1 theta_M``."""
    if theta_M <= 0:
        raise ValueError("disturbance bound theta_M must be positive")
    return 1.5 * math.sqrt(theta_M), 1.1 * theta_M
