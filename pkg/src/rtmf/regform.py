"""Regular-form transformation and sliding-surface design.

The auxiliary system ``z' = A z + B (v + w)`` is mapped by ``T1`` to
``(eta, xi)`` coordinates where the input matrix becomes ``[0; I_m]``. A
surface gain ``K`` then defines ``sigma = -K eta + xi`` and the reduced
dynamics ``eta' = (A11 + A12 K) eta`` on ``sigma = 0``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import matlib
from .matlib import as_matrix, as_vector
from .synthesis import UncertainLti

DEFAULT_POLE = -1.0


class RegularFormError(ValueError):
    """No invertible actuated block could be found in ``B``."""


class UncontrollablePairError(ValueError):
    """``(A11, A12)`` is not controllable, so ``K`` cannot place the poles."""


@dataclass(frozen=True)
class RegularForm:
    T1: np.ndarray
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    B2: np.ndarray
    perm: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.T1.shape[0]

    @property
    def m(self) -> int:
        return self.B2.shape[0]

    @property
    def A_tilde(self) -> np.ndarray:
        return np.block([[self.A11, self.A12], [self.A21, self.A22]])

    def to_eta_xi(self, z) -> tuple[np.ndarray, np.ndarray]:
        y = self.T1 @ as_vector(z, "z")
        k = self.n - self.m
        return y[:k], y[k:]

    def from_eta_xi(self, eta, xi) -> np.ndarray:
        return matlib.solve(self.T1, np.concatenate([as_vector(eta), as_vector(xi)]))


@dataclass(frozen=True)
class SurfaceDesign:
    K: np.ndarray
    T2: np.ndarray
    script_A: np.ndarray
    A22_eff: np.ndarray
    reduced_A: np.ndarray
    rf: RegularForm

    @property
    def A_sigma(self) -> np.ndarray:
        """System matrix of the ``(eta, sigma)`` coordinates."""
        return np.block([[self.reduced_A, self.rf.A12], [self.script_A, self.A22_eff]])

    @property
    def sigma_rows(self) -> np.ndarray:
        """``[script_A, A22 - K A12]``: the drift cancelled by the control."""
        return np.hstack([self.script_A, self.A22_eff])

    def sigma_from_z(self, z) -> np.ndarray:
        eta, xi = self.rf.to_eta_xi(z)
        return sigma(self, eta, xi)


def _actuated_permutation(B: np.ndarray) -> tuple[int, ...]:
    """Row order putting an invertible ``m x m`` block of ``B`` at the bottom."""
    n, m = B.shape
    natural = tuple(range(n))
    bottom = B[n - m:, :]
    if matlib.rank(bottom) == m:
        return natural
    for rows in itertools.combinations(range(n), m):
        if matlib.rank(B[list(rows), :]) == m:
            rest = [i for i in range(n) if i not in rows]
            return tuple(rest + list(rows))
    raise RegularFormError("B has no invertible m x m row block (rank deficient)")


def to_regular_form(sys: UncertainLti) -> RegularForm:
    """Build ``T1`` with ``T1 B = [0; I_m]`` and partition ``T1 A T1^-1``.

    If the bottom ``m`` rows of ``B`` are singular, a row permutation that
    yields an invertible block is folded into ``T1``.
    """
    A, B = sys.A, sys.B
    n, m = B.shape
    if m > n:
        raise RegularFormError(f"more inputs ({m}) than states ({n})")
    perm = _actuated_permutation(B)
    P = np.eye(n)[list(perm), :]
    Bp = P @ B
    B1, B2 = Bp[: n - m, :], Bp[n - m:, :]
    B2_inv = matlib.inv(B2)
    T = np.block([
        [np.eye(n - m), -B1 @ B2_inv],
        [np.zeros((m, n - m)), B2_inv],
    ])
    T1 = T @ P
    At = T1 @ A @ matlib.inv(T1)
    k = n - m
    return RegularForm(
        T1=T1,
        A11=At[:k, :k], A12=At[:k, k:], A21=At[k:, :k], A22=At[k:, k:],
        B2=B2, perm=perm,
    )


def acker(A, b, poles) -> np.ndarray:
    """Ackermann gain ``k`` (row) with ``spec(A - b k) = poles``, single input."""
    A = as_matrix(A, "A")
    b = as_matrix(b, "b").reshape(-1, 1)
    n = A.shape[0]
    poles = np.asarray(poles, dtype=complex)
    if poles.size != n:
        raise ValueError(f"need {n} poles, got {poles.size}")
    W = matlib.ctrb(A, b)
    if not matlib.is_controllable(A, b):
        raise UncontrollablePairError("single-input pair is not controllable")
    coeffs = np.real(np.poly(poles))
    phi = np.zeros_like(A)
    for c in coeffs:
        phi = phi @ A + c * np.eye(n)
    e_last = np.zeros((1, n))
    e_last[0, -1] = 1.0
    return e_last @ matlib.solve(W, phi)


def place(A, B, poles, seed: int = 0) -> np.ndarray:
    """Gain ``F`` with ``spec(A + B F) = poles``.

    Single input goes straight through Ackermann. For several inputs a
    random pre-feedback ``F0`` and input mix ``g`` reduce the problem to a
    single-input one (controllable for almost every draw), so repeated poles
    are allowed.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n, m = B.shape
    if n == 0:
        return np.zeros((m, 0))
    if not matlib.is_controllable(A, B):
        raise UncontrollablePairError("(A11, A12) is not controllable")
    if m == 1:
        return -acker(A, B, poles)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        F0 = rng.standard_normal((m, n))
        g = rng.standard_normal((m, 1))
        Acl = A + B @ F0
        bg = B @ g
        if matlib.is_controllable(Acl, bg):
            k = acker(Acl, bg, poles)
            return F0 - g @ k
    raise UncontrollablePairError("could not reduce multi-input pair to a single input")


def design_k(rf: RegularForm, desired_poles=None, seed: int = 0) -> SurfaceDesign:
    """Place ``spec(A11 + A12 K)`` at ``desired_poles`` (default all at -1)."""
    k = rf.n - rf.m
    if desired_poles is None:
        desired_poles = [DEFAULT_POLE] * k
    desired_poles = list(desired_poles)
    if len(desired_poles) != k:
        raise ValueError(f"need {k} poles for the reduced dynamics, got {len(desired_poles)}")
    if any(np.real(p) >= 0 for p in desired_poles):
        raise ValueError("desired poles must have negative real part")
    K = place(rf.A11, rf.A12, desired_poles, seed=seed) if k else np.zeros((rf.m, 0))
    return build_design(rf, K)


def build_design(rf: RegularForm, K) -> SurfaceDesign:
    """Assemble the surface quantities for a given gain ``K``."""
    k = rf.n - rf.m
    K = np.asarray(K, dtype=float).reshape(rf.m, k)
    reduced = rf.A11 + rf.A12 @ K
    T2 = np.block([[np.eye(k), np.zeros((k, rf.m))], [-K, np.eye(rf.m)]])
    return SurfaceDesign(
        K=K,
        T2=T2,
        script_A=rf.A21 + rf.A22 @ K - K @ reduced,
        A22_eff=rf.A22 - K @ rf.A12,
        reduced_A=reduced,
        rf=rf,
    )


def sigma(design: SurfaceDesign, eta, xi) -> np.ndarray:
    """Sliding variable ``sigma = -K eta + xi``."""
    eta = as_vector(eta, "eta")
    xi = as_vector(xi, "xi")
    if eta.size != design.K.shape[1] or xi.size != design.K.shape[0]:
        raise ValueError("eta/xi dimensions do not match K")
    return xi - design.K @ eta
