"""Model-following gain synthesis.

Given a nominal plant ``(A, B, C)`` and a reference model ``(A_r, C_r)``,
find ``G`` and ``H`` with::

    A G + B H = G A_r
    C G       = C_r

so that ``u = H x_r + v`` turns the plant into the auxiliary system
``z' = A z + B (v + w)`` with ``z = x - G x_r`` and ``e = C z``.

``G`` is obtained from the row-stacked Kronecker system::

    (I_n (x) I_nr - Omega11 (x) A_r^T) stack(G) = stack(Omega12 C_r)

and ``H = Omega21 G A_r + Omega22 C_r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matlib
from .matlib import as_matrix, as_vector


class InfeasibleSynthesisError(ValueError):
    """The plant/model pair admits no (unique) model-following solution."""


@dataclass(frozen=True)
class UncertainLti:
    """Nominal LTI plant with a lumped matched disturbance ``w``.

    ``theta_M`` bounds ``|w|`` and ``theta_dot_M`` bounds ``|dw/dt|``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    theta_M: float = 0.0
    theta_dot_M: float = 0.0

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got {C.shape}")
        if self.theta_M < 0 or self.theta_dot_M < 0:
            raise ValueError("disturbance bounds must be non-negative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def is_controllable(self) -> bool:
        return matlib.is_controllable(self.A, self.B)


@dataclass(frozen=True)
class ReferenceModel:
    """Stable reference model ``x_r' = A_r x_r + B_r r``, ``y_r = C_r x_r``.

    ``B_r`` is the command-input column; pass ``None`` for an autonomous model.
    """

    A_r: np.ndarray
    C_r: np.ndarray
    B_r: np.ndarray | None = None
    x_r0: np.ndarray | None = None

    def __post_init__(self):
        A_r = as_matrix(self.A_r, "A_r")
        C_r = as_matrix(self.C_r, "C_r")
        nr = A_r.shape[0]
        if A_r.shape != (nr, nr):
            raise ValueError(f"A_r must be square, got {A_r.shape}")
        if C_r.shape[1] != nr:
            raise ValueError(f"C_r must have {nr} columns, got {C_r.shape}")
        B_r = np.zeros((nr, 1)) if self.B_r is None else as_matrix(self.B_r, "B_r").reshape(nr, -1)
        x_r0 = np.zeros(nr) if self.x_r0 is None else as_vector(self.x_r0, "x_r0")
        if x_r0.size != nr:
            raise ValueError(f"x_r0 must have {nr} entries")
        object.__setattr__(self, "A_r", A_r)
        object.__setattr__(self, "C_r", C_r)
        object.__setattr__(self, "B_r", B_r)
        object.__setattr__(self, "x_r0", x_r0)

    @property
    def n_r(self) -> int:
        return self.A_r.shape[0]

    def is_stable(self) -> bool:
        return matlib.is_hurwitz(self.A_r)

    def dc_gain(self) -> np.ndarray:
        """Steady-state command-to-output gain ``-C_r A_r^-1 B_r``."""
        return -self.C_r @ matlib.solve(self.A_r, self.B_r)


@dataclass(frozen=True)
class FeasibilityReport:
    rank: int
    required_rank: int
    n: int
    m: int
    p: int
    controllable: bool
    reasons: tuple[str, ...] = field(default_factory=tuple)

    @property
    def feasible(self) -> bool:
        return not self.reasons

    @property
    def rank_ok(self) -> bool:
        return self.rank == self.required_rank

    @property
    def outputs_ok(self) -> bool:
        return self.p <= self.m


@dataclass(frozen=True)
class SynthesisResult:
    G: np.ndarray
    H: np.ndarray
    omega_blocks: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    residual_dyn: float
    residual_out: float


def _system_matrix(sys: UncertainLti) -> np.ndarray:
    return np.block([[sys.A, sys.B], [sys.C, np.zeros((sys.p, sys.m))]])


def check_feasibility(sys: UncertainLti) -> FeasibilityReport:
    """Rank test of ``[[A, B], [C, 0]]`` plus the output/input count rule."""
    M = _system_matrix(sys)
    # column-normalise so plant gains of 1e3..1e5 do not fool the SVD tolerance
    norms = np.linalg.norm(M, axis=0)
    norms[norms == 0] = 1.0
    r = matlib.rank(M / norms)
    required = sys.n + sys.p
    controllable = sys.is_controllable()
    reasons = []
    if sys.p > sys.m:
        reasons.append(
            f"number of outputs p={sys.p} exceeds number of inputs m={sys.m} (need p <= m)"
        )
    if r != required:
        reasons.append(f"rank [[A, B], [C, 0]] = {r}, need n + p = {required}")
    if not controllable:
        reasons.append("pair (A, B) is not controllable")
    return FeasibilityReport(
        rank=r, required_rank=required, n=sys.n, m=sys.m, p=sys.p,
        controllable=controllable, reasons=tuple(reasons),
    )


def compute_omega(sys: UncertainLti):
    """Return ``(Omega11, Omega12, Omega21, Omega22)``.

    For ``p == m`` Omega is the plain inverse of ``[[A, B], [C, 0]]``. For
    ``p < m`` the minimum-norm right inverse ``M^T (M M^T)^-1`` is used.
    """
    report = check_feasibility(sys)
    if report.p > report.m or not report.rank_ok:
        raise InfeasibleSynthesisError("; ".join(report.reasons))
    M = _system_matrix(sys)
    if sys.p == sys.m:
        try:
            omega = matlib.inv(M)
        except matlib.SingularMatrixError as exc:
            raise InfeasibleSynthesisError(f"[[A, B], [C, 0]] is singular: {exc}") from exc
    else:
        omega = M.T @ matlib.inv(M @ M.T)
    n = sys.n
    return omega[:n, :n], omega[:n, n:], omega[n:, :n], omega[n:, n:]


def kronecker_system(omega11, A_r, omega12, C_r):
    """Coefficient matrix and right-hand side of the stacked ``G`` equation."""
    n = omega11.shape[0]
    n_r = A_r.shape[0]
    lhs = np.eye(n * n_r) - matlib.kron(omega11, A_r.T)
    rhs = matlib.stack(omega12 @ C_r)
    return lhs, rhs


def solve_gh(sys: UncertainLti, model: ReferenceModel, cond_limit: float = matlib.DEFAULT_COND_LIMIT) -> SynthesisResult:
    """Solve the model-following relation for ``G`` and ``H``.

    Raises :class:`InfeasibleSynthesisError` if the plant fails the rank/count
    test or if the Kronecker system is singular, in which case a different
    reference model has to be chosen.
    """
    if model.C_r.shape[0] != sys.p:
        raise ValueError(f"C_r has {model.C_r.shape[0]} rows but the plant has p={sys.p} outputs")
    o11, o12, o21, o22 = compute_omega(sys)
    lhs, rhs = kronecker_system(o11, model.A_r, o12, model.C_r)
    try:
        g_vec = matlib.solve(lhs, rhs, cond_limit=cond_limit)
    except matlib.SingularMatrixError as exc:
        raise InfeasibleSynthesisError(
            f"Kronecker system for G is singular; choose a different reference model ({exc})"
        ) from exc
    G = matlib.unstack(g_vec, sys.n, model.n_r)
    H = o21 @ G @ model.A_r + o22 @ model.C_r
    return SynthesisResult(
        G=G, H=H, omega_blocks=(o11, o12, o21, o22),
        residual_dyn=matlib.inf_norm(sys.A @ G + sys.B @ H - G @ model.A_r),
        residual_out=matlib.inf_norm(sys.C @ G - model.C_r),
    )


def residuals(sys: UncertainLti, model: ReferenceModel, G, H) -> tuple[float, float]:
    """``(||AG + BH - G A_r||_inf, ||CG - C_r||_inf)`` for arbitrary ``G, H``."""
    G = as_matrix(G, "G")
    H = as_matrix(H, "H")
    return (
        matlib.inf_norm(sys.A @ G + sys.B @ H - G @ model.A_r),
        matlib.inf_norm(sys.C @ G - model.C_r),
    )


def dyn_scale(model: ReferenceModel, G) -> float:
    """Scale ``1 + ||G A_r||_inf`` used by the residual tolerances."""
    return 1.0 + matlib.inf_norm(as_matrix(G) @ model.A_r)
