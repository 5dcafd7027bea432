"""Small dense linear-algebra helpers.

Matrices are plain ``numpy`` float arrays. Every public function validates
its inputs for finiteness so that NaN/Inf never leak silently into the
synthesis or the simulator.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

DEFAULT_COND_LIMIT = 1e12


class NonFiniteError(ValueError):
    """Raised when a matrix or vector contains NaN or Inf."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a linear system is singular or too ill-conditioned."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float array.

    Scalars become 1x1 and 1-D input becomes a single row.
    """
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return m


def as_vector(v, name: str = "vector") -> np.ndarray:
    x = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return x


def kron(u, v) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` of the result is ``u[i, j] * v``."""
    u = as_matrix(u, "U")
    v = as_matrix(v, "V")
    if u.size == 0 or v.size == 0:
        raise ValueError("kron operands must be non-empty")
    return np.kron(u, v)


def stack(m) -> np.ndarray:
    """Concatenate the rows of ``m`` (first row first) into one vector."""
    m = as_matrix(m, "M")
    if m.size == 0:
        raise ValueError("cannot stack an empty matrix")
    return m.reshape(-1).copy()


def unstack(v, n: int, m: int) -> np.ndarray:
    """Inverse of :func:`stack`."""
    v = as_vector(v, "v")
    if v.size != n * m:
        raise ValueError(f"cannot unstack {v.size} entries into {n}x{m}")
    return v.reshape(n, m).copy()


def cond(a) -> float:
    a = as_matrix(a, "A")
    return float(np.linalg.cond(a))


def solve(a, b, cond_limit: float = DEFAULT_COND_LIMIT) -> np.ndarray:
    """Solve ``a @ x = b`` by partial-pivoting LU.

    ``b`` may be a vector or a matrix of right-hand sides; the result has the
    same layout. Raises :class:`SingularMatrixError` when the 2-norm
    condition number of ``a`` exceeds ``cond_limit``.
    """
    a = as_matrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"solve needs a square matrix, got {a.shape}")
    b_arr = np.asarray(b, dtype=float)
    vector_rhs = b_arr.ndim == 1
    b_mat = b_arr.reshape(-1, 1) if vector_rhs else as_matrix(b_arr, "b")
    if not np.all(np.isfinite(b_mat)):
        raise NonFiniteError("b contains non-finite entries")
    if b_mat.shape[0] != a.shape[0]:
        raise ValueError(f"dimension mismatch: A is {a.shape}, b has {b_mat.shape[0]} rows")
    c = np.linalg.cond(a)
    if not np.isfinite(c) or c > cond_limit:
        raise SingularMatrixError(f"matrix is singular or ill-conditioned (cond={c:.3g})")
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    x = scipy.linalg.lu_solve((lu, piv), b_mat, check_finite=False)
    return x.reshape(-1) if vector_rhs else x


def inv(a, cond_limit: float = DEFAULT_COND_LIMIT) -> np.ndarray:
    a = as_matrix(a, "A")
    return solve(a, np.eye(a.shape[0]), cond_limit=cond_limit)


def _cubic_roots(a2: float, a1: float, a0: float) -> np.ndarray:
    """Roots of ``s^3 + a2 s^2 + a1 s + a0`` in closed form."""
    shift = a2 / 3.0
    p = a1 - a2 * shift
    q = 2.0 * shift ** 3 - a1 * shift + a0
    if p == 0.0 and q == 0.0:
        return np.full(3, -shift, dtype=complex)
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        # one real root; pick the cube-root branch that avoids cancellation
        u = np.cbrt(-q / 2.0 - math.copysign(math.sqrt(disc), q))
        v = -p / (3.0 * u) if u != 0.0 else 0.0
        re = -(u + v) / 2.0
        im = math.sqrt(3.0) / 2.0 * (u - v)
        t = np.array([u + v, complex(re, im), complex(re, -im)])
    else:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = min(1.0, max(-1.0, 3.0 * q / (p * r)))
        phi = math.acos(arg) / 3.0
        t = np.array([r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)], dtype=complex)
    return t - shift


def _small_eigvals(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    if n == 1:
        return a[0].astype(complex)
    tr = float(np.trace(a))
    if n == 2:
        det = float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
        disc = tr * tr / 4.0 - det
        root = np.sqrt(complex(disc))
        big = tr / 2.0 + (root if tr >= 0 else -root)
        other = det / big if big != 0 else tr / 2.0 - (root if tr >= 0 else -root)
        return np.array([big, other])
    minors = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
              + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
              + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
    det = (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
           - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
           + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))
    return _cubic_roots(-tr, float(minors), -float(det))


def eigvals(a) -> np.ndarray:
    """Eigenvalues; closed-form characteristic roots for ``n <= 3``.

    The closed form resolves repeated poles (such as a triple pole of a
    companion matrix) exactly, where QR iteration scatters them by about
    ``eps^(1/n)``.
    """
    a = as_matrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"eigenvalues need a square matrix, got {a.shape}")
    if 0 < a.shape[0] <= 3:
        return _small_eigvals(a)
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # QR iteration failed to converge
        raise np.linalg.LinAlgError(f"eigenvalue iteration did not converge: {exc}") from exc


def eig_real_parts(a) -> np.ndarray:
    """Real parts of all eigenvalues of ``a``, sorted ascending."""
    return np.sort(eigvals(a).real)


def is_hurwitz(a) -> bool:
    a = as_matrix(a, "A")
    return a.size == 0 or bool(np.all(eig_real_parts(a) < 0.0))


def rank(a, tol: float | None = None) -> int:
    a = as_matrix(a, "A")
    if a.size == 0:
        return 0
    return int(np.linalg.matrix_rank(a, tol=tol))


def ctrb(a, b) -> np.ndarray:
    """Controllability matrix ``[B, AB, ..., A^(n-1) B]``."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    n = a.shape[0]
    blocks = [b]
    for _ in range(n - 1):
        blocks.append(a @ blocks[-1])
    return np.hstack(blocks)


def is_controllable(a, b) -> bool:
    a = as_matrix(a, "A")
    n = a.shape[0]
    if n == 0:
        return True
    w = ctrb(a, b)
    # scale columns so the rank test is insensitive to large plant gains
    norms = np.linalg.norm(w, axis=0)
    norms[norms == 0] = 1.0
    return rank(w / norms) == n


def inf_norm(a) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(a), axis=1)))
