"""Numerical kernels: least squares, symmetric eigendecomposition, correlation
and Student-t tails, plus a splittable counter-based random number generator.

Everything here is written against plain numpy arrays; no LAPACK solver or
scipy special function is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "betainc",
    "fit_linear",
    "least_squares",
    "pearson_p",
    "pearson_r",
    "split_rng",
    "sym_eigen",
    "t_ppf",
    "t_sf",
]

# ---------------------------------------------------------------------------
# Random numbers
# ---------------------------------------------------------------------------
#
# SplitMix64.  All arithmetic is on unsigned 64-bit integers (Python ints
# masked with _MASK), so draws are bit-identical on every platform:
#
#   mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
#              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
#              return z ^ (z >> 31)
#
#   key(seed, stream) = mix64(seed ^ mix64(stream * GOLDEN + GOLDEN))
#
# A stream (seed, stream) starts from state = key(seed, stream); each draw
# does state += GOLDEN and returns mix64(state).  A child stream at index i
# is (key(seed, stream), i), so the whole tree is addressed by integer paths.
# Uniforms use the top 53 bits: u = (x >> 11) * 2**-53.

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_TWO_M53 = 2.0**-53


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def _key(seed: int, stream: int) -> int:
    return mix64((seed & _MASK) ^ mix64((stream * _GOLDEN + _GOLDEN) & _MASK))


@dataclass(frozen=True)
class RngStream:
    """Immutable address of a random stream.

    Use :meth:`draws` to get a stateful generator, :meth:`split` to derive
    an independent child stream.
    """

    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK and 0 <= self.stream <= _MASK):
            raise ValueError("seed and stream must be unsigned 64-bit integers")

    def split(self, index: int) -> RngStream:
        return split_rng(self, index)

    @property
    def state(self) -> int:
        """Initial 64-bit generator state of this stream."""
        return _key(self.seed, self.stream)

    def draws(self) -> SplitMix64:
        return SplitMix64(self.state)

    def numpy(self) -> np.random.Generator:
        """A numpy PCG64 generator keyed on this stream (used for synthetic data)."""
        return np.random.Generator(np.random.PCG64(self.state))


def split_rng(parent: RngStream, index: int) -> RngStream:
    """Child stream of ``parent`` at ``index``; distinct indices give independent streams."""
    if not 0 <= index <= _MASK:
        raise ValueError("index must be an unsigned 64-bit integer")
    return RngStream(_key(parent.seed, parent.stream), index)


class SplitMix64:
    """Stateful SplitMix64 generator."""

    def __init__(self, state: int):
        self.state = state & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return mix64(self.state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * _TWO_M53

    def uniform(self, size: int) -> np.ndarray:
        return np.array([self.random() for _ in range(size)])

    def below(self, m: int) -> int:
        """Integer in [0, m)."""
        return int(self.random() * m)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return np.array(perm, dtype=np.int64)


# ---------------------------------------------------------------------------
# Least squares
# ---------------------------------------------------------------------------


def _as_finite_2d(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or Inf")
    return X


def _householder(x):
    """Reflector (v, beta) with (I - beta v v^T) x = alpha e1."""
    normx = math.sqrt(float(x @ x))
    v = x.copy()
    alpha = -normx if x[0] >= 0 else normx
    v[0] -= alpha
    vv = float(v @ v)
    beta = 0.0 if vv == 0.0 else 2.0 / vv
    return v, beta, alpha


def _qr_pivoted(A, tol):
    """Householder QR with column pivoting, A P = Q R.

    Returns (R, reflectors, perm, rank).  ``R`` holds the upper trapezoid in
    its first ``rank`` rows; reflectors are (k, v, beta) acting on rows k:.
    """
    A = A.copy()
    m, n = A.shape
    perm = np.arange(n)
    reflectors = []
    rank = 0
    for k in range(min(m, n)):
        norms = np.einsum("ij,ij->j", A[k:, k:], A[k:, k:])
        j = k + int(np.argmax(norms))
        if math.sqrt(norms[j - k]) <= tol:
            break
        if j != k:
            A[:, [k, j]] = A[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
        v, beta, alpha = _householder(A[k:, k])
        A[k:, k:] -= beta * np.outer(v, v @ A[k:, k:])
        A[k, k] = alpha
        A[k + 1 :, k] = 0.0
        reflectors.append((k, v, beta))
        rank = k + 1
    return A, reflectors, perm, rank


def _apply_reflectors(reflectors, Y):
    Y = Y.copy()
    for k, v, beta in reflectors:
        Y[k:] -= beta * np.outer(v, v @ Y[k:])
    return Y


def _back_substitute(R, C):
    """Solve upper-triangular R X = C."""
    n = R.shape[0]
    X = np.zeros_like(C)
    for i in range(n - 1, -1, -1):
        X[i] = (C[i] - R[i, i + 1 :] @ X[i + 1 :]) / R[i, i]
    return X


def _forward_substitute(L, C):
    """Solve lower-triangular L X = C."""
    n = L.shape[0]
    X = np.zeros_like(C)
    for i in range(n):
        X[i] = (C[i] - L[i, :i] @ X[:i]) / L[i, i]
    return X


def least_squares(X, y) -> np.ndarray:
    """Minimum-norm solution of ``min ||X b - y||``.

    Householder QR with column pivoting; a rank-deficient system is finished
    with a second QR of the trapezoidal factor (complete orthogonal
    decomposition), which yields the minimum-norm minimiser.  Columns whose
    pivoted diagonal falls below ``1e-12 * ||X||_F`` count as dependent.

    ``y`` may be a vector or a matrix of right-hand sides.
    """
    X = _as_finite_2d(X)
    y = np.asarray(y, dtype=float)
    vector = y.ndim == 1
    Y = y[:, None] if vector else y
    if Y.shape[0] != X.shape[0]:
        raise ValueError(f"dimension mismatch: X has {X.shape[0]} rows, y has {Y.shape[0]}")
    if not np.all(np.isfinite(Y)):
        raise ValueError("y contains NaN or Inf")
    n, p = X.shape
    coef = np.zeros((p, Y.shape[1]))
    if p == 0 or n == 0:
        return coef[:, 0] if vector else coef
    tol = 1e-12 * float(np.linalg.norm(X))
    R, reflectors, perm, rank = _qr_pivoted(X, tol)
    if rank > 0:
        C = _apply_reflectors(reflectors, Y)[:rank]
        if rank == p:
            z = _back_substitute(R[:p, :p], C)
        else:
            # T = R[:rank] is rank x p; with T^T = Q2 R2, T = R2^T Q2^T and
            # the minimum-norm solution of T z = C is Q2 R2^{-T} C.
            R2, refl2, _, _ = _qr_unpivoted(R[:rank].T.copy())
            w = _forward_substitute(R2[:rank, :rank].T, C)
            full = np.zeros((p, Y.shape[1]))
            full[:rank] = w
            z = _apply_reflectors(list(reversed(refl2)), full)
        coef[perm] = z
    return coef[:, 0] if vector else coef


def _qr_unpivoted(A):
    m, n = A.shape
    reflectors = []
    for k in range(min(m, n)):
        v, beta, alpha = _householder(A[k:, k])
        A[k:, k:] -= beta * np.outer(v, v @ A[k:, k:])
        A[k, k] = alpha
        A[k + 1 :, k] = 0.0
        reflectors.append((k, v, beta))
    return A, reflectors, None, min(m, n)


def fit_linear(X, y, intercept: bool = True):
    """Least-squares fit returning ``(coef, intercept)``.

    The intercept is unpenalised and handled by centering, so a constant
    column never competes with it for the minimum-norm solution.
    """
    X = _as_finite_2d(X)
    y = np.asarray(y, dtype=float)
    if not intercept:
        zero = 0.0 if y.ndim == 1 else np.zeros(y.shape[1])
        return least_squares(X, y), zero
    x_mean = X.mean(axis=0)
    y_mean = y.mean(axis=0)
    coef = least_squares(X - x_mean, y - y_mean)
    return coef, y_mean - x_mean @ coef


# ---------------------------------------------------------------------------
# Symmetric eigendecomposition
# ---------------------------------------------------------------------------


def sym_eigen(A, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues in descending
    order and eigenvectors as columns.  Each eigenvector is signed so that its
    largest-magnitude entry is non-negative.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("A contains NaN or Inf")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10:
        raise ValueError("matrix is not symmetric")
    n = A.shape[0]
    A = (A + A.T) / 2.0
    V = np.eye(n)
    scale = float(np.linalg.norm(A))
    for _ in range(max_sweeps):
        # direct norm; subtracting the diagonal's share cancels catastrophically
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q]
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :]
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                v_p = V[:, p].copy()
                v_q = V[:, q]
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    values = np.diag(A).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    V = V[:, order]
    lead = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[lead, np.arange(n)] < 0, -1.0, 1.0)
    return values, V * signs


# ---------------------------------------------------------------------------
# Correlation and the t distribution
# ---------------------------------------------------------------------------

_FPMIN = 1e-300
_CF_EPS = 1e-14
_CF_MAXIT = 300


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, y: float | None = None) -> float:
    """Regularized incomplete beta function I_x(a, b).

    ``y`` may carry ``1 - x`` computed without cancellation by the caller.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(y)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def t_sf(t: float, df: float) -> float:
    """Upper-tail probability P(T > t) of Student's t with ``df`` degrees of freedom."""
    if not df > 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(t):
        raise ValueError("t is NaN")
    if t == 0.0:
        return 0.5
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    t2 = t * t
    half = 0.5 * betainc(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2))
    return half if t > 0 else 1.0 - half


def t_ppf(q: float, df: float) -> float:
    """Quantile of Student's t, by bisection on :func:`t_sf`."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if q == 0.5:
        return 0.0
    upper = 1.0 - q
    if upper > 0.5:
        return -t_ppf(1.0 - q, df)
    lo, hi = 0.0, 1.0
    while t_sf(hi, df) > upper:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_sf(mid, df) > upper:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _pearson(x, y):
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def pearson_r(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be vectors of equal length")
    if x.size < 3:
        raise ValueError("pearson_r needs at least 3 samples")
    return _pearson(x, y)


def pearson_columns(X, y) -> np.ndarray:
    """Correlation of every column of ``X`` with ``y``; constant columns give 0."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    dX = X - X.mean(axis=0)
    dy = y - y.mean()
    sxx = np.einsum("ij,ij->j", dX, dX)
    syy = float(dy @ dy)
    if syy == 0.0:
        raise ValueError("zero variance")
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (dy @ dX) / np.sqrt(sxx * syy)
    r = np.where(sxx > 0.0, r, 0.0)
    return np.clip(r, -1.0, 1.0)


def pearson_p(r: float, n: int) -> float:
    """Two-sided p-value of a Pearson correlation ``r`` over ``n`` samples.

    Equal to ``2 * t_sf(|r| sqrt((n-2)/(1-r^2)), n-2)``; evaluated through the
    identity ``df / (df + t^2) = 1 - r^2`` so no cancellation occurs near |r| = 1.
    """
    if n < 3:
        raise ValueError("pearson_p needs n >= 3")
    if abs(r) > 1.0:
        raise ValueError("|r| must not exceed 1")
    if r == 0.0:
        return 1.0
    if abs(r) == 1.0:
        return 0.0
    one_minus_r2 = (1.0 - abs(r)) * (1.0 + abs(r))
    return betainc((n - 2) / 2.0, 0.5, one_minus_r2, r * r)
