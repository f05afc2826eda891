"""Hot kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and ``OPTOROUTER_DISABLE_NUMBA``
is unset (or ``0``). Every public kernel takes an optional ``backend``
argument (``"numba"`` or ``"numpy"``) so both paths can be compared in one
process.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # TBB shipped with some distributions is too old; omp is safe for nested callers
        numba.config.THREADING_LAYER = "omp"
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_disabled = os.environ.get("OPTOROUTER_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")
BACKEND = "numba" if HAS_NUMBA and not _disabled else "numpy"


def _resolve(backend: str | None) -> str:
    backend = backend or BACKEND
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


def set_threads(n: int) -> int:
    """Set the numba worker count (0 = all cores). Returns the count in effect."""
    if not HAS_NUMBA:
        return 1
    if n <= 0:
        n = numba.config.NUMBA_DEFAULT_NUM_THREADS
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return numba.get_num_threads()


# -- small dense complex solves ---------------------------------------------

def _solve_numpy(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    det = np.linalg.det(A)
    X = np.full(B.shape, np.nan + 0j)
    ok = det != 0
    if ok.any():
        X[ok] = np.linalg.solve(A[ok], B[ok])
    return X, det


if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _solve_numba(A, B):  # pragma: no cover - compiled
        N, n, _ = A.shape
        m = B.shape[2]
        X = np.empty(B.shape, dtype=np.complex128)
        det = np.empty(N, dtype=np.complex128)
        for idx in prange(N):
            a = A[idx].copy()
            b = B[idx].copy()
            d = 1.0 + 0.0j
            singular = False
            for k in range(n):
                p = k
                best = abs(a[k, k])
                for i in range(k + 1, n):
                    v = abs(a[i, k])
                    if v > best:
                        best = v
                        p = i
                if best == 0.0:
                    singular = True
                    break
                if p != k:
                    for j in range(n):
                        t = a[k, j]
                        a[k, j] = a[p, j]
                        a[p, j] = t
                    for j in range(m):
                        t = b[k, j]
                        b[k, j] = b[p, j]
                        b[p, j] = t
                    d = -d
                piv = a[k, k]
                d *= piv
                for i in range(k + 1, n):
                    f = a[i, k] / piv
                    if f != 0.0:
                        for j in range(k + 1, n):
                            a[i, j] -= f * a[k, j]
                        for j in range(m):
                            b[i, j] -= f * b[k, j]
                    a[i, k] = 0.0
            if singular:
                det[idx] = 0.0
                for i in range(n):
                    for j in range(m):
                        X[idx, i, j] = np.nan
                continue
            det[idx] = d
            for j in range(m):
                for i in range(n - 1, -1, -1):
                    s = b[i, j]
                    for l in range(i + 1, n):
                        s -= a[i, l] * X[idx, l, j]
                    X[idx, i, j] = s / a[i, i]
        return X, det


def solve_batched(A: np.ndarray, B: np.ndarray, backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``A[i] @ X[i] = B[i]`` for a stack of small square systems.

    Partial-pivoted Gaussian elimination. Returns ``(X, det)``; rows of a
    singular system are NaN and their determinant is 0.
    """
    A = np.ascontiguousarray(A, dtype=np.complex128)
    B = np.ascontiguousarray(B, dtype=np.complex128)
    if A.ndim != 3 or A.shape[1] != A.shape[2] or B.shape[:2] != A.shape[:2]:
        raise ValueError(f"incompatible shapes {A.shape} and {B.shape}")
    if _resolve(backend) == "numba":
        return _solve_numba(A, B)
    return _solve_numpy(A, B)


# -- closed-form response -----------------------------------------------------

def _closed_form(w, k, delta, w2, mu2, g1, g2, G, Lam):
    """Hand-eliminated solution of the scaled 4x4 fluctuation system.

    Returns the scaled (E, F, V1, V2, d). ``d`` is the determinant of the
    system matrix, a polynomial in ``w`` without poles.
    """
    a = 2.0 * k + 1j * (delta - w)
    b = 2.0 * k - 1j * (delta + w)
    chi1 = 1.0 - w * w - 1j * g1 * w
    chi2 = mu2 * (w2 * w2 - w * w - 1j * g2 * w)
    n = G.real * G.real + G.imag * G.imag
    d = a * b * (chi1 * chi2 - Lam * Lam) - 2.0 * delta * n * chi2
    r = np.sqrt(2.0 * k)
    E = r / a + 1j * r * n * chi2 * b / (a * d)
    F = 1j * r * G * G * chi2 / d
    V1 = 1j * G * chi2 * b / d
    V2 = -1j * G * Lam * b / d
    return E, F, V1, V2, d


if HAS_NUMBA:
    _closed_form_numba = njit(cache=True)(_closed_form)


def closed_form(w: np.ndarray, k, delta, w2, mu2, g1, g2, G, Lam, backend: str | None = None):
    w = np.ascontiguousarray(w, dtype=np.float64)
    args = (float(k), float(delta), float(w2), float(mu2), float(g1), float(g2), complex(G), float(Lam))
    if _resolve(backend) == "numba":
        return _closed_form_numba(w, *args)
    return _closed_form(w, *args)
