"""Small dense linear algebra over matrices whose entries are jets or floats.

Matrix dimensions here are chart dimensions (tiny), so explicit loops are
used throughout.  Inverses and log-determinants of jet-valued symmetric
matrices expand around the constant term, which is exact because the
non-constant part is nilpotent in a truncated algebra.
"""

from __future__ import annotations

import numpy as np

from finslerkit.jets import Jet, JetAlgebra

__all__ = [
    "entry_value",
    "value_matrix",
    "matmul",
    "matvec",
    "jet_matrix_inverse",
    "jet_logdet",
    "field_derivatives",
    "spd_solve",
]


def entry_value(e) -> float:
    return e.value if isinstance(e, Jet) else float(e)


def value_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=object)
    out = np.empty(M.shape, dtype=float)
    for idx in np.ndindex(M.shape):
        out[idx] = entry_value(M[idx])
    return out


def matmul(A, B):
    """Object-dtype matrix product (supports mixed float/jet entries)."""
    A = np.asarray(A, dtype=object)
    B = np.asarray(B, dtype=object)
    n, m = A.shape
    m2, p = B.shape
    if m != m2:
        raise ValueError("shape mismatch")
    out = np.empty((n, p), dtype=object)
    for i in range(n):
        for j in range(p):
            acc = A[i, 0] * B[0, j]
            for k in range(1, m):
                acc = acc + A[i, k] * B[k, j]
            out[i, j] = acc
    return out


def matvec(A, v):
    A = np.asarray(A, dtype=object)
    n, m = A.shape
    out = []
    for i in range(n):
        acc = A[i, 0] * v[0]
        for k in range(1, m):
            acc = acc + A[i, k] * v[k]
        out.append(acc)
    return out


def _split_constant(G):
    """(constant float matrix, nilpotent remainder as object matrix)."""
    G = np.asarray(G, dtype=object)
    n, m = G.shape
    G0 = np.empty((n, m), dtype=float)
    N = np.empty((n, m), dtype=object)
    for i in range(n):
        for j in range(m):
            v = entry_value(G[i, j])
            G0[i, j] = v
            N[i, j] = G[i, j] - v
    return G0, N


def jet_matrix_inverse(G, alg: JetAlgebra):
    """Inverse of a jet-valued matrix via the nilpotent Neumann expansion.

    With G = G0 + N and M = -G0^{-1} N, the exact truncated inverse is
    (I + M + M^2 + ...) G0^{-1}; the series terminates at the algebra's total
    degree because N has no constant term.
    """
    G0, N = _split_constant(G)
    G0inv = np.linalg.inv(G0)
    M = matmul(-G0inv.astype(object), N)
    n = G0.shape[0]
    acc = np.asarray(G0inv, dtype=object).copy()
    term = np.asarray(G0inv, dtype=object).copy()
    for _ in range(alg.max_total):
        term = matmul(M, term)
        acc = acc + term
    return acc


def jet_logdet(G, alg: JetAlgebra):
    """log det of a jet-valued matrix with positive-definite constant term."""
    G0, N = _split_constant(G)
    sign, logdet0 = np.linalg.slogdet(G0)
    if sign <= 0:
        raise np.linalg.LinAlgError("matrix constant term is not positive definite")
    M = matmul(np.linalg.inv(G0).astype(object), N)
    total = alg.constant(logdet0)
    term = np.asarray(np.eye(G0.shape[0]), dtype=object)
    for k in range(1, alg.max_total + 1):
        term = matmul(term, M)
        trace = term[0, 0]
        for i in range(1, G0.shape[0]):
            trace = trace + term[i, i]
        total = total + ((-1.0) ** (k + 1) / k) * trace
    return total


def field_derivatives(field, point, n: int):
    """(value, first derivatives) of a matrix field at a chart point.

    Returns ``(M0, dM)`` with ``M0[i, j]`` the entry values and
    ``dM[k, i, j]`` the exact derivative of entry (i, j) along coordinate k.
    """
    from finslerkit.jets import algebra

    alg = algebra((n,), (1,))
    xj = alg.variables([float(v) for v in point])
    M = np.asarray(field(xj), dtype=object)
    rows, cols = M.shape
    M0 = np.empty((rows, cols), dtype=float)
    dM = np.zeros((n, rows, cols), dtype=float)
    for i in range(rows):
        for j in range(cols):
            e = M[i, j]
            if isinstance(e, Jet):
                M0[i, j] = e.value
                for k in range(n):
                    exps = [0] * n
                    exps[k] = 1
                    dM[k, i, j] = e.partial(exps)
            else:
                M0[i, j] = float(e)
    return M0, dM


def spd_solve(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve G x = rhs for symmetric positive definite G via Cholesky."""
    from scipy.linalg import cho_factor, cho_solve

    return cho_solve(cho_factor(G, lower=True), rhs)
