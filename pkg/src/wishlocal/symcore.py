"""Dense symmetric-matrix algebra on the SPD cone.

Everything downstream (densities, expansions, kernel estimators) works with
small dense symmetric matrices.  This module provides the half-vectorization
``vecp`` and its inverse, symmetric eigendecompositions, SPD inverse square
roots, spectral trace powers, and the covariance operator of the
half-vectorized Wishart law together with its determinant identity.

Conventions
-----------
* ``vecp`` stacks the columns of the upper triangle:
  ``(M11, M12, M22, M13, M23, M33, ..., Mdd)``.
* Eigenvalues are always returned in ascending order.
* All values are immutable after construction and safe to share across
  threads; every operation is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NumericalError",
    "SymMatrix",
    "SpdMatrix",
    "EigenDecomp",
    "vecp",
    "unvecp",
    "vecp_index_pairs",
    "sym_eigen",
    "spd_inv_sqrt",
    "trace_power",
    "halfvec_cov",
    "halfvec_second_moment_weights",
    "halfvec_dim",
]

# Relative floor for the smallest eigenvalue of an SPD matrix.  Chosen so
# that boundary experiments can build matrices with eigenvalues proportional
# to a bandwidth b >= 1e-10 without tripping the check.
SPD_EIG_FLOOR = 1e-12

# Relative tolerance for accepting an input array as symmetric.
_SYM_RTOL = 1e-8


class NumericalError(RuntimeError):
    """A numerical routine (eigensolver, ...) failed to converge."""


def _as_square_array(entries) -> np.ndarray:
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValueError("matrix dimension must be >= 1")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


class SymMatrix:
    """A d x d real symmetric matrix.

    The upper triangle of the input is authoritative: storage mirrors it onto
    the lower triangle so that ``entries[i, j] == entries[j, i]`` holds
    exactly.  Inputs whose two triangles disagree beyond a small relative
    tolerance are rejected.
    """

    __slots__ = ("mat",)

    def __init__(self, entries):
        a = _as_square_array(entries)
        scale = max(1.0, float(np.abs(a).max()))
        if np.abs(a - a.T).max() > _SYM_RTOL * scale:
            raise ValueError("matrix is not symmetric")
        m = np.triu(a) + np.triu(a, 1).T
        m.setflags(write=False)
        self.mat = m

    @property
    def d(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)

    def __repr__(self) -> str:
        return f"SymMatrix({self.mat.tolist()!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, SymMatrix) and np.array_equal(self.mat, other.mat)

    def __hash__(self):
        return hash(self.mat.tobytes())


class SpdMatrix:
    """A symmetric positive definite matrix.

    Construction checks the spectrum: the smallest eigenvalue must exceed
    ``SPD_EIG_FLOOR`` times the largest.
    """

    __slots__ = ("base",)

    def __init__(self, entries):
        base = entries if isinstance(entries, SymMatrix) else SymMatrix(entries)
        w = np.linalg.eigvalsh(base.mat)
        if w[0] <= SPD_EIG_FLOOR * w[-1] or w[-1] <= 0.0:
            raise ValueError(
                f"matrix is not positive definite: eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}]"
            )
        self.base = base

    @property
    def mat(self) -> np.ndarray:
        return self.base.mat

    @property
    def d(self) -> int:
        return self.base.d

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)

    def __repr__(self) -> str:
        return f"SpdMatrix({self.mat.tolist()!r})"


@dataclass(frozen=True)
class EigenDecomp:
    """Spectral decomposition M = V diag(w) V^T with ``w`` ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_sym_array(M) -> np.ndarray:
    """Return the ndarray behind ``M``, validating symmetry for raw arrays."""
    if isinstance(M, (SymMatrix, SpdMatrix)):
        return M.mat
    return SymMatrix(M).mat


def halfvec_dim(d: int) -> int:
    """Length d(d+1)/2 of the half-vectorization of a d x d symmetric matrix."""
    return d * (d + 1) // 2


def vecp_index_pairs(d: int) -> list[tuple[int, int]]:
    """0-based (row, col) pairs, row <= col, in vecp order.

    Position ``(i2 - 1) i2 / 2 + i1`` (1-based) holds entry ``(i1, i2)``.
    """
    return [(i, j) for j in range(d) for i in range(j + 1)]


def vecp(M) -> np.ndarray:
    """Half-vectorize: stack the columns of the upper triangle.

    ``[[1, 2], [2, 3]] -> (1, 2, 3)``.
    """
    a = as_sym_array(M)
    d = a.shape[0]
    return np.concatenate([a[: j + 1, j] for j in range(d)])


def unvecp(v) -> SymMatrix:
    """Inverse of :func:`vecp`; the length must be a triangular number."""
    v = np.asarray(v, dtype=float).ravel()
    r = v.size
    d = int(round((np.sqrt(8.0 * r + 1.0) - 1.0) / 2.0))
    if halfvec_dim(d) != r:
        raise ValueError(f"length {r} is not a triangular number d(d+1)/2")
    m = np.zeros((d, d))
    k = 0
    for j in range(d):
        m[: j + 1, j] = v[k : k + j + 1]
        k += j + 1
    return SymMatrix(m + np.triu(m, 1).T)


def sym_eigen(M) -> EigenDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Uses a symmetric-specific solver (LAPACK ``syevd``); raises
    :class:`NumericalError` with a condition report if it fails to converge.
    """
    a = as_sym_array(M)
    try:
        w, V = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - hard to trigger
        norm = float(np.abs(a).max())
        raise NumericalError(
            f"symmetric eigendecomposition failed for d={a.shape[0]}, max|entry|={norm:.3e}: {exc}"
        ) from exc
    w = np.asarray(w, dtype=float)
    w.setflags(write=False)
    V.setflags(write=False)
    return EigenDecomp(eigenvalues=w, eigenvectors=V)


def spd_inv_sqrt(S) -> SpdMatrix:
    """Symmetric R with R S R = I, computed spectrally to preserve symmetry."""
    a = as_sym_array(S)
    w, V = np.linalg.eigh(a)
    if w[0] <= SPD_EIG_FLOOR * w[-1] or w[-1] <= 0.0:
        raise ValueError("spd_inv_sqrt requires a positive definite matrix")
    R = (V / np.sqrt(w)) @ V.T
    return SpdMatrix(0.5 * (R + R.T))


def trace_power(M, k: int) -> float:
    """tr(M^k) as the sum of k-th powers of the eigenvalues.

    Computed from the spectrum rather than repeated matrix products, so it
    stays stable for large k.
    """
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    w = sym_eigen(M).eigenvalues
    return float(np.sum(w ** int(k)))


def halfvec_second_moment_weights(S) -> np.ndarray:
    """The nu-free pair-product matrix with entries
    ``S[i1,j1] S[i2,j2] + S[i1,j2] S[i2,j1]`` over vecp index pairs.

    ``halfvec_cov(nu, S)`` is nu times this matrix; the bias functional of
    the kernel estimator uses it directly as Hessian weights.
    """
    a = np.asarray(S, dtype=float)
    d = a.shape[0]
    pairs = vecp_index_pairs(d)
    i1, i2 = np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])
    C = a[np.ix_(i1, i1)] * a[np.ix_(i2, i2)] + a[np.ix_(i1, i2)] * a[np.ix_(i2, i1)]
    return 0.5 * (C + C.T)


def halfvec_cov(nu: float, S) -> np.ndarray:
    """Covariance of vecp(W) for W ~ Wishart(nu, S).

    Entry for vecp positions (i1 <= i2), (j1 <= j2) is
    ``nu * (S[i1,j1] S[i2,j2] + S[i1,j2] S[i2,j1])``, the standard Wishart
    second-moment identity.  The result is symmetric positive semidefinite
    and satisfies ``det = 2^{-d(d-1)/2} det(sqrt(2 nu) S)^{d+1}``.
    """
    a = np.asarray(S, dtype=float)
    d = a.shape[0]
    if not nu > d - 1:
        raise ValueError(f"need nu > d - 1 = {d - 1}, got nu = {nu}")
    return nu * halfvec_second_moment_weights(a)
