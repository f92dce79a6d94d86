"""Log-densities of the Wishart law and its matched matrix-variate normal.

The Wishart(nu, S) density on the SPD cone is compared throughout the library
with the symmetric matrix-variate normal (SMN) density that has the same mean
``nu S`` and the same covariance of the half-vectorization.  The standardized
residual

    Delta = (sqrt(2 nu) S)^{-1/2} (X - nu S) (sqrt(2 nu) S)^{-1/2}

carries all the information: the log-ratio of the two densities depends on X
and S only through (nu, d, eigenvalues of Delta), which is what the
numerically stable ``log_ratio_stable`` exploits.

All density work happens in log space (log-determinants and log-gamma only;
never a raw gamma function), so evaluations stay finite for nu up to at least
1e4 at small d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .symcore import SpdMatrix, SymMatrix, as_sym_array, sym_eigen, spd_inv_sqrt

__all__ = [
    "WishartParams",
    "SmnParams",
    "DeltaResidual",
    "delta_residual",
    "wishart_logpdf",
    "wishart_logpdf_batch",
    "smn_logpdf",
    "smn_logpdf_batch",
    "log_ratio_direct",
    "log_ratio_stable",
    "log_ratio_stable_batch",
    "gamma1d_pdf",
]


@dataclass(frozen=True)
class WishartParams:
    """Degrees of freedom and scale matrix of a Wishart distribution."""

    nu: float
    S: SpdMatrix

    def __post_init__(self):
        if not isinstance(self.S, SpdMatrix):
            object.__setattr__(self, "S", SpdMatrix(self.S))
        if not self.nu > self.S.d - 1:
            raise ValueError(f"need nu > d - 1 = {self.S.d - 1}, got nu = {self.nu}")

    @property
    def d(self) -> int:
        return self.S.d


@dataclass(frozen=True)
class SmnParams:
    """Parameters of the matched symmetric matrix-variate normal.

    Mean is ``nu S``; the covariance of the half-vectorization is
    ``symcore.halfvec_cov(nu, S)``.
    """

    nu: float
    S: SpdMatrix

    def __post_init__(self):
        if not isinstance(self.S, SpdMatrix):
            object.__setattr__(self, "S", SpdMatrix(self.S))
        if not self.nu > 0:
            raise ValueError(f"need nu > 0, got nu = {self.nu}")

    @property
    def d(self) -> int:
        return self.S.d


@dataclass(frozen=True)
class DeltaResidual:
    """Standardized residual of X around the Wishart mean, with spectrum.

    ``trace_powers[k-1]`` caches tr(Delta^k) = sum(eigenvalues^k) for k=1..4.
    """

    matrix: SymMatrix
    eigenvalues: np.ndarray
    trace_powers: tuple[float, float, float, float]


def delta_residual(p: WishartParams, X) -> DeltaResidual:
    """Standardize X: R (X - nu S) R with R = (sqrt(2 nu) S)^{-1/2}.

    X may be any symmetric matrix; it does not need to be SPD.
    """
    x = as_sym_array(X)
    if x.shape[0] != p.d:
        raise ValueError(f"X has dimension {x.shape[0]}, expected {p.d}")
    R = spd_inv_sqrt(np.sqrt(2.0 * p.nu) * p.S.mat).mat
    delta = R @ (x - p.nu * p.S.mat) @ R
    delta = SymMatrix(0.5 * (delta + delta.T))
    w = sym_eigen(delta).eigenvalues
    powers = tuple(float(np.sum(w**k)) for k in range(1, 5))
    return DeltaResidual(matrix=delta, eigenvalues=w, trace_powers=powers)


def _wishart_lognorm(nu: float, d: int, logdet_S: float) -> float:
    # log of the Wishart normalizing constant, combined with the scale term
    # so that logpdf = (nu-d-1)/2 * logdet(X) - tr(S^{-1}X)/2 + lognorm.
    i = np.arange(1, d + 1)
    return float(
        -(nu * d / 2.0) * np.log(2.0)
        - (nu / 2.0) * logdet_S
        - (d * (d - 1) / 4.0) * np.log(np.pi)
        - np.sum(gammaln((nu - (i + 1)) / 2.0 + 1.0))
    )


def wishart_logpdf(p: WishartParams, X) -> float:
    """Log-density of Wishart(nu, S) at an SPD matrix X."""
    x = np.asarray(X, dtype=float)
    if x.shape != (p.d, p.d):
        raise ValueError(f"X has shape {x.shape}, expected {(p.d, p.d)}")
    sign, logdet_x = np.linalg.slogdet(x)
    wmin = np.linalg.eigvalsh(0.5 * (x + x.T))[0]
    if sign <= 0 or wmin <= 0:
        raise ValueError("wishart_logpdf requires X to be positive definite")
    return float(wishart_logpdf_batch(p.nu, p.S.mat, x[None, :, :])[0])


def wishart_logpdf_batch(nu: float, S, X: np.ndarray) -> np.ndarray:
    """Vectorized Wishart log-density over a (..., d, d) batch of SPD matrices."""
    S = np.asarray(S, dtype=float)
    X = np.asarray(X, dtype=float)
    d = S.shape[0]
    Sinv = np.linalg.inv(S)
    _, logdet_S = np.linalg.slogdet(S)
    _, logdet_X = np.linalg.slogdet(X)
    tr = np.einsum("ij,...ji->...", Sinv, X)
    return (
        (nu - d - 1) / 2.0 * logdet_X
        - 0.5 * tr
        + _wishart_lognorm(nu, d, logdet_S)
    )


def _smn_lognorm(nu: float, d: int, logdet_S: float) -> float:
    # -(1/2) log(2^d pi^{d(d+1)/2} det(sqrt(2 nu) S)^{d+1})
    logdet_A = (d / 2.0) * np.log(2.0 * nu) + logdet_S
    return float(
        -0.5 * (d * np.log(2.0) + (d * (d + 1) / 2.0) * np.log(np.pi) + (d + 1) * logdet_A)
    )


def smn_logpdf(p: SmnParams, X) -> float:
    """Log-density of the matched SMN at a symmetric matrix X.

    Equals ``-tr(Delta^2)/2 + lognorm`` and agrees with the ordinary
    multivariate normal log-density of vecp(X) under ``halfvec_cov(nu, S)``.
    """
    x = as_sym_array(X)
    if x.shape[0] != p.d:
        raise ValueError(f"X has dimension {x.shape[0]}, expected {p.d}")
    return float(smn_logpdf_batch(p.nu, p.S.mat, x[None, :, :])[0])


def smn_logpdf_batch(nu: float, S, X: np.ndarray) -> np.ndarray:
    """Vectorized SMN log-density over a (..., d, d) batch of symmetric matrices."""
    S = np.asarray(S, dtype=float)
    X = np.asarray(X, dtype=float)
    d = S.shape[0]
    _, logdet_S = np.linalg.slogdet(S)
    R = spd_inv_sqrt(np.sqrt(2.0 * nu) * S).mat
    delta = np.einsum("ij,...jk,kl->...il", R, X - nu * S, R)
    tr2 = np.einsum("...ij,...ji->...", delta, delta)
    return -0.5 * tr2 + _smn_lognorm(nu, d, logdet_S)


def log_ratio_direct(p: WishartParams, X) -> float:
    """Wishart log-density minus SMN log-density at an SPD matrix X."""
    return wishart_logpdf(p, X) - smn_logpdf(SmnParams(p.nu, p.S), X)


def _stirling_sums(nu: float, d: int) -> float:
    # The two nu-only correction sums of the rearranged log-ratio; requires
    # nu > d + 1 so every log argument is positive.
    i = np.arange(1, d + 1)
    a = np.sum(((nu - i) / 2.0) * np.log1p(-(i + 1) / nu) + (i + 1) / 2.0)
    z = (nu - (i + 1)) / 2.0
    b = np.sum(gammaln(z + 1.0) - 0.5 * np.log(2.0 * np.pi) + z - ((nu - i) / 2.0) * np.log(z))
    return float(a + b)


def log_ratio_stable(nu: float, d: int, lambdas) -> float:
    """Wishart/SMN log-ratio from the residual spectrum alone.

    Evaluates the rearranged expression

        (nu-d-1)/2 * sum log(1 + sqrt(2/nu) l_i) - sqrt(nu/2) sum l_i
        + (1/2) sum l_i^2 - [nu-only correction sums]

    which subtracts the large normalizing terms analytically and is far
    better conditioned than differencing the two log-densities.  It depends
    on (nu, d, lambdas) only; the scale matrix cancels.

    The rearrangement divides by (nu - (i+1))/2 factors, so it needs
    nu > d + 1; for nu in (d-1, d+1] the function falls back to
    :func:`log_ratio_direct` on a reconstruction of X with S = I.
    """
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.size != d:
        raise ValueError(f"expected {d} eigenvalues, got {lam.size}")
    if np.any(1.0 + np.sqrt(2.0 / nu) * lam <= 0.0):
        raise ValueError("X outside SPD cone: need 1 + sqrt(2/nu) * lambda_i > 0")
    if nu <= d + 1:
        if nu <= d - 1:
            raise ValueError(f"need nu > d - 1 = {d - 1}, got nu = {nu}")
        # Reconstruct X from the spectrum with S = I and take the direct route.
        S = SpdMatrix(np.eye(d))
        X = nu * np.eye(d) + np.sqrt(2.0 * nu) * np.diag(lam)
        return log_ratio_direct(WishartParams(nu, S), X)
    return float(log_ratio_stable_batch(nu, d, lam[None, :])[0])


def log_ratio_stable_batch(nu: float, d: int, lam: np.ndarray) -> np.ndarray:
    """Vectorized :func:`log_ratio_stable` over rows of an (n, d) array.

    Requires nu > d + 1 (no fallback) and every row inside the SPD cone.
    """
    if not nu > d + 1:
        raise ValueError(f"stable form needs nu > d + 1 = {d + 1}, got nu = {nu}")
    lam = np.asarray(lam, dtype=float)
    x = np.sqrt(2.0 / nu) * lam
    if np.any(1.0 + x <= 0.0):
        raise ValueError("X outside SPD cone: need 1 + sqrt(2/nu) * lambda_i > 0")
    t = (
        (nu - (d + 1)) / 2.0 * np.sum(np.log1p(x), axis=-1)
        - np.sqrt(nu / 2.0) * np.sum(lam, axis=-1)
        + 0.5 * np.sum(lam**2, axis=-1)
    )
    return t - _stirling_sums(nu, d)


def gamma1d_pdf(shape: float, scale: float, x: float) -> float:
    """Gamma density, the d = 1 reference: Wishart_1(nu, s) = Gamma(nu/2, 2s)."""
    if shape <= 0 or scale <= 0:
        raise ValueError("shape and scale must be positive")
    if x <= 0:
        raise ValueError("x must be positive")
    return float(
        np.exp((shape - 1.0) * np.log(x) - x / scale - shape * np.log(scale) - gammaln(shape))
    )
