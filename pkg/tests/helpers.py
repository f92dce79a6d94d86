"""Shared oracles and experiment drivers used by the unit and acceptance tests."""

from __future__ import annotations

import numpy as np

from wishlocal.densities import (
    WishartParams,
    log_ratio_direct,
    log_ratio_stable,
)
from wishlocal.expansion import expansion_terms, log_ratio_expansion
from wishlocal.sampling import sample_wishart_batch, vecp_batch
from wishlocal.symcore import SpdMatrix, spd_inv_sqrt


def random_spd(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    """A well-conditioned random SPD matrix."""
    M = rng.normal(size=(d, d))
    return scale * (M @ M.T + d * np.eye(d))


def reconstruct_from_spectrum(nu: float, S: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """X with standardized residual diag(lam): X = nu S + A^{1/2} diag(lam) A^{1/2},
    A = sqrt(2 nu) S."""
    A = np.sqrt(2.0 * nu) * np.asarray(S, dtype=float)
    w, V = np.linalg.eigh(A)
    root = (V * np.sqrt(w)) @ V.T
    X = nu * np.asarray(S, dtype=float) + root @ np.diag(lam) @ root
    return 0.5 * (X + X.T)


def stable_direct_gaps(n_configs: int, seed: int) -> np.ndarray:
    """|stable - direct| log-ratio over random (d, nu, spectrum, S) configs."""
    rng = np.random.default_rng(seed)
    gaps = np.empty(n_configs)
    for i in range(n_configs):
        d = int(rng.integers(1, 4))
        nu = float(rng.uniform(20.0, 200.0))
        lam = rng.uniform(-0.5, 0.5, size=d)
        S = random_spd(rng, d)
        X = reconstruct_from_spectrum(nu, S, lam)
        direct = log_ratio_direct(WishartParams(nu, SpdMatrix(S)), X)
        stable = log_ratio_stable(nu, d, np.sort(lam))
        gaps[i] = abs(stable - direct)
    return gaps


def residual_slope(d: int, lam, nus=(50.0, 100.0, 200.0, 400.0, 800.0)) -> float:
    """Fitted slope of log |stable log-ratio minus two-term expansion| vs log nu."""
    lam = np.asarray(lam, dtype=float)
    res = []
    for nu in nus:
        tr = [float(np.sum(lam**k)) for k in range(1, 5)]
        terms = expansion_terms(d, *tr)
        res.append(abs(log_ratio_stable(nu, d, lam) - log_ratio_expansion(nu, terms)))
    return float(np.polyfit(np.log(np.asarray(nus)), np.log(np.asarray(res)), 1)[0])


def delta_eigs_batch(nu: float, S: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Eigenvalues of the standardized residuals of a batch of matrices."""
    R = spd_inv_sqrt(np.sqrt(2.0 * nu) * S).mat
    D = np.einsum("ij,njk,kl->nil", R, X - nu * S, R)
    return np.linalg.eigvalsh(D)


def empirical_vecp_cov_z(nu: float, S: np.ndarray, n: int, seed: int):
    """(empirical covariance, theoretical covariance, entrywise z-scores) of
    vecp(W) over n Wishart draws, with standard errors estimated from the
    same sample."""
    from wishlocal.symcore import halfvec_cov

    p = WishartParams(nu, SpdMatrix(S))
    X = sample_wishart_batch(p, np.random.default_rng(seed), n)
    v = vecp_batch(X)
    u = v - v.mean(axis=0)
    emp = (u.T @ u) / (n - 1)
    theory = halfvec_cov(nu, S)
    prod = u[:, :, None] * u[:, None, :]
    se = prod.std(axis=0, ddof=1) / np.sqrt(n)
    z = (emp - theory) / se
    return emp, theory, z
