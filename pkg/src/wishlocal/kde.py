"""Asymmetric Wishart-kernel density estimation on the SPD cone.

For observations X_1..X_n on the cone and a bandwidth b > 0, the estimator is

    fhat(S) = (1/n) sum_i K_{1/b, b S}(X_i),

i.e. a Wishart kernel with 1/b degrees of freedom whose scale matrix follows
the evaluation point.  The kernel shape adapts to the cone, so there is no
mass spill-over at the boundary the way a fixed symmetric kernel would leak.

The asymptotic toolbox implemented here:

* pointwise bias          b * g(S) + o(b), with the Hessian-weighted
                          functional g,
* pointwise variance      psi(S) f(S) / (n b^{r/2}) with r = d(d+1)/2,
                          including the boundary regime where |J| eigenvalues
                          of the evaluation point shrink linearly in b and the
                          exponent steepens to r/2 + |J|(d+1)/2,
* the exact second-moment normalization A_b(S) and its small-b form,
* MSE / MISE and their optimal bandwidths (b ~ n^{-2/(r+4)}),
* the asymptotic-normality experiment for
  sqrt(n) b^{r/4} (fhat - E fhat)  =>  N(0, psi(S) f(S)).

Bias/variance/MSE/MISE routines take the true density (and its vecp-indexed
Hessian) as callbacks: the asymptotic statements are about the truth, not
about any particular estimate of it.  A plug-in bandwidth built from a pilot
estimate is provided as a clearly-labeled convenience only.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .densities import WishartParams, wishart_logpdf_batch
from .sampling import RngStream
from .symcore import (
    SpdMatrix,
    halfvec_dim,
    halfvec_second_moment_weights,
    unvecp,
    vecp_index_pairs,
)

__all__ = [
    "KdeModel",
    "BoundarySpec",
    "AsymptoticReport",
    "RegionIntegrals",
    "kde_eval",
    "r_dim",
    "psi",
    "g_functional",
    "bias_asymp",
    "variance_asymp",
    "boundary_variance_asymp",
    "boundary_scale",
    "a_b_exact",
    "a_b_asymp",
    "mse_asymp",
    "b_opt_mse",
    "mse_opt_value",
    "mise_asymp",
    "b_opt_mise",
    "mise_opt_value",
    "region_integrals",
    "normality_experiment",
    "variance_slope_experiment",
    "bias_ratio_experiment",
    "density_hessian_fd",
    "plugin_bandwidth",
    "load_dataset_csv",
    "VarianceSlopeResult",
    "BiasRatioRow",
]

# Acceptance-rate floor for the rejection sampler behind region_integrals.
REGION_MIN_ACCEPT_RATE = 1e-4


def _stack_spd(data) -> np.ndarray:
    if isinstance(data, np.ndarray) and data.ndim == 3:
        return np.asarray(data, dtype=float)
    mats = [np.asarray(x, dtype=float) for x in data]
    return np.stack(mats)


@dataclass(frozen=True)
class KdeModel:
    """Observations on the SPD cone plus the kernel bandwidth.

    The kernel must itself be a valid Wishart: 1/b > d - 1, i.e. any b > 0
    at d = 1 and b < 1/(d-1) otherwise.
    """

    data: np.ndarray
    bandwidth: float

    def __init__(self, data, bandwidth: float):
        arr = _stack_spd(data)
        if arr.shape[0] < 1:
            raise ValueError("need at least one observation")
        d = arr.shape[-1]
        if arr.ndim != 3 or arr.shape[-2] != d:
            raise ValueError(f"observations must be square matrices, got shape {arr.shape}")
        if not bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not 1.0 / bandwidth > d - 1:
            raise ValueError(
                f"inadmissible bandwidth: need 1/b > d - 1 = {d - 1}, got 1/b = {1.0 / bandwidth:g}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "bandwidth", float(bandwidth))

    @property
    def d(self) -> int:
        return self.data.shape[-1]

    @property
    def n(self) -> int:
        return self.data.shape[0]


def kde_eval(m: KdeModel, S) -> float:
    """Estimator value at S: average of Wishart(1/b, bS) kernel densities.

    S enters through the kernel scale; each observation is the kernel's
    evaluation argument.
    """
    S = np.asarray(S, dtype=float)
    b = m.bandwidth
    logk = wishart_logpdf_batch(1.0 / b, b * S, m.data)
    return float(np.mean(np.exp(logk)))


def r_dim(d: int) -> float:
    """Intrinsic dimension d(d+1)/2 of the cone; drives every rate exponent."""
    return d * (d + 1) / 2.0


def psi(K) -> float:
    """Variance constant det(sqrt(pi) K)^{-(d+1)/2} / 2^{d(d+2)/2}."""
    K = np.asarray(K, dtype=float)
    d = K.shape[0]
    _, logdet = np.linalg.slogdet(np.sqrt(np.pi) * K)
    return float(np.exp(-(d + 1) / 2.0 * logdet - d * (d + 2) / 2.0 * np.log(2.0)))


def g_functional(hessian: Callable[[np.ndarray], np.ndarray], S) -> float:
    """Hessian-weighted bias functional.

    g(S) = (1/2) sum over vecp index pairs of
    (S_{i1 j1} S_{i2 j2} + S_{i1 j2} S_{i2 j1}) * d^2 f / dS_i dS_j,
    with the Hessian supplied in vecp indexing by the callback.
    """
    S = np.asarray(S, dtype=float)
    H = np.asarray(hessian(S), dtype=float)
    W = halfvec_second_moment_weights(S)
    if H.shape != W.shape:
        raise ValueError(f"hessian must have shape {W.shape}, got {H.shape}")
    return float(0.5 * np.sum(W * H))


@dataclass(frozen=True)
class AsymptoticReport:
    """A leading-order value together with the claimed error order."""

    value: float
    leading_term: float
    claimed_error_order: str


def bias_asymp(hessian, S, b: float) -> AsymptoticReport:
    """Leading pointwise bias b * g(S) of the estimator's mean."""
    g = g_functional(hessian, S)
    return AsymptoticReport(value=b * g, leading_term=b * g, claimed_error_order="o(b)")


def variance_asymp(n: int, b: float, S, f_at_S: float) -> AsymptoticReport:
    """Leading pointwise variance psi(S) f(S) / (n b^{r(d)/2})."""
    if f_at_S < 0:
        raise ValueError("f_at_S must be nonnegative")
    S = np.asarray(S, dtype=float)
    r = r_dim(S.shape[0])
    lead = psi(S) * f_at_S / (n * b ** (r / 2.0))
    return AsymptoticReport(value=lead, leading_term=lead, claimed_error_order="O(b^{1/2}) relative + O(1/n)")


@dataclass(frozen=True)
class BoundarySpec:
    """Evaluation point drifting to the cone boundary.

    The anchor K is fixed; the eigenvalues of K indexed by J (1-based, in
    ascending spectral order) are scaled by b, so det(S) = b^{|J|} det(K).
    """

    K: SpdMatrix
    J: frozenset[int]
    b: float

    def __init__(self, K, J, b: float):
        K = K if isinstance(K, SpdMatrix) else SpdMatrix(K)
        J = frozenset(int(j) for j in J)
        if any(j < 1 or j > K.d for j in J):
            raise ValueError(f"J must be a subset of 1..{K.d}")
        if not b > 0:
            raise ValueError("b must be positive")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "b", float(b))


def boundary_scale(spec: BoundarySpec) -> np.ndarray:
    """The induced evaluation matrix V diag(lambda_b) V^T."""
    w, V = np.linalg.eigh(spec.K.mat)
    w = w.copy()
    for j in spec.J:
        w[j - 1] *= spec.b
    S = (V * w) @ V.T
    return 0.5 * (S + S.T)


def boundary_variance_asymp(n: int, spec: BoundarySpec, f_at_S: float) -> AsymptoticReport:
    """Leading variance near the boundary: the b-exponent steepens by
    (d+1)/2 for each eigenvalue of the evaluation point shrinking like b."""
    if f_at_S < 0:
        raise ValueError("f_at_S must be nonnegative")
    d = spec.K.d
    expo = r_dim(d) / 2.0 + len(spec.J) * (d + 1) / 2.0
    lead = psi(spec.K.mat) * f_at_S / n * spec.b ** (-expo)
    return AsymptoticReport(value=lead, leading_term=lead, claimed_error_order="O(b^{1/2}) relative + O(1/n)")


def a_b_exact(b: float, S) -> float:
    """Exact second-moment normalization of the kernel,

        A_b(S) = det(2 b sqrt(pi) S)^{-(d+1)/2} pi^{d/2}
                 prod_i Gamma(1/b - (d+i)/2) /
                        (2^{1/b - i} Gamma^2(1/(2b) - (i+1)/2 + 1)),

    evaluated fully in log space.  Needs 1/b > d + 1.
    """
    S = np.asarray(S, dtype=float)
    d = S.shape[0]
    if not 1.0 / b > d + 1:
        raise ValueError(f"exact form needs 1/b > d + 1 = {d + 1}, got 1/b = {1.0 / b:g}")
    _, logdet = np.linalg.slogdet(2.0 * b * np.sqrt(np.pi) * S)
    i = np.arange(1, d + 1)
    log_prod = np.sum(
        gammaln(1.0 / b - (d + i) / 2.0)
        - (1.0 / b - i) * np.log(2.0)
        - 2.0 * gammaln(1.0 / (2.0 * b) - (i + 1) / 2.0 + 1.0)
    )
    return float(np.exp(-(d + 1) / 2.0 * logdet + d / 2.0 * np.log(np.pi) + log_prod))


def a_b_asymp(b: float, S) -> float:
    """Small-b form of A_b(S): b^{-r(d)/2} psi(S)."""
    S = np.asarray(S, dtype=float)
    if not b > 0:
        raise ValueError("b must be positive")
    return float(b ** (-r_dim(S.shape[0]) / 2.0) * psi(S))


def mse_asymp(n: int, b: float, S, f_at_S: float, g_at_S: float) -> AsymptoticReport:
    """Two-term mean squared error: variance leading term plus b^2 g^2."""
    S = np.asarray(S, dtype=float)
    r = r_dim(S.shape[0])
    lead = psi(S) * f_at_S / (n * b ** (r / 2.0)) + b * b * g_at_S * g_at_S
    return AsymptoticReport(
        value=lead,
        leading_term=lead,
        claimed_error_order="O(n^{-1} b^{-r/2+1/2}) + o(b^2)",
    )


def b_opt_mse(n: int, S, f_at_S: float, g_at_S: float) -> float:
    """Minimizer of the two-term MSE: n^{-2/(r+4)} [ (r/4) psi f / g^2 ]^{2/(r+4)}."""
    if g_at_S == 0.0 or f_at_S == 0.0:
        raise ValueError("b_opt undefined: need f(S) * g(S) != 0")
    S = np.asarray(S, dtype=float)
    r = r_dim(S.shape[0])
    return float(
        n ** (-2.0 / (r + 4.0)) * ((r / 4.0) * psi(S) * f_at_S / g_at_S**2) ** (2.0 / (r + 4.0))
    )


def _opt_value(n: int, r: float, a: float, b2: float) -> float:
    # minimized value of a / (n b^{r/2}) + b^2 b2 at its closed-form optimum
    return float(
        n ** (-4.0 / (r + 4.0))
        * ((1.0 + r / 4.0) / (r / 4.0) ** (r / (r + 4.0)))
        * a ** (4.0 / (r + 4.0))
        * b2 ** (r / (r + 4.0))
    )


def mse_opt_value(n: int, S, f_at_S: float, g_at_S: float) -> float:
    """MSE at the optimal bandwidth:
    n^{-4/(r+4)} (1 + r/4) / (r/4)^{r/(r+4)} * (psi f)^{4/(r+4)} (g^2)^{r/(r+4)}."""
    S = np.asarray(S, dtype=float)
    r = r_dim(S.shape[0])
    return _opt_value(n, r, psi(S) * f_at_S, g_at_S * g_at_S)


@dataclass(frozen=True)
class RegionIntegrals:
    """Monte Carlo integrals of psi*f and g^2 over the spectral shell
    {delta <= lambda_1 <= ... <= lambda_d <= 1/delta}."""

    d: int
    delta: float
    i_psi_f: float
    i_g2: float
    stderr_psi_f: float
    stderr_g2: float
    n_accepted: int
    n_proposed: int


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def region_integrals(f, hessian, d: int, delta: float, budget: int, rng) -> RegionIntegrals:
    """Rejection-sample the vecp box [-1/delta, 1/delta]^{r(d)} and average
    the two integrands over matrices whose spectrum stays in [delta, 1/delta].
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    gen = _as_generator(rng)
    r = halfvec_dim(d)
    half = 1.0 / delta
    vol = (2.0 * half) ** r
    v = gen.uniform(-half, half, size=(budget, r))
    pairs = vecp_index_pairs(d)
    rows = np.array([p[0] for p in pairs])
    cols = np.array([p[1] for p in pairs])
    X = np.zeros((budget, d, d))
    X[:, rows, cols] = v
    X[:, cols, rows] = v
    w = np.linalg.eigvalsh(X)
    accept = (w[:, 0] >= delta) & (w[:, -1] <= 1.0 / delta)
    n_acc = int(accept.sum())
    if n_acc == 0 or n_acc < REGION_MIN_ACCEPT_RATE * budget:
        raise ValueError(
            f"region sampler accepted {n_acc}/{budget} proposals; "
            f"rate below floor {REGION_MIN_ACCEPT_RATE:g}"
        )
    vals_pf = np.zeros(budget)
    vals_g2 = np.zeros(budget)
    for idx in np.flatnonzero(accept):
        Xi = X[idx]
        vals_pf[idx] = psi(Xi) * float(f(Xi))
        gi = g_functional(hessian, Xi)
        vals_g2[idx] = gi * gi
    i_pf = vol * float(vals_pf.mean())
    i_g2 = vol * float(vals_g2.mean())
    se_pf = vol * float(vals_pf.std(ddof=1)) / math.sqrt(budget)
    se_g2 = vol * float(vals_g2.std(ddof=1)) / math.sqrt(budget)
    return RegionIntegrals(
        d=d,
        delta=delta,
        i_psi_f=i_pf,
        i_g2=i_g2,
        stderr_psi_f=se_pf,
        stderr_g2=se_g2,
        n_accepted=n_acc,
        n_proposed=budget,
    )


def _unpack_integrals(integrals, d=None) -> tuple[float, float, int]:
    if isinstance(integrals, RegionIntegrals):
        return integrals.i_psi_f, integrals.i_g2, integrals.d
    i_pf, i_g2 = integrals
    if d is None:
        raise ValueError("d is required when integrals is a plain pair")
    return float(i_pf), float(i_g2), int(d)


def mise_asymp(n: int, b: float, region_delta: float, integrals, d: int | None = None) -> AsymptoticReport:
    """Two-term mean integrated squared error over the spectral shell."""
    if not 0.0 < region_delta < 1.0:
        raise ValueError("region_delta must lie in (0, 1)")
    i_pf, i_g2, d = _unpack_integrals(integrals, d)
    r = r_dim(d)
    lead = i_pf / (n * b ** (r / 2.0)) + b * b * i_g2
    return AsymptoticReport(
        value=lead,
        leading_term=lead,
        claimed_error_order="o(n^{-1} b^{-r/2}) + o(b^2)",
    )


def b_opt_mise(n: int, integrals, d: int | None = None) -> float:
    """Optimal MISE bandwidth: n^{-2/(r+4)} [ (r/4) * I(psi f) / I(g^2) ]^{2/(r+4)}."""
    i_pf, i_g2, d = _unpack_integrals(integrals, d)
    if i_g2 <= 0.0:
        raise ValueError("b_opt undefined: need a positive integral of g^2")
    r = r_dim(d)
    return float(n ** (-2.0 / (r + 4.0)) * ((r / 4.0) * i_pf / i_g2) ** (2.0 / (r + 4.0)))


def mise_opt_value(n: int, integrals, d: int | None = None) -> float:
    """MISE at the optimal bandwidth (closed form, mirrors mse_opt_value)."""
    i_pf, i_g2, d = _unpack_integrals(integrals, d)
    return _opt_value(n, r_dim(d), i_pf, i_g2)


def normality_experiment(
    f_sampler,
    n: int,
    b: float,
    S,
    replicates: int,
    rng: RngStream,
    f_at_S: float,
    center: str = "replicate_mean",
    g_at_S: float | None = None,
) -> np.ndarray:
    """Standardized replicate values of the estimator at S.

    With ``center="replicate_mean"`` each replicate contributes

        sqrt(n) b^{r/4} (fhat_i(S) - mean of fhat) / sqrt(psi(S) f(S)),

    which should be close to standard normal when sqrt(n) b^{r/4} is large
    (a warning fires below 5).  With ``center="bias_limit"`` the values are
    standardized against the biased limit N(lam g(S), lam^{-r/2} psi f) with
    lam = n^{2/(r+4)} b, which requires ``g_at_S``.

    ``f_sampler(generator, count)`` must return i.i.d. SPD draws (count, d, d).
    """
    if replicates < 2:
        raise ValueError("insufficient replicates: need at least 2")
    if center not in ("replicate_mean", "bias_limit"):
        raise ValueError(f"unknown centering {center!r}")
    if center == "bias_limit" and g_at_S is None:
        raise ValueError("center='bias_limit' requires g_at_S")
    S = np.asarray(S, dtype=float)
    d = S.shape[0]
    r = r_dim(d)
    if f_at_S <= 0:
        raise ValueError("f_at_S must be positive")
    rate = math.sqrt(n) * b ** (r / 4.0)
    if rate < 5.0:
        warnings.warn(
            f"sqrt(n) b^{{r/4}} = {rate:.2f} < 5: normal limit may be far", RuntimeWarning, stacklevel=2
        )
    fhat = np.empty(replicates)
    for i in range(replicates):
        gen = rng.substream_generator(i)
        X = f_sampler(gen, n)
        logk = wishart_logpdf_batch(1.0 / b, b * S, np.asarray(X, dtype=float))
        fhat[i] = np.mean(np.exp(logk))
    if center == "replicate_mean":
        return rate * (fhat - fhat.mean()) / math.sqrt(psi(S) * f_at_S)
    lam = n ** (2.0 / (r + 4.0)) * b
    sd = math.sqrt(lam ** (-r / 2.0) * psi(S) * f_at_S)
    return (n ** (2.0 / (r + 4.0)) * (fhat - f_at_S) - lam * g_at_S) / sd


# ---------------------------------------------------------------------------
# Monte Carlo experiment drivers (used by the CLI and the acceptance suite)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarianceSlopeResult:
    rows: tuple  # (b, mc_var, pred_var, ratio) per bandwidth
    slope: float
    slope_target: float


def _replicated_kde_values(
    p_true: WishartParams, S_eval: np.ndarray, b: float, n: int, replicates: int, rng: RngStream, tag: int
) -> np.ndarray:
    """fhat(S_eval) for `replicates` independent datasets of size n."""
    from .sampling import sample_wishart_batch

    fhat = np.empty(replicates)
    chunk = max(1, min(replicates, 2_000_000 // max(1, n)))
    i = 0
    while i < replicates:
        m = min(chunk, replicates - i)
        gen = rng.substream_generator((tag, i))
        X = sample_wishart_batch(p_true, gen, m * n).reshape(m, n, p_true.d, p_true.d)
        logk = wishart_logpdf_batch(1.0 / b, b * S_eval, X)
        fhat[i : i + m] = np.exp(logk).mean(axis=1)
        i += m
    return fhat


def variance_slope_experiment(
    p_true: WishartParams,
    K,
    J: Sequence[int],
    b_list: Sequence[float],
    n: int,
    replicates: int,
    rng: RngStream,
) -> VarianceSlopeResult:
    """Fit the log-variance / log-bandwidth slope of the estimator at a fixed
    (or boundary-drifting) evaluation point, against the predicted exponent
    -(r/2 + |J|(d+1)/2).

    Data are drawn from the Wishart density ``p_true`` (the known truth), the
    evaluation anchor is K, and J lists the eigenvalue indices of K scaled by
    b (empty J = interior point).
    """
    K = K if isinstance(K, SpdMatrix) else SpdMatrix(K)
    d = K.d
    mc_vars, preds, rows = [], [], []
    for bi, b in enumerate(b_list):
        spec = BoundarySpec(K, J, b)
        S_eval = boundary_scale(spec)
        f_S = float(np.exp(wishart_logpdf_batch(p_true.nu, p_true.S.mat, S_eval[None])[0]))
        pred = boundary_variance_asymp(n, spec, f_S).leading_term
        fhat = _replicated_kde_values(p_true, S_eval, b, n, replicates, rng, tag=bi)
        v = float(fhat.var(ddof=1))
        mc_vars.append(v)
        preds.append(pred)
        rows.append((float(b), v, pred, v / pred))
    slope = float(np.polyfit(np.log(np.asarray(b_list)), np.log(np.asarray(mc_vars)), 1)[0])
    target = -(r_dim(d) / 2.0 + len(tuple(J)) * (d + 1) / 2.0)
    return VarianceSlopeResult(rows=tuple(rows), slope=slope, slope_target=target)


@dataclass(frozen=True)
class BiasRatioRow:
    b: float
    f_true: float
    g_true: float
    bias_kernel: float
    bias_kernel_se: float
    bias_repr: float
    bias_repr_se: float

    @property
    def ratio_kernel(self) -> float:
        return self.bias_kernel / (self.b * self.g_true)

    @property
    def ratio_repr(self) -> float:
        return self.bias_repr / (self.b * self.g_true)


def bias_ratio_experiment(
    p_true: WishartParams,
    hessian,
    S_eval,
    b_list: Sequence[float],
    n_kernel: int,
    n_repr: int,
    rng: RngStream,
) -> list[BiasRatioRow]:
    """Measure (E fhat_b - f) / (b g) at S_eval with two estimators of E fhat_b:

    * kernel average over fresh draws from the truth (the estimator's own
      mean, n_kernel evaluations), and
    * the smoothing representation E fhat_b(S) = E f(W_S) with
      W_S ~ Wishart(1/b, b S) (n_repr evaluations, much lower variance).

    The two must agree within Monte Carlo error; the ratio tends to 1 as
    b -> 0 wherever g != 0.
    """
    from .sampling import sample_wishart_batch

    S_eval = np.asarray(S_eval, dtype=float)
    f_S = float(np.exp(wishart_logpdf_batch(p_true.nu, p_true.S.mat, S_eval[None])[0]))
    g_S = g_functional(hessian, S_eval)
    out = []
    for bi, b in enumerate(b_list):
        gen = rng.substream_generator((0, bi))
        X = sample_wishart_batch(p_true, gen, n_kernel)
        k_vals = np.exp(wishart_logpdf_batch(1.0 / b, b * S_eval, X))
        fb_kernel = float(k_vals.mean())
        se_kernel = float(k_vals.std(ddof=1)) / math.sqrt(n_kernel)

        gen2 = rng.substream_generator((1, bi))
        kernel_params = WishartParams(1.0 / b, SpdMatrix(b * S_eval))
        W = sample_wishart_batch(kernel_params, gen2, n_repr)
        f_vals = np.exp(wishart_logpdf_batch(p_true.nu, p_true.S.mat, W))
        fb_repr = float(f_vals.mean())
        se_repr = float(f_vals.std(ddof=1)) / math.sqrt(n_repr)

        out.append(
            BiasRatioRow(
                b=float(b),
                f_true=f_S,
                g_true=g_S,
                bias_kernel=fb_kernel - f_S,
                bias_kernel_se=se_kernel,
                bias_repr=fb_repr - f_S,
                bias_repr_se=se_repr,
            )
        )
    return out


def density_hessian_fd(f, d: int, step: float = 1e-4) -> Callable[[np.ndarray], np.ndarray]:
    """Finite-difference Hessian of a density callback in vecp indexing.

    Convenience for truths without a closed-form Hessian; central differences
    with a fixed absolute step.  Perturbing an off-diagonal vecp coordinate
    moves the (i, j) and (j, i) entries together.
    """
    pairs = vecp_index_pairs(d)
    r = len(pairs)

    def basis(k: int) -> np.ndarray:
        i, j = pairs[k]
        E = np.zeros((d, d))
        E[i, j] = 1.0
        E[j, i] = 1.0
        return E

    def hessian(S: np.ndarray) -> np.ndarray:
        S = np.asarray(S, dtype=float)
        H = np.empty((r, r))
        f0 = float(f(S))
        for a in range(r):
            Ea = basis(a)
            for b_ in range(a, r):
                Eb = basis(b_)
                if a == b_:
                    val = (float(f(S + step * Ea)) - 2.0 * f0 + float(f(S - step * Ea))) / step**2
                else:
                    val = (
                        float(f(S + step * Ea + step * Eb))
                        - float(f(S + step * Ea - step * Eb))
                        - float(f(S - step * Ea + step * Eb))
                        + float(f(S - step * Ea - step * Eb))
                    ) / (4.0 * step**2)
                H[a, b_] = val
                H[b_, a] = val
        return H

    return hessian


def plugin_bandwidth(data, rng, pilot_b: float | None = None) -> float:
    """Convenience plug-in bandwidth (pilot estimate + finite differences).

    This is a pragmatic helper, not an asymptotic statement: it builds a pilot
    estimator, differentiates it numerically at the sample mean, and plugs the
    results into the closed-form MSE-optimal bandwidth.  Only finiteness and
    positivity are promised.
    """
    arr = _stack_spd(data)
    n, d = arr.shape[0], arr.shape[-1]
    r = r_dim(d)
    if pilot_b is None:
        pilot_b = float(n ** (-2.0 / (r + 4.0)))
        if d >= 2:
            pilot_b = min(pilot_b, 0.5 / (d - 1))
    model = KdeModel(arr, pilot_b)
    S0 = arr.mean(axis=0)
    f0 = max(kde_eval(model, S0), 1e-300)
    scale = float(np.trace(S0)) / d
    hess = density_hessian_fd(lambda S: kde_eval(model, S), d, step=1e-2 * scale)
    g0 = g_functional(hess, S0)
    if g0 == 0.0 or not np.isfinite(g0):
        return pilot_b
    b = b_opt_mse(n, S0, f0, g0)
    if not np.isfinite(b) or b <= 0:
        return pilot_b
    if d >= 2:
        b = min(b, 0.9 / (d - 1))
    return float(b)


def load_dataset_csv(path) -> tuple[int, np.ndarray]:
    """Read SPD observations from CSV.

    Header row names the columns ``d,<entry names...>``; every data row holds
    the common dimension d followed by the vecp entries of one observation
    (so d(d+1)/2 value columns).  Rows whose reconstruction is not SPD are
    rejected with the offending row number.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty dataset file") from None
        if not header or header[0].strip().lower() != "d":
            raise ValueError("dataset header must start with a 'd' column")
        mats = []
        d = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            row_d = int(row[0])
            if d is None:
                d = row_d
            elif row_d != d:
                raise ValueError(f"row {lineno}: dimension {row_d} != {d}")
            vals = np.asarray([float(x) for x in row[1:]], dtype=float)
            if vals.size != halfvec_dim(d):
                raise ValueError(
                    f"row {lineno}: expected {halfvec_dim(d)} entries for d={d}, got {vals.size}"
                )
            M = unvecp(vals)
            try:
                mats.append(SpdMatrix(M).mat)
            except ValueError as exc:
                raise ValueError(f"row {lineno}: observation is not SPD ({exc})") from None
    if not mats:
        raise ValueError("dataset contains no observations")
    return d, np.stack(mats)
