"""Wishart / SMN random generation and exact trace-moment verification.

Wishart draws use the Bartlett construction W = L A A^T L^T with S = L L^T,
lower-triangular A, A_ii^2 ~ chi-square(nu - i + 1) and standard normal
subdiagonals.  Fractional degrees of freedom are supported because the
diagonal chi-squares are realized as 2 * Gamma((nu - i + 1)/2, 1).

Exact moments of the standardized residual Delta are available in closed
form for trace powers up to four:

    E tr(Delta)   = 0
    E tr(Delta^2) = d(d+1)/2
    E tr(Delta^3) = nu^{-1/2} d(d^2 + 3d + 4) / (2 sqrt(2))
    E tr(Delta^4) = d(2d^2 + 5d + 5)/4 + nu^{-1} d(d^3 + 6d^2 + 21d + 20)/4

(the S = I values; tr(Delta^k) is similarity-invariant so they hold for
every scale matrix).  Monte Carlo estimates are produced by a deterministic
stream-splitting driver: the sample is partitioned into a fixed number of
substreams, each substream gets its own generator derived from
(seed, stream_id, substream index), and per-substream moments are combined
with a Welford-style merge in substream order, so the result depends only on
the seed, never on the worker count.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .symcore import SpdMatrix, halfvec_cov, spd_inv_sqrt, vecp_index_pairs
from .densities import WishartParams, SmnParams

__all__ = [
    "RngStream",
    "MomentReport",
    "worker_count",
    "sample_wishart",
    "sample_wishart_batch",
    "sample_smn",
    "sample_smn_batch",
    "vecp_batch",
    "delta_trace_powers_batch",
    "trace_moment_exact",
    "mc_trace_moment",
    "moment_bound_on_event",
    "density_sup_bound",
]

# Number of substreams an MC run is split into; fixed so that estimates are
# reproducible no matter how many workers execute them.
N_SUBSTREAMS = 16


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream: same (seed, stream_id) -> same sequence."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence((self.seed, self.stream_id)))

    def substream_generator(self, k) -> np.random.Generator:
        """Generator for substream k (an int or a tuple of ints) of this stream."""
        key = (k,) if isinstance(k, int) else tuple(int(x) for x in k)
        return np.random.default_rng(np.random.SeedSequence((self.seed, self.stream_id) + key))


def worker_count() -> int:
    """Worker cap for parallel drivers; the WSL_THREADS env var overrides."""
    env = os.environ.get("WSL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def sample_wishart_batch(p: WishartParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """n Bartlett draws from Wishart(nu, S), shape (n, d, d)."""
    d = p.d
    L = np.linalg.cholesky(p.S.mat)
    A = np.zeros((n, d, d))
    for i in range(d):
        # chi-square(nu - i) for the (i+1)-th diagonal entry, 0-based i
        A[:, i, i] = np.sqrt(2.0 * rng.gamma((p.nu - i) / 2.0, 1.0, size=n))
        for j in range(i):
            A[:, i, j] = rng.standard_normal(n)
    LA = np.einsum("ij,njk->nik", L, A)
    W = np.einsum("nij,nkj->nik", LA, LA)
    return 0.5 * (W + np.swapaxes(W, 1, 2))


def sample_wishart(p: WishartParams, rng: RngStream) -> SpdMatrix:
    """One Wishart draw; deterministic function of the stream."""
    return SpdMatrix(sample_wishart_batch(p, rng.generator(), 1)[0])


def _halfvec_chol(nu: float, S: np.ndarray) -> np.ndarray:
    C = halfvec_cov(nu, S)
    # halfvec_cov is positive definite for SPD S; a tiny jitter guards the
    # factorization against roundoff at extreme conditioning.
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        eps = 1e-14 * np.trace(C) / C.shape[0]
        return np.linalg.cholesky(C + eps * np.eye(C.shape[0]))


def _unvecp_batch(v: np.ndarray, d: int) -> np.ndarray:
    pairs = vecp_index_pairs(d)
    rows = np.array([p[0] for p in pairs])
    cols = np.array([p[1] for p in pairs])
    out = np.zeros(v.shape[:-1] + (d, d))
    out[..., rows, cols] = v
    out[..., cols, rows] = v
    return out


def vecp_batch(X: np.ndarray) -> np.ndarray:
    """vecp of a (..., d, d) batch of symmetric matrices, shape (..., d(d+1)/2)."""
    d = X.shape[-1]
    pairs = vecp_index_pairs(d)
    rows = np.array([p[0] for p in pairs])
    cols = np.array([p[1] for p in pairs])
    return X[..., rows, cols]


def sample_smn_batch(p: SmnParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """n draws from the matched SMN: Gaussian in vecp coordinates, shape (n, d, d)."""
    d = p.d
    C = _halfvec_chol(p.nu, p.S.mat)
    z = rng.standard_normal((n, C.shape[0]))
    v = p.nu * vecp_batch(p.S.mat[None])[0] + z @ C.T
    return _unvecp_batch(v, d)


def sample_smn(p: SmnParams, rng: RngStream) -> np.ndarray:
    """One SMN draw (a symmetric, not necessarily SPD, matrix)."""
    return sample_smn_batch(p, rng.generator(), 1)[0]


def delta_trace_powers_batch(p: WishartParams, X: np.ndarray) -> np.ndarray:
    """tr(Delta^k), k = 1..4, of the standardized residuals of X; shape (4, n)."""
    R = spd_inv_sqrt(np.sqrt(2.0 * p.nu) * p.S.mat).mat
    D = np.einsum("ij,njk,kl->nil", R, X - p.nu * p.S.mat, R)
    D2 = D @ D
    t1 = np.einsum("nii->n", D)
    t2 = np.einsum("nij,nij->n", D, D)
    t3 = np.einsum("nij,nij->n", D2, D)
    t4 = np.einsum("nij,nij->n", D2, D2)
    return np.stack([t1, t2, t3, t4])


def trace_moment_exact(d: int, nu: float, k: int) -> float:
    """Closed-form E tr(Delta^k) for k = 1..4 (any scale matrix)."""
    if not nu > d - 1:
        raise ValueError(f"need nu > d - 1 = {d - 1}, got nu = {nu}")
    if k == 1:
        return 0.0
    if k == 2:
        return d * (d + 1) / 2.0
    if k == 3:
        return float(d * (d * d + 3 * d + 4) / (2.0 * np.sqrt(2.0)) / np.sqrt(nu))
    if k == 4:
        return float(d * (2 * d * d + 5 * d + 5) / 4.0 + d * (d**3 + 6 * d * d + 21 * d + 20) / (4.0 * nu))
    raise ValueError(f"unsupported trace power k = {k}; only k in 1..4 have closed forms")


@dataclass(frozen=True)
class MomentReport:
    """Exact vs Monte Carlo value of a trace moment."""

    k: int
    exact: float
    mc_estimate: float
    mc_stderr: float
    n: int

    @property
    def z(self) -> float:
        if self.mc_stderr == 0.0:
            return 0.0 if self.mc_estimate == self.exact else np.inf
        return (self.mc_estimate - self.exact) / self.mc_stderr


@dataclass
class RunningMoments:
    """Count / mean / sum-of-squared-deviations accumulator with merge."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_values(cls, x: np.ndarray) -> "RunningMoments":
        x = np.asarray(x, dtype=float).ravel()
        m = float(x.mean()) if x.size else 0.0
        return cls(count=x.size, mean=m, m2=float(np.sum((x - m) ** 2)))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningMoments(count=n, mean=mean, m2=m2)

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return np.inf
        return float(np.sqrt(self.m2 / (self.count - 1) / self.count))


def _split_counts(n: int, parts: int) -> list[int]:
    base, rem = divmod(n, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def stream_mc(chunk_fn, n: int, rng: RngStream, chunk_cap: int = 250_000) -> RunningMoments:
    """Run ``chunk_fn(generator, count) -> values`` over fixed substreams.

    The partition of n and the substream generators depend only on
    (n, rng); per-substream moments are merged in substream order, so the
    estimate is identical for any worker count.  Workers are capped by
    WSL_THREADS.
    """
    counts = [c for c in _split_counts(n, N_SUBSTREAMS) if c > 0]

    def run_one(i_c):
        i, c = i_c
        gen = rng.substream_generator(i)
        acc = RunningMoments()
        done = 0
        while done < c:
            take = min(chunk_cap, c - done)
            acc = acc.merge(RunningMoments.from_values(chunk_fn(gen, take)))
            done += take
        return acc

    tasks = list(enumerate(counts))
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        results = [run_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, tasks))
    total = RunningMoments()
    for acc in results:  # fixed substream order
        total = total.merge(acc)
    return total


def mc_trace_moment(p: WishartParams, k: int, n: int, rng: RngStream) -> MomentReport:
    """Monte Carlo E tr(Delta^k) under Wishart(nu, S) against the closed form."""
    if n < 1_000:
        raise ValueError("need n >= 1000 for a meaningful standard error")
    exact = trace_moment_exact(p.d, p.nu, k)

    def chunk(gen: np.random.Generator, count: int) -> np.ndarray:
        X = sample_wishart_batch(p, gen, count)
        return delta_trace_powers_batch(p, X)[k - 1]

    acc = stream_mc(chunk, n, rng)
    return MomentReport(k=k, exact=exact, mc_estimate=acc.mean, mc_stderr=acc.stderr, n=acc.count)


def moment_bound_on_event(d: int, nu: float, k: int, p_complement: float) -> float:
    """Bound on how far an event-restricted trace moment can sit from its
    full-space value: d^{3/2} p^{1/2} for k = 1 and 3 d^{5/2} p^{1/4} for k = 3,
    where p is the probability of the complementary event.

    The bound is asymptotic in nu; calls with nu < 4d are flagged with a
    RuntimeWarning as outside the regime where it is guaranteed.
    """
    if not 0.0 <= p_complement <= 1.0:
        raise ValueError("p_complement must lie in [0, 1]")
    if not nu > d - 1:
        raise ValueError(f"need nu > d - 1 = {d - 1}, got nu = {nu}")
    if k not in (1, 3):
        raise ValueError("only k = 1 and k = 3 have event-restriction bounds")
    if nu < 4 * d:
        warnings.warn(
            f"nu = {nu} < 4 d = {4 * d}: outside the asymptotic regime of the bound",
            RuntimeWarning,
            stacklevel=2,
        )
    if k == 1:
        return float(d**1.5 * np.sqrt(p_complement))
    return float(3.0 * d**2.5 * p_complement**0.25)


def density_sup_bound(nu: float, M) -> float:
    """Upper bound on the sup of the Wishart(nu, M) density over the cone:

        (2 pi / e)^{-d(d+1)/4} det(M)^{-(d+1)/2} / ((2e)^{d/2} (nu-d-1)^{d(d+1)/4})

    valid for nu > d + 1 (where the mode (nu - d - 1) M exists).
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if not nu > d + 1:
        raise ValueError(f"need nu > d + 1 = {d + 1}, got nu = {nu}")
    _, logdet_M = np.linalg.slogdet(M)
    q = d * (d + 1) / 4.0
    log_bound = (
        -q * np.log(2.0 * np.pi / np.e)
        - (d + 1) / 2.0 * logdet_M
        - (d / 2.0) * np.log(2.0 * np.e)
        - q * np.log(nu - (d + 1))
    )
    return float(np.exp(log_bound))
