"""Batch command line: reproduce the library's experiments as CSV tables.

Every subcommand is deterministic given (seed, config) and writes one CSV
whose first line is the schema marker ``# schema=1``.  Output is written
atomically (temp file in the target directory, then rename).  Exit codes:
0 success, 2 configuration error, 3 statistical hard-failure.

Subcommands and their columns
-----------------------------
expansion-error   nu,E0,E1,E2,exp0,exp1,exp2
                  Worst-case truncation errors of the density-ratio expansion
                  over the bulk, plus exponent diagnostics log E_i / log(1/nu).
moments-check     d,nu,k,exact,mc,stderr,z
                  Exact trace moments of the standardized residual against
                  Monte Carlo; exits 3 if any |z| > 5.
kde-variance      d,n,b,J,mc_var,pred_var,ratio,slope_fit,slope_target
                  Replicated-variance law of the cone kernel estimator; J
                  names the eigenvalue indices of the anchor scaled by b.
kde-bias          d,n,b,f_true,g_true,bias_kernel,bias_kernel_se,bias_repr,
                  bias_repr_se,ratio_kernel,ratio_repr
                  First-order bias check (E fhat - f) / (b g) with two
                  estimators of E fhat.
kde-bandwidth     d,n,b_opt_mse,b_opt_mise,mse_at_bopt,mise_at_bopt,exponent
                  Closed-form optimal bandwidths at the built-in truth;
                  exponent is the n power -2/(r(d)+4).
tv-scan           d,nu,tv,tv_stderr,hellinger,sqrt_nu_tv[,tv_quad]
                  Monte Carlo distances; the quadrature column appears at d=1.
normality         d,n,b,replicates,ks_stat,var_standardized
                  Kolmogorov-Smirnov distance of standardized replicate values
                  to the standard normal.

The built-in truths for the kde experiments are Wishart densities chosen so
the evaluation point has positive density (including at the cone boundary):
d = 1 uses Wishart_1(6, 1/6) (a Gamma(3, 1/3)) evaluated at s = 2; d >= 2 uses
Wishart_d(3d, I/(3d)) at I for interior runs and Wishart_d(d+1, I/(d+1)) for
boundary runs.  The WSL_THREADS environment variable caps worker threads.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _stats
from scipy.special import gammaln

from . import expansion, kde, sampling, tvbounds
from .densities import WishartParams, wishart_logpdf_batch
from .sampling import RngStream
from .symcore import SpdMatrix

SCHEMA_LINE = "# schema=1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAT_FAILURE = 3


class ConfigError(ValueError):
    """Invalid run configuration (maps to exit code 2)."""


@dataclass
class RunConfig:
    subcommand: str
    d: int = 2
    nu_list: list[float] = field(default_factory=list)
    b_list: list[float] = field(default_factory=list)
    n: int = 0
    seed: int = 0
    budget: int = 10_000
    out: str = ""
    only_order: int | None = None
    boundary_J: tuple[int, ...] = ()
    replicates: int = 200
    n_list: list[int] = field(default_factory=list)
    C: float = 3.0


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    """Atomic CSV write with the schema marker line."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".wishlocal-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(SCHEMA_LINE + "\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _nu_grid(args) -> list[float]:
    if getattr(args, "nu", None) is not None:
        return [float(args.nu)]
    if args.nu_step <= 0:
        raise ConfigError("--nu-step must be positive")
    grid = list(np.arange(args.nu_min, args.nu_max + 1e-9, args.nu_step))
    if not grid:
        raise ConfigError("empty nu grid")
    return [float(v) for v in grid]


def _check_out(path: str) -> str:
    if not path:
        raise ConfigError("--out is required")
    directory = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(directory):
        raise ConfigError(f"output directory does not exist: {directory}")
    return path


# ---------------------------------------------------------------------------
# built-in truths for the kde experiments
# ---------------------------------------------------------------------------


def _interior_truth(d: int) -> tuple[WishartParams, np.ndarray]:
    if d == 1:
        return WishartParams(6.0, SpdMatrix([[1.0 / 6.0]])), np.array([[2.0]])
    nu0 = 3.0 * d
    return WishartParams(nu0, SpdMatrix(np.eye(d) / nu0)), np.eye(d)


def _boundary_truth(d: int) -> tuple[WishartParams, np.ndarray]:
    nu0 = float(d + 1)
    return WishartParams(nu0, SpdMatrix(np.eye(d) / nu0)), np.eye(d)


def _gamma_hessian_1d(shape: float, scale: float):
    """Analytic second derivative of the Gamma(shape, scale) density, as a
    1 x 1 vecp-indexed Hessian callback."""

    def hessian(S: np.ndarray) -> np.ndarray:
        x = float(np.asarray(S).reshape(()))
        f = np.exp((shape - 1.0) * np.log(x) - x / scale - shape * np.log(scale) - gammaln(shape))
        u = (shape - 1.0) / x - 1.0 / scale
        return np.array([[f * (u * u - (shape - 1.0) / x**2)]])

    return hessian


# ---------------------------------------------------------------------------
# subcommand drivers
# ---------------------------------------------------------------------------


def run_expansion_error(cfg: RunConfig) -> int:
    header = ["nu", "E0", "E1", "E2", "exp0", "exp1", "exp2"]
    rows = []
    for nu in cfg.nu_list:
        if nu <= cfg.d + 1:
            raise ConfigError(f"nu = {nu} must exceed d + 1 = {cfg.d + 1}")
        if cfg.only_order is None:
            e = expansion.sup_errors_all(nu, cfg.d, cfg.budget, cfg.seed)
            ex = [np.log(v) / np.log(1.0 / nu) for v in e]
        else:
            e = [float("nan")] * 3
            ex = [float("nan")] * 3
            e[cfg.only_order] = expansion.sup_error(nu, cfg.d, cfg.only_order, cfg.budget, cfg.seed)
            ex[cfg.only_order] = float(np.log(e[cfg.only_order]) / np.log(1.0 / nu))
        rows.append([nu, e[0], e[1], e[2], float(ex[0]), float(ex[1]), float(ex[2])])
    write_csv(cfg.out, header, rows)
    return EXIT_OK


def run_moments_check(cfg: RunConfig) -> int:
    header = ["d", "nu", "k", "exact", "mc", "stderr", "z"]
    rows = []
    worst = 0.0
    for nu in cfg.nu_list:
        p = WishartParams(nu, SpdMatrix(np.eye(cfg.d)))
        for k in (1, 2, 3, 4):
            rep = sampling.mc_trace_moment(p, k, cfg.n, RngStream(cfg.seed, k))
            worst = max(worst, abs(rep.z))
            rows.append([cfg.d, nu, k, rep.exact, rep.mc_estimate, rep.mc_stderr, float(rep.z)])
    write_csv(cfg.out, header, rows)
    if worst > 5.0:
        print(f"moments-check: hard failure, worst |z| = {worst:.2f} > 5", file=sys.stderr)
        return EXIT_STAT_FAILURE
    return EXIT_OK


def run_kde_variance(cfg: RunConfig) -> int:
    d = cfg.d
    if cfg.boundary_J:
        p_true, K = _boundary_truth(d)
        b_list = cfg.b_list or [0.01, 0.02, 0.04]
    else:
        p_true, K = _interior_truth(d)
        b_list = cfg.b_list or [0.005, 0.01, 0.02]
    for b in b_list:
        if not 1.0 / b > d - 1:
            raise ConfigError(f"inadmissible bandwidth b = {b} at d = {d}")
    res = kde.variance_slope_experiment(
        p_true, K, cfg.boundary_J, b_list, cfg.n, cfg.replicates, RngStream(cfg.seed, 0)
    )
    jtag = "|".join(str(j) for j in sorted(cfg.boundary_J)) or "-"
    header = ["d", "n", "b", "J", "mc_var", "pred_var", "ratio", "slope_fit", "slope_target"]
    rows = [[d, cfg.n, b, jtag, v, pr, ra, res.slope, res.slope_target] for b, v, pr, ra in res.rows]
    write_csv(cfg.out, header, rows)
    return EXIT_OK


def run_kde_bias(cfg: RunConfig) -> int:
    d = cfg.d
    p_true, S_eval = _interior_truth(d)
    if d == 1:
        hess = _gamma_hessian_1d(p_true.nu / 2.0, 2.0 * float(p_true.S.mat[0, 0]))
    else:
        f = lambda S: float(np.exp(wishart_logpdf_batch(p_true.nu, p_true.S.mat, S[None])[0]))
        hess = kde.density_hessian_fd(f, d, step=1e-3)
    b_list = cfg.b_list or [0.01, 0.02]
    rows_out = kde.bias_ratio_experiment(
        p_true, hess, S_eval, b_list, n_kernel=cfg.n, n_repr=max(cfg.n, 10**6), rng=RngStream(cfg.seed, 0)
    )
    header = [
        "d", "n", "b", "f_true", "g_true",
        "bias_kernel", "bias_kernel_se", "bias_repr", "bias_repr_se",
        "ratio_kernel", "ratio_repr",
    ]
    rows = [
        [d, cfg.n, r.b, r.f_true, r.g_true, r.bias_kernel, r.bias_kernel_se,
         r.bias_repr, r.bias_repr_se, r.ratio_kernel, r.ratio_repr]
        for r in rows_out
    ]
    write_csv(cfg.out, header, rows)
    return EXIT_OK


def run_kde_bandwidth(cfg: RunConfig) -> int:
    d = cfg.d
    p_true, S_eval = _interior_truth(d)
    f_S = float(np.exp(wishart_logpdf_batch(p_true.nu, p_true.S.mat, S_eval[None])[0]))
    if d == 1:
        hess = _gamma_hessian_1d(p_true.nu / 2.0, 2.0 * float(p_true.S.mat[0, 0]))
    else:
        f = lambda S: float(np.exp(wishart_logpdf_batch(p_true.nu, p_true.S.mat, S[None])[0]))
        hess = kde.density_hessian_fd(f, d, step=1e-3)
    g_S = kde.g_functional(hess, S_eval)
    f_call = lambda S: float(np.exp(wishart_logpdf_batch(p_true.nu, p_true.S.mat, S[None])[0]))
    integrals = kde.region_integrals(f_call, hess, d, 0.5, max(cfg.budget, 2000), RngStream(cfg.seed, 7))
    r = kde.r_dim(d)
    header = ["d", "n", "b_opt_mse", "b_opt_mise", "mse_at_bopt", "mise_at_bopt", "exponent"]
    rows = []
    for n in cfg.n_list:
        bm = kde.b_opt_mse(n, S_eval, f_S, g_S)
        bi = kde.b_opt_mise(n, integrals)
        rows.append(
            [d, n, bm, bi, kde.mse_opt_value(n, S_eval, f_S, g_S), kde.mise_opt_value(n, integrals),
             -2.0 / (r + 4.0)]
        )
    write_csv(cfg.out, header, rows)
    return EXIT_OK


def run_tv_scan(cfg: RunConfig) -> int:
    scan = tvbounds.distance_scan(cfg.d, cfg.nu_list, cfg.n, cfg.C, RngStream(cfg.seed, 0))
    header = ["d", "nu", "tv", "tv_stderr", "hellinger", "sqrt_nu_tv"]
    if cfg.d == 1:
        header.append("tv_quad")
    rows = []
    for r in scan.rows:
        row = [cfg.d, r.nu, r.tv_numeric, r.tv_stderr, r.hellinger_numeric,
               float(np.sqrt(r.nu) * r.tv_numeric)]
        if cfg.d == 1:
            row.append(r.tv_quad)
        rows.append(row)
    write_csv(cfg.out, header, rows)
    return EXIT_OK


def run_normality(cfg: RunConfig) -> int:
    d = cfg.d
    p_true, S_eval = _interior_truth(d)
    f_S = float(np.exp(wishart_logpdf_batch(p_true.nu, p_true.S.mat, S_eval[None])[0]))
    b = cfg.b_list[0] if cfg.b_list else 0.02
    sampler = lambda gen, count: sampling.sample_wishart_batch(p_true, gen, count)
    z = kde.normality_experiment(
        sampler, cfg.n, b, S_eval, cfg.replicates, RngStream(cfg.seed, 0), f_at_S=f_S
    )
    ks = float(_stats.kstest(z, "norm").statistic)
    header = ["d", "n", "b", "replicates", "ks_stat", "var_standardized"]
    write_csv(cfg.out, header, [[d, cfg.n, b, cfg.replicates, ks, float(z.var(ddof=1))]])
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(sp, default_d=2):
    sp.add_argument("--d", type=int, default=default_d, help="matrix dimension")
    sp.add_argument("--seed", type=int, default=0, help="base RNG seed")
    sp.add_argument("--budget", type=int, default=10_000, help="search/sampling budget")
    sp.add_argument("--out", required=True, help="output CSV path")


def _add_nu(sp, lo=5.0, hi=205.0, step=10.0):
    sp.add_argument("--nu", type=float, default=None, help="single nu (overrides the grid)")
    sp.add_argument("--nu-min", type=float, default=lo)
    sp.add_argument("--nu-max", type=float, default=hi)
    sp.add_argument("--nu-step", type=float, default=step)


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wishlocal",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("expansion-error", help="worst-case expansion errors over the bulk")
    _add_common(sp)
    _add_nu(sp)
    sp.add_argument("--only-order", type=int, choices=(0, 1, 2), default=None)

    sp = sub.add_parser("moments-check", help="exact vs MC trace moments")
    _add_common(sp)
    _add_nu(sp, lo=50.0, hi=50.0, step=10.0)
    sp.add_argument("--n", type=int, default=1_000_000, help="MC draws per moment")

    sp = sub.add_parser("kde-variance", help="variance law of the cone kernel estimator")
    _add_common(sp, default_d=1)
    sp.add_argument("--b-list", type=_csv_floats, default=[])
    sp.add_argument("--n", type=int, default=10_000, help="observations per replicate")
    sp.add_argument("--replicates", type=int, default=200)
    sp.add_argument("--boundary-J", type=_csv_ints, default=[],
                    help="1-based eigenvalue indices of the anchor scaled by b")

    sp = sub.add_parser("kde-bias", help="first-order bias law")
    _add_common(sp, default_d=1)
    sp.add_argument("--b-list", type=_csv_floats, default=[])
    sp.add_argument("--n", type=int, default=200_000, help="kernel-average sample size")

    sp = sub.add_parser("kde-bandwidth", help="optimal bandwidth table")
    _add_common(sp, default_d=2)
    sp.add_argument("--n-list", type=_csv_ints, default=[10_000, 100_000, 1_000_000])

    sp = sub.add_parser("tv-scan", help="total variation / Hellinger scan")
    _add_common(sp, default_d=1)
    _add_nu(sp, lo=50.0, hi=400.0, step=50.0)
    sp.add_argument("--n", type=int, default=100_000, help="MC draws per distance")
    sp.add_argument("--C", type=float, default=3.0, help="constant in the bound formulas")

    sp = sub.add_parser("normality", help="asymptotic-normality experiment")
    _add_common(sp, default_d=1)
    sp.add_argument("--b-list", type=_csv_floats, default=[0.02])
    sp.add_argument("--n", type=int, default=10_000)
    sp.add_argument("--replicates", type=int, default=500)

    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(subcommand=args.subcommand)
    cfg.d = getattr(args, "d", 2)
    if cfg.d < 1:
        raise ConfigError("--d must be >= 1")
    cfg.seed = args.seed
    cfg.budget = args.budget
    if cfg.budget < 1:
        raise ConfigError("--budget must be positive")
    cfg.out = _check_out(args.out)
    if hasattr(args, "nu_min"):
        cfg.nu_list = _nu_grid(args)
        if any(b <= a for a, b in zip(cfg.nu_list, cfg.nu_list[1:])):
            raise ConfigError("nu grid must be ascending")
    cfg.b_list = list(getattr(args, "b_list", []) or [])
    if any(b <= 0 for b in cfg.b_list):
        raise ConfigError("--b-list entries must be positive")
    if any(y <= x for x, y in zip(cfg.b_list, cfg.b_list[1:])):
        raise ConfigError("--b-list must be strictly ascending")
    cfg.n = int(getattr(args, "n", 0) or 0)
    if hasattr(args, "n") and cfg.n < 1:
        raise ConfigError("--n must be positive")
    cfg.only_order = getattr(args, "only_order", None)
    cfg.boundary_J = tuple(sorted(getattr(args, "boundary_J", []) or []))
    if any(j < 1 or j > cfg.d for j in cfg.boundary_J):
        raise ConfigError(f"--boundary-J indices must lie in 1..{cfg.d}")
    cfg.replicates = int(getattr(args, "replicates", 200) or 200)
    if cfg.replicates < 2:
        raise ConfigError("--replicates must be >= 2")
    cfg.n_list = list(getattr(args, "n_list", []) or [])
    if any(n < 2 for n in cfg.n_list):
        raise ConfigError("--n-list entries must be >= 2")
    if any(y <= x for x, y in zip(cfg.n_list, cfg.n_list[1:])):
        raise ConfigError("--n-list must be strictly ascending")
    cfg.C = float(getattr(args, "C", 3.0) or 3.0)
    if cfg.C <= 0:
        raise ConfigError("--C must be positive")
    return cfg


_RUNNERS = {
    "expansion-error": run_expansion_error,
    "moments-check": run_moments_check,
    "kde-variance": run_kde_variance,
    "kde-bias": run_kde_bias,
    "kde-bandwidth": run_kde_bandwidth,
    "tv-scan": run_tv_scan,
    "normality": run_normality,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return _RUNNERS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
