"""Wishart vs. matrix-variate normal local approximation toolkit.

Core surfaces:

* :mod:`wishlocal.symcore`   - symmetric-matrix algebra and vecp machinery,
* :mod:`wishlocal.densities` - Wishart / SMN log-densities and the stable
  log-ratio in residual-spectrum form,
* :mod:`wishlocal.expansion` - the two-term large-nu expansion, bulk sets,
  and worst-case truncation-error scans,
* :mod:`wishlocal.sampling`  - reproducible Wishart / SMN generation and
  exact trace-moment verification,
* :mod:`wishlocal.kde`       - the Wishart asymmetric-kernel density
  estimator on the SPD cone with its bias / variance / MSE / MISE theory,
* :mod:`wishlocal.tvbounds`  - total-variation and Hellinger bounds plus
  numeric distance estimators,
* :mod:`wishlocal.cli`       - the batch CSV command line.
"""

from .symcore import (
    EigenDecomp,
    NumericalError,
    SpdMatrix,
    SymMatrix,
    halfvec_cov,
    halfvec_dim,
    halfvec_second_moment_weights,
    spd_inv_sqrt,
    sym_eigen,
    trace_power,
    unvecp,
    vecp,
)
from .densities import (
    DeltaResidual,
    SmnParams,
    WishartParams,
    delta_residual,
    gamma1d_pdf,
    log_ratio_direct,
    log_ratio_stable,
    smn_logpdf,
    wishart_logpdf,
)
from .expansion import (
    BulkSpec,
    ErrorCurve,
    ExpansionTerms,
    error_curve,
    expansion_terms,
    in_bulk,
    log_ratio_expansion,
    ratio_expansion,
    sup_error,
    transformed_ratio_expansion,
)
from .sampling import (
    MomentReport,
    RngStream,
    density_sup_bound,
    mc_trace_moment,
    moment_bound_on_event,
    sample_smn,
    sample_wishart,
    trace_moment_exact,
)
from .kde import (
    AsymptoticReport,
    BoundarySpec,
    KdeModel,
    a_b_asymp,
    a_b_exact,
    b_opt_mise,
    b_opt_mse,
    bias_asymp,
    boundary_variance_asymp,
    g_functional,
    kde_eval,
    mise_asymp,
    mse_asymp,
    normality_experiment,
    psi,
    r_dim,
    region_integrals,
    variance_asymp,
)
from .tvbounds import (
    DistanceScan,
    hellinger_bound,
    hellinger_mc,
    tv_bound,
    tv_mc,
    tv_numeric_1d,
)

__version__ = "0.1.0"
