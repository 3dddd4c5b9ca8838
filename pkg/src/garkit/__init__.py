"""garkit: general asymptotic representations for statistical indexes."""

__version__ = "0.1.0"

from .empirical import (
    BivariateSample,
    Sample,
    bahadur_gap,
    ecdf_eval,
    equantile_eval,
    fep_apply,
    indicator_process,
    make_bivariate_sample,
    make_sample,
    residual_process,
)
from .functions import InfluenceFunction, ResidualWeight, WeightFunction
from .gar import GarRep, gar_add, gar_delta, gar_div, gar_evaluate, gar_mul
from .indexes import (
    CorrelationMoments,
    corr_asymptotic_variance,
    corr_estimate,
    correlation_gar,
    gini_estimate,
    gini_gar,
    smooth_moment_index,
)
from .models import BivariateNormalModel, DistributionModel, parse_model_spec
from .quadrature import QuadratureRule, gauss_legendre
from .variance import VarianceReport, gamma2, gamma3, gamma_cov, indicator_cov, total_variance
