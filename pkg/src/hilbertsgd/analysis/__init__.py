from .bounds import (
    BoundCheck,
    LowerBoundProbe,
    SgdRateReport,
    avg_upper_bound,
    check_avg_upper_bound,
    lower_bound_probe,
    sgd_rate_report,
)
from .lemmas import (
    TailBoundError,
    f_lambda,
    f_lambda_extended_verify,
    f_lambda_verify,
    gamma_series,
    gamma_series_verify,
    holder_verify,
    moment_bound_verify,
    neutral_recursion_verify,
    random_power_law_vectors,
)
from .rates import RateEstimate, fit_decay_rate
from .special import gamma_function, log_gamma
