"""SPLASH: sparse group penalized Yule-Walker estimation of spatio-temporal VARs.

The model is ``y_t = A y_t + B y_{t-1} + eps_t`` with a zero-diagonal
spatial matrix ``A``. Coefficients are estimated from banded sample
autocovariances through the moment identity ``S1 = A S1 + B S0``, with a
sparse group lasso penalty whose groups are the diagonals of ``A`` and ``B``.
"""

from .autocov import AcovPair, banded_autocov, sample_autocov, select_bandwidth
from .benchmarks import (SupportSet, band_support, const_forecast, gmwy_fit, model_support,
                         pvar_fit, pvar_lambda_max, transition_matrix)
from .estimators import (ConstEstimator, CvChoice, CvGrid, Fitted, GmwyEstimator, PvarEstimator,
                         SplashEstimator)
from .evaluation import (ForecastRecord, dm_test, estimation_error, rmsfe, rolling_windows,
                         score_table, ts_cross_validate)
from .exceptions import ConvergenceError, IllConditionedError
from .model import StModel, check_stability, population_autocov, reduced_form
from .simulate import Panel, RngSpec, gen_design_a, gen_design_b, simulate_var
from .solver import SplashFit, fit, fit_path, lambda_max, lambda_path
from .yule_walker import GroupLayout, YwSystem, assemble_system, build_layout

__version__ = "0.1.0"
