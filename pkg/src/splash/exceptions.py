"""Exception types raised across the package."""

import numpy as np


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration limit.

    The last iterate and the stopping quantity at exit are kept so callers
    can inspect or reuse a partial solution.
    """

    def __init__(self, message, last=None, residual=float("nan")):
        super().__init__(message)
        self.last = last
        self.residual = residual


class IllConditionedError(np.linalg.LinAlgError):
    """Linear system is singular or too badly conditioned to solve."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition
