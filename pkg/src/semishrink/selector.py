"""scikit-learn style estimators wrapping the coefficient, shrinkage and selection steps.

``fit`` takes the ``N = n p`` observation increments (1-D, or an ``(N, 1)`` column)
with ``n_periods`` set on the estimator; ``predict`` evaluates the fitted step
function at times in ``(0, n]`` (or any real ``t``, by periodicity).
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import ValidationError, check_int, check_real, check_vector, check_weights
from .analytics import h2_constants
from .estimators import (CoeffSet, ReconstructedSignal, fourier_coeffs_from_increments,
                         proxy_variance_from_coeffs, shrink)
from .grid import GridSpec
from .noise import FamilyBounds
from .selection import select
from .weights import build_family


def _increments(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    if X.ndim != 1:
        raise ValidationError("increments must be a 1-D array or a single column")
    return check_vector(X, "increments")


def _grid_for(dy, n_periods):
    n = check_int(n_periods, "n_periods", minimum=1)
    if dy.size == 0 or dy.size % n:
        raise ValidationError(f"{dy.size} increments is not a multiple of n_periods={n}")
    p = dy.size // n
    if p % 2 == 0 or p < 3:
        raise ValidationError(f"points per period must be odd and >= 3, got {p}")
    return GridSpec(n=n, p=p, p_requested=p)


class _StepPredictor(BaseEstimator):

    def _bounds(self):
        return FamilyBounds(a_max=self.a_max, rho_lower=self.rho_lower,
                            varsigma_star=self.varsigma_star)

    def predict(self, X):
        check_is_fitted(self, "signal_")
        t = np.asarray(X, dtype=float)
        if t.ndim == 2 and t.shape[1] == 1:
            t = t[:, 0]
        return self.signal_(t)

    def grid_values(self):
        """Fitted values at ``t_1, ..., t_p``."""
        check_is_fitted(self, "signal_")
        return self.signal_.grid_values()


class ImprovedModelSelection(_StepPredictor):
    """Penalized choice of a weight vector with shrinkage of the leading coefficients.

    Parameters
    ----------
    n_periods : int
        Observation horizon ``n``.
    mode : {"simulation", "theory"}
        Parameterisation of the weight family.
    rho : float or None
        Penalty level in ``(0, 1/2)``; default ``(3 + ln n)^-2``.
    sigma : float or None
        Known noise variance; estimated from high frequencies when ``None``.
    shrink : bool
        ``False`` selects with the unshrunk criterion.
    """

    def __init__(self, n_periods=1, mode="simulation", rho=None, sigma=None, shrink=True,
                 a_max=1.0, rho_lower=0.25, varsigma_star=0.5, k0=0.0):
        self.n_periods = n_periods
        self.mode = mode
        self.rho = rho
        self.sigma = sigma
        self.shrink = shrink
        self.a_max = a_max
        self.rho_lower = rho_lower
        self.varsigma_star = varsigma_star
        self.k0 = k0

    def fit(self, X, y=None):
        dy = _increments(X)
        grid = _grid_for(dy, self.n_periods)
        theta = fourier_coeffs_from_increments(dy, grid)
        if self.sigma is None:
            sigma_hat = float(proxy_variance_from_coeffs(theta, grid.n))
        else:
            sigma_hat = check_real(self.sigma, "sigma", low=0.0)
        family = build_family(grid.n, grid.p, self.varsigma_star, self.mode, k0=self.k0)
        res = select(CoeffSet(theta), family, sigma_hat, self.rho, self._bounds(),
                     shrink=self.shrink)
        self.grid_ = grid
        self.family_ = family
        self.raw_coef_ = theta
        self.coef_ = res.coeffs_star.values
        self.gamma_ = res.gamma_star.gamma
        self.sigma_hat_ = sigma_hat
        self.selection_ = res
        self.signal_ = ReconstructedSignal(res.coeffs_star, self.gamma_)
        return self


class WeightedLeastSquares(_StepPredictor):
    """Fixed-weight estimate with optional shrinkage of the first ``d`` coefficients.

    ``gamma=None`` uses all-ones weights; ``d=None`` uses the number of leading ones
    of ``gamma``. The threshold follows the family bounds and ``r_n``.
    """

    def __init__(self, n_periods=1, gamma=None, shrink=True, d=None, r_n=None,
                 a_max=1.0, rho_lower=0.25, varsigma_star=0.5):
        self.n_periods = n_periods
        self.gamma = gamma
        self.shrink = shrink
        self.d = d
        self.r_n = r_n
        self.a_max = a_max
        self.rho_lower = rho_lower
        self.varsigma_star = varsigma_star

    def fit(self, X, y=None):
        dy = _increments(X)
        grid = _grid_for(dy, self.n_periods)
        raw = CoeffSet(fourier_coeffs_from_increments(dy, grid))
        gamma = np.ones(grid.p) if self.gamma is None else check_weights(self.gamma, "gamma")
        if gamma.size > grid.p:
            raise ValidationError(f"gamma is longer than p={grid.p}")
        gamma = np.concatenate([gamma, np.zeros(grid.p - gamma.size)])
        if self.d is None:
            ones = np.flatnonzero(gamma != 1.0)
            d = int(ones[0]) if ones.size else grid.p
        else:
            d = check_int(self.d, "d", minimum=0)
        consts = h2_constants(min(d, grid.p), grid.n, self._bounds(), self.r_n)
        self.constants_ = consts
        coeffs = shrink(raw, consts) if self.shrink else raw
        self.grid_ = grid
        self.raw_coef_ = raw.values
        self.coef_ = coeffs.values
        self.gamma_ = gamma
        self.signal_ = ReconstructedSignal(coeffs, gamma)
        return self
