"""scikit-learn compatible wrappers around the ADMM solver.

The estimators are transductive, like most completion methods: ``fit``
recovers the low-rank part of the tensor it is given, and ``transform``
solves a fresh problem for each new tensor. Missing entries can be passed
either as a mask or as NaN values.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .sampling import ObservationMask, as_mask
from .solver import RTC, TC, TRPCA, AdmmConfig, solve_rtc, solve_tc, solve_trpca
from .tsvd import RANK_THRESHOLD, truncate_tubal, tubal_ranks


def _check_X(X):
    X = check_array(X, allow_nd=True, ensure_all_finite="allow-nan", ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        X = X[:, :, np.newaxis]
    if X.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got {X.ndim} dimensions")
    return X


def _resolve_mask(X, mask):
    if mask is None:
        return ObservationMask(~np.isnan(X))
    mask = as_mask(mask, X.shape)
    if np.isnan(X[mask.observed]).any():
        raise ValueError("X has NaN entries inside the observed set")
    return mask


class RobustTensorCompletion(TransformerMixin, BaseEstimator):
    """Low-tubal-rank recovery from partial, grossly corrupted observations.

    Parameters
    ----------
    problem : {"rtc", "tc", "trpca"}
        ``"rtc"`` removes sparse corruption and fills missing entries,
        ``"tc"`` only fills missing entries, ``"trpca"`` only removes
        corruption (every entry must be observed).
    lam : float or None
        Weight of the l1 term. ``None`` uses the theory-driven default
        ``1 / sqrt(rho * max(n1, n2) * n3)``.
    mu0, mu_max, growth, eps, max_iter : ADMM schedule and stopping tolerance.

    Attributes
    ----------
    low_rank_, sparse_ : ndarray
        Recovered tensors ``L`` and ``E``.
    lambda_ : float
    n_iter_ : int
    converged_ : bool
    tubal_rank_ : int
    result_ : RecoveryResult
    """

    def __init__(self, problem=RTC, lam=None, mu0=1e-4, mu_max=1e8, growth=1.1, eps=1e-6,
                 max_iter=500, use_symmetry=True):
        self.problem = problem
        self.lam = lam
        self.mu0 = mu0
        self.mu_max = mu_max
        self.growth = growth
        self.eps = eps
        self.max_iter = max_iter
        self.use_symmetry = use_symmetry

    def _config(self) -> AdmmConfig:
        return AdmmConfig(lam=self.lam, mu0=self.mu0, mu_max=self.mu_max, growth=self.growth,
                          eps=self.eps, max_iters=self.max_iter, use_symmetry=self.use_symmetry)

    def _solve(self, X, mask):
        X = _check_X(X)
        mask = _resolve_mask(X, mask)
        cfg = self._config()
        if self.problem == RTC:
            return solve_rtc(X, mask, cfg)
        if self.problem == TC:
            return solve_tc(X, mask, cfg)
        if self.problem == TRPCA:
            if mask.size != X.size:
                raise ValueError("problem='trpca' needs every entry observed")
            return solve_trpca(X, cfg)
        raise ValueError(f"unknown problem {self.problem!r}")

    def fit(self, X, y=None, mask=None):
        res = self._solve(X, mask)
        self.result_ = res
        self.low_rank_ = res.l
        self.sparse_ = res.e
        self.lambda_ = res.lam
        self.n_iter_ = res.iters
        self.converged_ = res.converged
        self.tubal_rank_ = tubal_ranks(res.l, RANK_THRESHOLD).tubal_rank
        return self

    def transform(self, X, mask=None):
        check_is_fitted(self, "low_rank_")
        return self._solve(X, mask).l

    def fit_transform(self, X, y=None, mask=None):
        return self.fit(X, mask=mask).low_rank_


class TubalRankTruncation(TransformerMixin, BaseEstimator):
    """Project every tensor onto tubal rank at most ``rank``."""

    def __init__(self, rank=1):
        self.rank = rank

    def fit(self, X, y=None):
        X = _check_X(X)
        self.dims_ = X.shape
        return self

    def transform(self, X):
        check_is_fitted(self, "dims_")
        return truncate_tubal(_check_X(X), self.rank)
