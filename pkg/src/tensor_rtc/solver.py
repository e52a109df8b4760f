"""ADMM solver for robust tensor completion and its two special cases.

Robust tensor completion (RTC) solves

    min_{L, E}  tnn(L) + lam * ||P_Omega(E)||_1   s.t.  X = L + E,

where the unobserved entries of ``E`` act as free slack. Tensor completion
(TC) pins ``E`` to zero on Omega, and tensor robust PCA (TRPCA) observes
every entry.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DimensionMismatch, InvalidRate, NonFiniteIterate
from .sampling import ObservationMask, as_mask
from .tsvd import svt
from .validation import check_dims, check_tensor3

RTC = "rtc"
TC = "tc"
TRPCA = "trpca"


def default_lambda(dims, rho: float = 1.0, problem: str = RTC) -> float:
    """Non-adaptive weight of the l1 term.

    ``1 / sqrt(rho * max(n1, n2) * n3)`` for RTC and
    ``1 / sqrt(max(n1, n2) * n3)`` for TRPCA.
    """
    n1, n2, n3 = check_dims(dims)
    if not 0 < rho <= 1:
        raise InvalidRate(f"observation rate must lie in (0, 1], got {rho}")
    if problem == TRPCA:
        rho = 1.0
    elif problem not in (RTC, TC):
        raise ValueError(f"unknown problem {problem!r}")
    return 1.0 / math.sqrt(rho * max(n1, n2) * n3)


@dataclass(frozen=True)
class AdmmConfig:
    """ADMM hyperparameters.

    ``lam=None`` selects :func:`default_lambda` from the data shape and the
    observed fraction. ``rel_tol`` enables an extra stopping rule on the
    feasibility residual relative to ``||X||_inf`` (off by default).
    """

    lam: float | None = None
    mu0: float = 1e-4
    mu_max: float = 1e8
    growth: float = 1.1
    eps: float = 1e-6
    max_iters: int = 500
    record_history: bool = False
    use_symmetry: bool = True
    rel_tol: float | None = None

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not 0 < self.mu0 < self.mu_max:
            raise ValueError("need 0 < mu0 < mu_max")
        if not self.growth > 1:
            raise ValueError("growth must exceed 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    def mu_at(self, k: int) -> float:
        """Penalty used in iteration ``k`` (0-based)."""
        return min(self.mu0 * self.growth**k, self.mu_max)


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    l: np.ndarray
    e: np.ndarray
    converged: bool
    iters: int
    residuals: tuple[float, float, float]
    lam: float
    mu: float
    wall_time: float
    history: dict | None = field(default=None, repr=False)


def _admm(x: np.ndarray, obs: np.ndarray, lam: float, cfg: AdmmConfig, pin_omega: bool) -> RecoveryResult:
    start = time.perf_counter()
    x = np.where(obs, x, 0.0)
    l = np.zeros_like(x)
    e = np.zeros_like(x)
    y = np.zeros_like(x)
    history = {"objective": [], "mu": [], "residuals": []} if cfg.record_history else None
    x_inf = float(np.abs(x).max(initial=0.0))
    converged = False
    residuals = (math.inf, math.inf, math.inf)
    mu = cfg.mu0

    for k in range(cfg.max_iters):
        mu = cfg.mu_at(k)
        l_new, tnn_l, _ = svt(x - e - y / mu, 1.0 / mu, cfg.use_symmetry)
        e_new = x - l_new - y / mu
        if pin_omega:
            e_new[obs] = 0.0
        else:
            t = e_new[obs]
            e_new[obs] = np.sign(t) * np.maximum(np.abs(t) - lam / mu, 0.0)
        resid = x - l_new - e_new
        y -= mu * resid

        residuals = (
            float(np.abs(l_new - l).max()),
            float(np.abs(e_new - e).max()),
            float(np.abs(resid).max()),
        )
        l, e = l_new, e_new
        if not (math.isfinite(sum(residuals)) and np.isfinite(y).all()):
            raise NonFiniteIterate(
                f"non-finite iterate at iteration {k + 1} (mu={mu:.3e}, residuals={residuals})"
            )
        if history is not None:
            history["objective"].append(tnn_l + lam * float(np.abs(e[obs]).sum()))
            history["mu"].append(mu)
            history["residuals"].append(residuals)
        if max(residuals) <= cfg.eps or (
            cfg.rel_tol is not None and residuals[2] <= cfg.rel_tol * x_inf
        ):
            converged = True
            break

    return RecoveryResult(
        l=l,
        e=e,
        converged=converged,
        iters=k + 1,
        residuals=residuals,
        lam=lam,
        mu=mu,
        wall_time=time.perf_counter() - start,
        history=history,
    )


def _prepare(x, m, cfg, problem):
    x = check_tensor3(x, "x", allow_nan=True)
    m = as_mask(m, x.shape)
    if m.dims != x.shape:
        raise DimensionMismatch(f"mask has shape {m.dims} but x has shape {x.shape}")
    if np.isnan(x[m.observed]).any():
        raise ValueError("x has NaN entries inside the observed set")
    cfg = cfg or AdmmConfig()
    lam = cfg.lam
    if lam is None:
        rho = max(m.size, 1) / x.size
        lam = default_lambda(x.shape, rho, problem)
    return np.nan_to_num(x, nan=0.0), m, cfg, lam


def solve_rtc(x, m: ObservationMask | None, cfg: AdmmConfig | None = None) -> RecoveryResult:
    """Robust tensor completion by ADMM.

    Each iteration, with ``mu`` growing geometrically up to ``mu_max``:

    1. ``L <- prox_tnn(X - E - Y/mu, 1/mu)``
    2. ``E <- soft_threshold(X - L - Y/mu, lam/mu)`` on Omega
    3. ``E <- X - L - Y/mu`` off Omega
    4. ``Y <- Y + mu (L + E - X)``

    Iteration stops once the sup-norm changes of ``L`` and ``E`` and the
    sup-norm of ``X - L - E`` are all at most ``eps``. Entries of ``x``
    outside the mask are ignored (they may be NaN).
    """
    x, m, cfg, lam = _prepare(x, m, cfg, RTC)
    return _admm(x, m.observed, lam, cfg, pin_omega=False)


def solve_tc(x, m: ObservationMask | None, cfg: AdmmConfig | None = None) -> RecoveryResult:
    """Tensor completion: the RTC iteration with ``E`` held at zero on Omega,
    so ``L`` matches ``x`` on every observed entry at convergence."""
    x, m, cfg, lam = _prepare(x, m, cfg, TC)
    return _admm(x, m.observed, lam, cfg, pin_omega=True)


def solve_trpca(x, cfg: AdmmConfig | None = None) -> RecoveryResult:
    """Tensor robust PCA: RTC with every entry observed."""
    x = check_tensor3(x, "x")
    cfg = cfg or AdmmConfig()
    if cfg.lam is None:
        cfg = replace(cfg, lam=default_lambda(x.shape, 1.0, TRPCA))
    return solve_rtc(x, ObservationMask.full(x.shape), cfg)
