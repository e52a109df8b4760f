"""Synthetic recovery experiments, metrics and Monte-Carlo lemma checks."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptySet, IdenticalInputs, InvalidSpec, ZeroReference
from .sampling import BERNOULLI, UNIFORM, ObservationMask, TangentSpace, sample_mask
from .solver import RTC, TC, TRPCA, AdmmConfig, solve_rtc, solve_tc, solve_trpca
from .tensor_core import spectral_norm, t_product
from .tsvd import RANK_THRESHOLD, tubal_ranks
from .validation import check_dims, check_same_shape, check_tensor3

logger = logging.getLogger(__name__)

SUCCESS_TOL = 1e-3
JOBS_ENV = "TENSOR_RTC_JOBS"


def default_jobs() -> int:
    return max(1, int(os.environ.get(JOBS_ENV, "1")))


# --- metrics -----------------------------------------------------------------


def rel_error(l, l0) -> float:
    l = check_tensor3(l, "l")
    l0 = check_tensor3(l0, "l0")
    check_same_shape(l, l0, ("l", "l0"))
    ref = np.linalg.norm(l0)
    if ref == 0:
        raise ZeroReference("relative error against a zero reference is undefined")
    return float(np.linalg.norm(l - l0) / ref)


def rmse(l, x, mask: ObservationMask) -> float:
    """Root mean square deviation over the unobserved entries of ``mask``."""
    l = check_tensor3(l, "l")
    x = check_tensor3(x, "x", allow_nan=True)
    check_same_shape(l, x, ("l", "x"))
    unobserved = ~mask.observed
    count = int(unobserved.sum())
    if count == 0:
        raise EmptySet("mask leaves no unobserved entries")
    diff = l[unobserved] - x[unobserved]
    return float(np.sqrt(np.dot(diff, diff) / count))


def psnr(l, ref, peak: float = 1.0) -> float:
    l = check_tensor3(l, "l")
    ref = check_tensor3(ref, "ref")
    check_same_shape(l, ref, ("l", "ref"))
    mse = float(np.mean((l - ref) ** 2))
    if mse == 0:
        raise IdenticalInputs("PSNR is infinite for identical inputs")
    return 10.0 * math.log10(peak**2 / mse)


# --- synthetic instances -----------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Low-tubal-rank instance with sparse gross corruption and missing entries.

    Corrupted entries are drawn among the observed ones unless
    ``corrupt_all`` is set, in which case they are drawn among all entries
    before sampling.
    """

    dims: tuple
    rank: int
    rho: float = 1.0
    gamma: float = 0.0
    corruption_std: float = 1.0
    factor_dist: str = "gaussian"
    seed: int = 0
    mask_model: str = UNIFORM
    corrupt_all: bool = False

    def __post_init__(self):
        try:
            dims = check_dims(self.dims)
        except ValueError as exc:
            raise InvalidSpec(str(exc)) from exc
        object.__setattr__(self, "dims", dims)
        if not 1 <= self.rank <= min(dims[:2]):
            raise InvalidSpec(f"rank {self.rank} outside [1, {min(dims[:2])}]")
        if not (0 < self.rho <= 1 and 0 <= self.gamma <= 1):
            raise InvalidSpec(f"need rho in (0, 1] and gamma in [0, 1], got {self.rho}, {self.gamma}")
        if self.corruption_std < 0:
            raise InvalidSpec("corruption_std must be nonnegative")
        if self.factor_dist not in ("gaussian", "uniform", "bernoulli"):
            raise InvalidSpec(f"unknown factor distribution {self.factor_dist!r}")
        if self.mask_model not in (UNIFORM, BERNOULLI):
            raise InvalidSpec(f"unknown mask model {self.mask_model!r}")


@dataclass(frozen=True, eq=False)
class Instance:
    l0: np.ndarray
    x: np.ndarray
    mask: ObservationMask
    support: np.ndarray


def _draw_factor(rng, shape, dist):
    if dist == "gaussian":
        return rng.standard_normal(shape)
    if dist == "uniform":
        # unit variance
        return rng.uniform(-math.sqrt(3), math.sqrt(3), shape)
    return rng.choice([-1.0, 1.0], size=shape)


def gen_instance(spec: SyntheticSpec) -> Instance:
    """``L0 = P * W`` plus additive Gaussian corruption on a gamma fraction
    of entries, observed on a rho fraction.

    Returns the observed data with unobserved entries set to zero.
    """
    n1, n2, n3 = spec.dims
    rng = np.random.default_rng(spec.seed)
    p = _draw_factor(rng, (n1, spec.rank, n3), spec.factor_dist)
    w = _draw_factor(rng, (spec.rank, n2, n3), spec.factor_dist)
    l0 = t_product(p, w)
    mask = sample_mask(spec.dims, spec.rho, spec.mask_model, seed=int(rng.integers(2**63)))

    pool = np.arange(l0.size) if spec.corrupt_all else np.flatnonzero(mask.observed)
    k = int(np.floor(spec.gamma * pool.size + 0.5))
    chosen = rng.choice(pool, size=k, replace=False)
    support = np.zeros(l0.size, dtype=bool)
    support[chosen] = True
    support = support.reshape(l0.shape)

    noisy = l0.copy().ravel()
    noisy[chosen] += spec.corruption_std * rng.standard_normal(k)
    x = np.where(mask.observed, noisy.reshape(l0.shape), 0.0)
    return Instance(l0=l0, x=x, mask=mask, support=support)


# --- trials ------------------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    rel_error: float
    recovered_rank: int
    success: bool
    iters: int
    converged: bool
    wall_time: float


def _solve(inst: Instance, cfg: AdmmConfig, problem: str):
    if problem == RTC:
        return solve_rtc(inst.x, inst.mask, cfg)
    if problem == TC:
        return solve_tc(inst.x, inst.mask, cfg)
    if problem == TRPCA:
        return solve_trpca(inst.x, cfg)
    raise ValueError(f"unknown problem {problem!r}")


def run_trial(spec: SyntheticSpec, cfg: AdmmConfig | None = None,
              success_tol: float = SUCCESS_TOL, problem: str = RTC) -> TrialResult:
    inst = gen_instance(spec)
    res = _solve(inst, cfg or AdmmConfig(), problem)
    err = rel_error(res.l, inst.l0)
    return TrialResult(
        rel_error=err,
        recovered_rank=tubal_ranks(res.l, RANK_THRESHOLD).tubal_rank,
        success=err <= success_tol,
        iters=res.iters,
        converged=res.converged,
        wall_time=res.wall_time,
    )


def table1_scenarios(n: int, seeds=(0, 1, 2)) -> list[SyntheticSpec]:
    """The two exact-recovery settings (r = 0.05n, rho = 0.9, gamma = 0.1)
    and (r = 0.1n, rho = 0.8, gamma = 0.2) on n x n x n tensors."""
    out = []
    for frac, rho, gamma in ((0.05, 0.9, 0.1), (0.1, 0.8, 0.2)):
        r = max(1, round(frac * n))
        out += [SyntheticSpec((n, n, n), r, rho, gamma, seed=s) for s in seeds]
    return out


def table2_scenarios(n: int, seeds=(0, 1, 2)) -> list[SyntheticSpec]:
    """The first exact-recovery setting with corruption standard deviation 1/n, 1 or n."""
    r = max(1, round(0.05 * n))
    return [
        SyntheticSpec((n, n, n), r, 0.9, 0.1, corruption_std=std, seed=s)
        for std in (1.0 / n, 1.0, float(n))
        for s in seeds
    ]


def run_recovery_table(scenarios, cfg: AdmmConfig | None = None) -> list[dict]:
    """One solver run per scenario with the default lambda."""
    rows = []
    for spec in scenarios:
        res = run_trial(spec, cfg)
        rows.append({
            "n": spec.dims[0],
            "r": spec.rank,
            "rank": res.recovered_rank,
            "rel_error": res.rel_error,
            "rho": spec.rho,
            "gamma": spec.gamma,
            "corruption_std": spec.corruption_std,
            "seed": spec.seed,
            "iters": res.iters,
            "wall_time": res.wall_time,
        })
        logger.info("table row %s", rows[-1])
    return rows


def summarize_table(rows: list[dict]) -> list[dict]:
    """Median over seeds of every (n, r, rho, gamma, corruption_std) group."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["n"], row["r"], row["rho"], row["gamma"], row["corruption_std"])
        groups.setdefault(key, []).append(row)
    out = []
    for (n, r, rho, gamma, std), members in groups.items():
        out.append({
            "n": n,
            "r": r,
            "rank": int(np.median([m["rank"] for m in members])),
            "rel_error": float(np.median([m["rel_error"] for m in members])),
            "rho": rho,
            "gamma": gamma,
            "corruption_std": std,
            "trials": len(members),
        })
    return out


# --- phase transition --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Success fractions over the (rank, corruption fraction) plane at fixed rho.

    ``success[a, b]`` belongs to ``ranks[a]`` and ``gammas[b]``.
    """

    ranks: tuple
    gammas: tuple
    rho: float
    n: int
    n3: int
    trials: int
    success: np.ndarray
    success_tol: float = SUCCESS_TOL
    base_seed: int = 0


def cell_seed(base_seed: int, rank_idx: int, gamma_idx: int, trial: int) -> int:
    return int(np.random.SeedSequence([base_seed, rank_idx, gamma_idx, trial]).generate_state(1)[0])


def _grid_job(args):
    key, spec, cfg, success_tol = args
    return key, run_trial(spec, cfg, success_tol).success


def run_phase_grid(ranks, gammas, rho: float, n: int = 40, n3: int | None = None,
                   trials: int = 5, success_tol: float = SUCCESS_TOL, base_seed: int = 0,
                   jobs: int | None = None, cfg: AdmmConfig | None = None) -> PhaseGrid:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    n3 = n if n3 is None else n3
    ranks, gammas = tuple(int(r) for r in ranks), tuple(float(g) for g in gammas)
    cfg = cfg or AdmmConfig()
    tasks = [
        ((a, b, t),
         SyntheticSpec((n, n, n3), r, rho, g, seed=cell_seed(base_seed, a, b, t)),
         cfg, success_tol)
        for a, r in enumerate(ranks)
        for b, g in enumerate(gammas)
        for t in range(trials)
    ]
    jobs = default_jobs() if jobs is None else jobs
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = dict(pool.map(_grid_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outcomes = dict(map(_grid_job, tasks))

    success = np.zeros((len(ranks), len(gammas)))
    for (a, b, _), ok in outcomes.items():
        success[a, b] += ok
    return PhaseGrid(ranks, gammas, rho, n, n3, trials, success / trials, success_tol, base_seed)


# --- lemma checks ------------------------------------------------------------


def sampling_deviation(t: TangentSpace, mask: ObservationMask, rho: float,
                       iters: int = 50, tol: float = 1e-6, rng=None) -> float:
    """Power-iteration estimate of ``||P_T P_Omega P_T / rho - P_T||_op``.

    Iterates the squared operator from a random unit start; the returned
    value ``||A x||`` for the current unit ``x`` approaches the norm from
    below.
    """
    rng = np.random.default_rng(rng)
    obs = mask.observed

    def apply(z):
        pz = t.project(z)
        return t.project(np.where(obs, pz, 0.0)) / rho - pz

    x = rng.standard_normal(t.dims)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = apply(x)
        new = float(np.linalg.norm(y))
        z = apply(y)
        zn = np.linalg.norm(z)
        if new == 0.0 or zn == 0.0:
            return new
        x = z / zn
        if abs(new - est) <= tol * new:
            return new
        est = new
    return est


def lemma1_check(n: int, r: int, rho: float, trials: int = 10, n3: int | None = None,
                 seed: int = 0, iters: int = 50) -> np.ndarray:
    """Deviation estimates for random tangent spaces and Bernoulli masks."""
    if not r < n:
        raise ValueError("need r < n")
    n3 = n if n3 is None else n3
    out = np.empty(trials)
    for t_idx, ss in enumerate(np.random.SeedSequence([seed, r, n]).spawn(trials)):
        rng = np.random.default_rng(ss)
        l0 = t_product(rng.standard_normal((n, r, n3)), rng.standard_normal((r, n, n3)))
        t = TangentSpace.from_tensor(l0, rank=r)
        mask = sample_mask((n, n, n3), rho, BERNOULLI, seed=int(rng.integers(2**63)))
        out[t_idx] = sampling_deviation(t, mask, rho, iters=iters, rng=rng)
    return out


def sign_tensor(dims, rho: float, rng=None) -> np.ndarray:
    """Entries +1 and -1 with probability rho/2 each, else 0."""
    rng = np.random.default_rng(rng)
    u = rng.random(check_dims(dims))
    return np.where(u < rho / 2, 1.0, np.where(u < rho, -1.0, 0.0))


def lemma4_check(n: int, n3: int, rhos, draws: int = 10, seed: int = 0) -> np.ndarray:
    """Spectral norm of random sign tensors divided by ``sqrt(n * n3)``.

    Returns an array of shape ``(len(rhos), draws)``.
    """
    rhos = list(rhos)
    out = np.empty((len(rhos), draws))
    for a, rho in enumerate(rhos):
        if not 0 <= rho <= 1:
            raise ValueError(f"rho must lie in [0, 1], got {rho}")
        rng = np.random.default_rng([seed, a])
        for d in range(draws):
            out[a, d] = spectral_norm(sign_tensor((n, n, n3), rho, rng)) / math.sqrt(n * n3)
    return out
