"""Observation masks, entrywise and tangent-space projections, incoherence."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _spectral
from .exceptions import DimensionMismatch, InvalidRate, ZeroTensor
from .tensor_core import conj_transpose, t_product
from .tsvd import RANK_THRESHOLD, tsvd_skinny, tubal_ranks
from .validation import check_dims, check_same_shape, check_tensor3

UNIFORM = "uniform"
BERNOULLI = "bernoulli"


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass(frozen=True, eq=False)
class ObservationMask:
    """The observed index set, stored as a dense boolean array.

    ``model``, ``rate`` and ``seed`` record how the mask was drawn; masks
    built from an explicit array carry ``model=None``.
    """

    observed: np.ndarray
    model: str | None = None
    rate: float | None = None
    seed: int | None = None
    _count: int = field(init=False, repr=False)

    def __post_init__(self):
        obs = np.asarray(self.observed, dtype=bool)
        if obs.ndim != 3:
            raise DimensionMismatch(f"mask must be 3-D, got shape {obs.shape}")
        obs = obs.copy()
        obs.flags.writeable = False
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "_count", int(obs.sum()))

    @classmethod
    def full(cls, dims) -> "ObservationMask":
        return cls(np.ones(check_dims(dims), dtype=bool), model=UNIFORM, rate=1.0)

    @classmethod
    def from_indices(cls, dims, indices, **meta) -> "ObservationMask":
        """Build a mask from 0-based ``(i, j, k)`` triples."""
        dims = check_dims(dims)
        idx = np.asarray(indices, dtype=np.int64).reshape(-1, 3)
        if idx.size and ((idx < 0).any() or (idx >= np.array(dims)).any()):
            raise DimensionMismatch(f"mask indices fall outside dims {dims}")
        obs = np.zeros(dims, dtype=bool)
        obs[idx[:, 0], idx[:, 1], idx[:, 2]] = True
        return cls(obs, **meta)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.observed.shape

    @property
    def size(self) -> int:
        return self._count

    def indices(self) -> np.ndarray:
        """Sorted 0-based ``(i, j, k)`` triples, shape ``(|Omega|, 3)``."""
        return np.argwhere(self.observed)

    def complement(self) -> "ObservationMask":
        return ObservationMask(~self.observed)

    def __contains__(self, ijk) -> bool:
        return bool(self.observed[tuple(ijk)])

    def __len__(self) -> int:
        return self._count


def sample_mask(dims, rate: float, model: str = UNIFORM, seed=None) -> ObservationMask:
    """Draw an observation mask.

    ``model="uniform"`` samples exactly ``round(rate * n1 n2 n3)`` entries
    without replacement (round half up); ``model="bernoulli"`` keeps each
    entry independently with probability ``rate``.
    """
    dims = check_dims(dims)
    if not 0 < rate <= 1:
        raise InvalidRate(f"sampling rate must lie in (0, 1], got {rate}")
    rng = np.random.default_rng(seed)
    total = int(np.prod(dims))
    if model == UNIFORM:
        m = min(_round_half_up(rate * total), total)
        flat = np.zeros(total, dtype=bool)
        flat[rng.choice(total, size=m, replace=False)] = True
    elif model == BERNOULLI:
        flat = rng.random(total) < rate
    else:
        raise ValueError(f"unknown sampling model {model!r}")
    return ObservationMask(
        flat.reshape(dims), model=model, rate=float(rate), seed=seed if isinstance(seed, int) else None
    )


def as_mask(mask, dims) -> ObservationMask:
    """Coerce ``None``, a boolean array or an :class:`ObservationMask`."""
    if mask is None:
        return ObservationMask.full(dims)
    if not isinstance(mask, ObservationMask):
        mask = ObservationMask(np.asarray(mask, dtype=bool))
    if mask.dims != tuple(dims):
        raise DimensionMismatch(f"mask has shape {mask.dims} but data has shape {tuple(dims)}")
    return mask


def project_omega(a, mask: ObservationMask, complement: bool = False) -> np.ndarray:
    a = check_tensor3(a)
    if mask.dims != a.shape:
        raise DimensionMismatch(f"mask has shape {mask.dims} but tensor has shape {a.shape}")
    keep = ~mask.observed if complement else mask.observed
    return np.where(keep, a, 0.0)


class TangentSpace:
    """Tangent space at a low-tubal-rank tensor with skinny factors ``u``, ``v``.

    The column and row projectors ``u * u^H`` and ``v * v^H`` are cached in
    the Fourier domain (half spectrum) so projections cost a pair of real
    FFTs plus batched slice products.
    """

    def __init__(self, u, v):
        self.u = check_tensor3(u, "u")
        self.v = check_tensor3(v, "v")
        if self.u.shape[1] != self.v.shape[1] or self.u.shape[2] != self.v.shape[2]:
            raise DimensionMismatch(f"incompatible factors {self.u.shape} and {self.v.shape}")
        uh = _spectral.half_spectrum(self.u)
        vh = _spectral.half_spectrum(self.v)
        self._pu = uh @ np.conj(np.swapaxes(uh, 1, 2))
        self._pv = vh @ np.conj(np.swapaxes(vh, 1, 2))

    @classmethod
    def from_tensor(cls, l0, rank: int | None = None, threshold: float = RANK_THRESHOLD):
        l0 = check_tensor3(l0)
        if rank is None:
            rank = tubal_ranks(l0, threshold).tubal_rank
        if rank == 0:
            raise ZeroTensor("tangent space of the zero tensor is undefined")
        f = tsvd_skinny(l0, rank)
        return cls(f.u, f.v)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.u.shape[0], self.v.shape[0], self.u.shape[2])

    @property
    def rank(self) -> int:
        return self.u.shape[1]

    def project(self, z, perp: bool = False) -> np.ndarray:
        z = check_tensor3(z)
        if z.shape != self.dims:
            raise DimensionMismatch(f"tensor has shape {z.shape}, tangent space lives in {self.dims}")
        zh = _spectral.half_spectrum(z)
        pu_z = self._pu @ zh
        z_pv = zh @ self._pv
        if perp:
            # (I - U U^H) Z (I - V V^H)
            out = zh - pu_z - z_pv + pu_z @ self._pv
        else:
            out = pu_z + z_pv - pu_z @ self._pv
        return _spectral.from_half_spectrum(out, z.shape[2])


def project_tangent(z, t: TangentSpace, perp: bool = False) -> np.ndarray:
    """``P_T(z) = U U^H z + z V V^H - U U^H z V V^H``; ``perp=True`` gives
    ``(I - U U^H) z (I - V V^H)``."""
    return t.project(z, perp=perp)


@dataclass(frozen=True)
class IncoherenceReport:
    mu_u: float
    mu_v: float
    mu_joint: float
    rank: int

    @property
    def mu(self) -> float:
        """The largest of the three, the tightest single parameter satisfying all conditions."""
        return max(self.mu_u, self.mu_v, self.mu_joint)


def incoherence(l0, rank_threshold: float = RANK_THRESHOLD, rank: int | None = None) -> IncoherenceReport:
    """Tightest incoherence parameters of ``l0``.

    ``||U^H * e_i||_F`` equals the norm of horizontal slice ``U[i, :, :]``
    because t-multiplying by a column basis tensor selects a lateral slice.
    """
    l0 = check_tensor3(l0)
    if not np.any(l0):
        raise ZeroTensor("incoherence of the zero tensor is undefined")
    t = TangentSpace.from_tensor(l0, rank=rank, threshold=rank_threshold)
    n1, n2, n3 = l0.shape
    r = t.rank
    mu_u = n1 / r * float(np.max(np.sum(t.u**2, axis=(1, 2))))
    mu_v = n2 / r * float(np.max(np.sum(t.v**2, axis=(1, 2))))
    uv = t_product(t.u, conj_transpose(t.v))
    mu_joint = n1 * n2 * n3 / r * float(np.max(np.abs(uv))) ** 2
    return IncoherenceReport(mu_u=mu_u, mu_v=mu_v, mu_joint=mu_joint, rank=r)


def soft_threshold(a, tau: float, mask: ObservationMask | None = None) -> np.ndarray:
    """Entrywise shrinkage ``sign(x) * max(|x| - tau, 0)``, on masked entries only
    when ``mask`` is given."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    a = check_tensor3(a)
    shrunk = np.sign(a) * np.maximum(np.abs(a) - tau, 0.0)
    if mask is None:
        return shrunk
    check_same_shape(a, mask.observed, ("tensor", "mask"))
    return np.where(mask.observed, shrunk, a)
