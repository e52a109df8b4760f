"""t-SVD, tubal rank, tubal nuclear norm and its proximal operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _spectral
from .exceptions import InvalidRank, NumericalFailure
from .tensor_core import conj_transpose, idft_mode3, t_product
from .validation import check_tensor3

RANK_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class TSvdFactors:
    """Factors of ``a = u * s * conj_transpose(v)``.

    ``spectral_singulars[k]`` holds the singular values of spectral slice
    ``k`` in nonincreasing order. Singular tubes are never reordered across
    slices.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    spectral_singulars: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return t_product(t_product(self.u, self.s), conj_transpose(self.v))


@dataclass(frozen=True)
class RankReport:
    multi_rank: np.ndarray
    tubal_rank: int
    threshold: float


def _svd_half(a: np.ndarray, full_matrices: bool):
    """Per-slice SVD of the independent half spectrum.

    Self-conjugate slices are factorized in real arithmetic so that the
    mirrored factor spectra stay conjugate symmetric and the inverse DFT
    returns real factors.
    """
    n3 = a.shape[2]
    stack = _spectral.half_spectrum(a)
    try:
        u, s, vh = np.linalg.svd(stack, full_matrices=full_matrices)
        for k in _spectral.self_conjugate(n3):
            uk, sk, vhk = np.linalg.svd(stack[k].real, full_matrices=full_matrices)
            u[k], s[k], vh[k] = uk, sk, vhk
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"slice SVD failed to converge: {exc}") from exc
    return u, s, vh


def _assemble(u, s, vh, n3: int, p: int, s_shape) -> TSvdFactors:
    h = u.shape[0]
    shat = np.zeros((h,) + s_shape, dtype=complex)
    idx = np.arange(p)
    shat[:, idx, idx] = s[:, :p]
    vhat = np.conj(np.swapaxes(vh, 1, 2))
    factors = [idft_mode3(_spectral.mirror(x, n3)) for x in (u, shat, vhat)]
    singulars = np.moveaxis(_spectral.mirror(s[:, None, :].astype(complex), n3), 2, 0)
    return TSvdFactors(*factors, spectral_singulars=np.ascontiguousarray(singulars[:, 0, :].real))


def tsvd(a) -> TSvdFactors:
    """Full t-SVD: ``u`` is n1 x n1 x n3, ``s`` is n1 x n2 x n3, ``v`` is n2 x n2 x n3.

    Slices are factorized in the Fourier domain; only the first
    ``n3 // 2 + 1`` are computed, the rest follow by conjugation.
    """
    a = check_tensor3(a)
    n1, n2, n3 = a.shape
    u, s, vh = _svd_half(a, full_matrices=True)
    return _assemble(u, s, vh, n3, min(n1, n2), (n1, n2))


def tsvd_skinny(a, r: int) -> TSvdFactors:
    """Skinny t-SVD keeping ``r`` singular tubes (u: n1 x r x n3, s: r x r x n3)."""
    a = check_tensor3(a)
    n1, n2, n3 = a.shape
    if not 1 <= r <= min(n1, n2):
        raise InvalidRank(f"rank {r} outside [1, {min(n1, n2)}]")
    u, s, vh = _svd_half(a, full_matrices=False)
    return _assemble(u[:, :, :r], s[:, :r], vh[:, :r, :], n3, r, (r, r))


def _singulars(a: np.ndarray, use_symmetry: bool):
    """Singular values of each spectral slice and each slice's multiplicity."""
    n3 = a.shape[2]
    if use_symmetry:
        stack = _spectral.half_spectrum(a)
        weights = _spectral.slice_weights(n3)
    else:
        stack = np.moveaxis(np.fft.fft(a, axis=2), 2, 0)
        weights = np.ones(n3)
    return np.linalg.svd(stack, compute_uv=False), weights


def tubal_ranks(a, threshold: float = RANK_THRESHOLD, use_symmetry: bool = True) -> RankReport:
    """Tubal multi-rank and tubal rank.

    A singular value counts as nonzero when it exceeds ``threshold`` times
    the largest singular value over all spectral slices.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    a = check_tensor3(a)
    n3 = a.shape[2]
    s, _ = _singulars(a, use_symmetry)
    smax = s.max(initial=0.0)
    if smax == 0.0:
        multi = np.zeros(n3, dtype=int)
    else:
        counts = (s > threshold * smax).sum(axis=1)
        if use_symmetry:
            multi = np.concatenate([counts, counts[1:(n3 + 1) // 2][::-1]])
        else:
            multi = counts
    return RankReport(multi_rank=multi.astype(int), tubal_rank=int(multi.max()), threshold=threshold)


def tnn(a, use_symmetry: bool = True) -> float:
    """Tubal nuclear norm: the average nuclear norm of the spectral slices."""
    a = check_tensor3(a)
    s, w = _singulars(a, use_symmetry)
    return float(w @ s.sum(axis=1) / a.shape[2])


def svt(g: np.ndarray, tau: float, use_symmetry: bool = True):
    """Spectral singular value thresholding.

    Returns ``(out, tnn_out, rank_out)``: the thresholded tensor, its tubal
    nuclear norm and the largest per-slice count of surviving singular
    values. ``g`` must already be a validated float array.
    """
    n3 = g.shape[2]
    if use_symmetry:
        stack = _spectral.half_spectrum(g)
        weights = _spectral.slice_weights(n3)
    else:
        stack = np.moveaxis(np.fft.fft(g, axis=2), 2, 0)
        weights = np.ones(n3)
    try:
        u, s, vh = np.linalg.svd(stack, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"slice SVD failed to converge: {exc}") from exc
    s = np.maximum(s - tau, 0.0)
    rank = int((s > 0).sum(axis=1).max(initial=0))
    if rank == 0:
        return np.zeros_like(g), 0.0, 0
    out_stack = (u[:, :, :rank] * s[:, None, :rank]) @ vh[:, :rank, :]
    if use_symmetry:
        out = _spectral.from_half_spectrum(out_stack, n3)
    else:
        out = idft_mode3(np.moveaxis(out_stack, 0, 2))
    return out, float(weights @ s.sum(axis=1) / n3), rank


def prox_tnn(g, tau: float, use_symmetry: bool = True) -> np.ndarray:
    """Proximal operator of the tubal nuclear norm,
    ``argmin_L tnn(L) + ||L - g||_F**2 / (2 tau)``.

    With ``||A||_F**2 = sum_k ||Ahat_k||_F**2 / n3`` the objective equals

        (1/n3) * sum_k ( ||Lhat_k||_* + ||Lhat_k - Ghat_k||_F**2 / (2 tau) ),

    which separates over spectral slices. The ``1/n3`` factors cancel, so
    each slice is soft-thresholded in its singular values at exactly
    ``tau``. Thresholding commutes with conjugation, so the result is real.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    g = check_tensor3(g)
    if tau == 0:
        return g.copy()
    return svt(g, tau, use_symmetry)[0]


def truncate_tubal(a, r: int) -> np.ndarray:
    """Keep the ``r`` largest singular values of every spectral slice."""
    a = check_tensor3(a)
    n1, n2, n3 = a.shape
    if not 1 <= r <= min(n1, n2):
        raise InvalidRank(f"rank {r} outside [1, {min(n1, n2)}]")
    u, s, vh = np.linalg.svd(_spectral.half_spectrum(a), full_matrices=False)
    stack = (u[:, :, :r] * s[:, None, :r]) @ vh[:, :r, :]
    return _spectral.from_half_spectrum(stack, n3)
