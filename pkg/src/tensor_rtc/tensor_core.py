"""Dense third-order tensors and the t-product algebra.

Storage and indexing
--------------------
A tensor is a real ``numpy.ndarray`` of shape ``(n1, n2, n3)`` in C order,
so the frontal-slice index ``k`` varies fastest in memory. Frontal slice
``k`` is ``a[:, :, k]`` and tube ``(i, j)`` is ``a[i, j, :]``.

Array indices are 0-based. The 1-based ``(i, j, k)`` notation used in the
literature maps to ``a[i - 1, j - 1, k - 1]``; the only public surfaces that
take 1-based indices are :class:`BasisSpec` and the mask text format.

A spectral tensor is the complex array of the same shape holding the DFT of
every tube (``numpy.fft.fft(a, axis=2)``): the forward transform is
unnormalized and the inverse carries the ``1/n3`` factor. Its slices are
``ahat[:, :, k]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, ImaginaryResidueTooLarge, IndexOutOfBounds
from .validation import check_same_shape, check_tensor3

IMAG_RESIDUE_TOL = 1e-10

__all__ = [
    "BasisSpec",
    "basis",
    "column_basis",
    "conj_transpose",
    "dft_mode3",
    "identity_tensor",
    "idft_mode3",
    "inner_product",
    "is_f_diagonal",
    "is_orthogonal",
    "norm",
    "spectral_norm",
    "t_product",
    "tube_basis",
    "unit_tensor",
]


def dft_mode3(a) -> np.ndarray:
    """Unnormalized DFT of every mode-3 tube."""
    a = check_tensor3(a)
    return np.fft.fft(a, axis=2)


def idft_mode3(ahat, tol: float = IMAG_RESIDUE_TOL) -> np.ndarray:
    """Inverse of :func:`dft_mode3`, returning a real tensor.

    The imaginary part of the result is discarded after checking that no
    entry exceeds ``tol * ||ahat||_F`` in magnitude.
    """
    ahat = np.asarray(ahat)
    if ahat.ndim != 3:
        raise DimensionMismatch(f"spectral tensor must be 3-D, got shape {ahat.shape}")
    out = np.fft.ifft(ahat, axis=2)
    if np.iscomplexobj(out):
        residue = np.max(np.abs(out.imag), initial=0.0)
        bound = tol * np.linalg.norm(ahat)
        if residue > bound:
            raise ImaginaryResidueTooLarge(
                f"imaginary residue {residue:.3e} exceeds {bound:.3e}; "
                "the spectrum is not conjugate symmetric"
            )
        out = out.real
    return np.ascontiguousarray(out)


def _slices(ahat: np.ndarray) -> np.ndarray:
    # (n1, n2, n3) -> (n3, n1, n2) view for batched linear algebra
    return np.moveaxis(ahat, 2, 0)


def _unslices(stack: np.ndarray) -> np.ndarray:
    return np.moveaxis(stack, 0, 2)


def t_product(a, b) -> np.ndarray:
    """t-product ``a * b``, computed as slice-wise products in the Fourier domain."""
    a = check_tensor3(a, "a")
    b = check_tensor3(b, "b")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimensionMismatch(
            f"cannot t-multiply shapes {a.shape} and {b.shape}: "
            "inner dimension and n3 must agree"
        )
    ahat = _slices(np.fft.fft(a, axis=2))
    bhat = _slices(np.fft.fft(b, axis=2))
    return idft_mode3(_unslices(ahat @ bhat))


def conj_transpose(a) -> np.ndarray:
    """Tensor conjugate transpose: transpose every frontal slice, then
    reverse the order of slices 2 through n3."""
    a = check_tensor3(a)
    at = a.transpose(1, 0, 2)
    order = (-np.arange(a.shape[2])) % a.shape[2]
    return np.ascontiguousarray(at[:, :, order])


def identity_tensor(n: int, n3: int) -> np.ndarray:
    if n < 1 or n3 < 1:
        raise ValueError(f"identity_tensor needs n, n3 >= 1, got {n}, {n3}")
    out = np.zeros((n, n, n3))
    out[:, :, 0] = np.eye(n)
    return out


def inner_product(a, b) -> float:
    a = check_tensor3(a, "a")
    b = check_tensor3(b, "b")
    check_same_shape(a, b)
    return float(np.vdot(a, b))


def norm(a, kind: str = "fro") -> float:
    """Entrywise tensor norm; ``kind`` is one of ``"l1"``, ``"linf"``, ``"fro"``."""
    a = check_tensor3(a)
    if kind == "l1":
        return float(np.abs(a).sum())
    if kind == "linf":
        return float(np.abs(a).max())
    if kind == "fro":
        return float(np.linalg.norm(a.ravel()))
    raise ValueError(f"unknown norm kind {kind!r}")


def spectral_norm(a) -> float:
    """Spectral norm of the block-diagonal Fourier form: the largest singular
    value over all spectral slices."""
    a = check_tensor3(a)
    half = np.fft.rfft(a, axis=2)
    s = np.linalg.svd(_slices(half), compute_uv=False)
    return float(s.max(initial=0.0))


@dataclass(frozen=True)
class BasisSpec:
    """A standard basis element, with 1-based indices.

    ``kind="column"``: ``index=(i,)`` and ``dims=(n1, n3)``, an ``n1 x 1 x n3``
    tensor with a one at ``(i, 1, 1)``.
    ``kind="tube"``: ``index=(k,)`` and ``dims=(n3,)``, a ``1 x 1 x n3`` tube
    with a one at ``(1, 1, k)``.
    ``kind="unit"``: ``index=(i, j, k)`` and ``dims=(n1, n2, n3)``.
    """

    kind: str
    index: tuple
    dims: tuple

    def shape(self) -> tuple[int, int, int]:
        if self.kind == "column":
            n1, n3 = self.dims
            return (n1, 1, n3)
        if self.kind == "tube":
            (n3,) = self.dims
            return (1, 1, n3)
        if self.kind == "unit":
            return tuple(self.dims)
        raise ValueError(f"unknown basis kind {self.kind!r}")

    def position(self) -> tuple[int, int, int]:
        """0-based array position of the nonzero entry."""
        shape = self.shape()
        if self.kind == "column":
            pos = (self.index[0], 1, 1)
        elif self.kind == "tube":
            pos = (1, 1, self.index[0])
        else:
            pos = tuple(self.index)
        if len(pos) != 3 or any(not 1 <= p <= n for p, n in zip(pos, shape)):
            raise IndexOutOfBounds(f"basis index {self.index} outside {shape}")
        return tuple(p - 1 for p in pos)


def basis(spec: BasisSpec) -> np.ndarray:
    out = np.zeros(spec.shape())
    out[spec.position()] = 1.0
    return out


def column_basis(i: int, n1: int, n3: int) -> np.ndarray:
    return basis(BasisSpec("column", (i,), (n1, n3)))


def tube_basis(k: int, n3: int) -> np.ndarray:
    return basis(BasisSpec("tube", (k,), (n3,)))


def unit_tensor(i: int, j: int, k: int, dims) -> np.ndarray:
    return basis(BasisSpec("unit", (i, j, k), tuple(dims)))


def is_orthogonal(q, tol: float = 1e-8) -> bool:
    q = check_tensor3(q)
    n1, n2, n3 = q.shape
    if n1 != n2:
        raise DimensionMismatch(f"orthogonality needs square frontal slices, got {q.shape}")
    eye = identity_tensor(n1, n3)
    qh = conj_transpose(q)
    return bool(
        np.linalg.norm(t_product(qh, q) - eye) <= tol
        and np.linalg.norm(t_product(q, qh) - eye) <= tol
    )


def is_f_diagonal(s, tol: float = 1e-10) -> bool:
    s = check_tensor3(s)
    off = ~np.eye(s.shape[0], s.shape[1], dtype=bool)
    return bool(np.all(np.abs(s[off]) <= tol))
