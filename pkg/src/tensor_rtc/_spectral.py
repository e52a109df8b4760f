"""Half-spectrum helpers exploiting conjugate symmetry of real tubes.

For a real tube of length n3 the DFT satisfies ``X[n3 - k] = conj(X[k])``,
so only slices ``k = 0 .. n3 // 2`` carry independent information. Slice 0
(and slice ``n3 / 2`` when n3 is even) is self-conjugate, i.e. real.
"""

from __future__ import annotations

import numpy as np


def half_spectrum(a: np.ndarray) -> np.ndarray:
    """Independent spectral slices, stacked as ``(n3 // 2 + 1, n1, n2)``."""
    return np.moveaxis(np.fft.rfft(a, axis=2), 2, 0)


def from_half_spectrum(stack: np.ndarray, n3: int) -> np.ndarray:
    """Real tensor whose half spectrum is ``stack``."""
    return np.ascontiguousarray(np.fft.irfft(np.moveaxis(stack, 0, 2), n=n3, axis=2))


def slice_weights(n3: int) -> np.ndarray:
    """Multiplicity of each half-spectrum slice within the full spectrum."""
    w = np.full(n3 // 2 + 1, 2.0)
    w[0] = 1.0
    if n3 % 2 == 0:
        w[-1] = 1.0
    return w


def self_conjugate(n3: int) -> list[int]:
    """Half-spectrum slice indices whose spectral slice is real."""
    return [0, n3 // 2] if n3 % 2 == 0 and n3 > 1 else [0]


def mirror(stack: np.ndarray, n3: int) -> np.ndarray:
    """Expand a half-spectrum stack to all n3 slices, shape ``(n1, n2, n3)``."""
    h = stack.shape[0]
    full = np.empty(stack.shape[1:] + (n3,), dtype=complex)
    full[:, :, :h] = np.moveaxis(stack, 0, 2)
    for k in range(h, n3):
        full[:, :, k] = np.conj(stack[n3 - k])
    return full
