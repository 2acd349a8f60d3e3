"""Residual (time-independent) gauge transformations in temporal gauge."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CSHState
from .spectral import TorusGrid


@dataclass(frozen=True)
class GaugeFunction:
    """Static real gauge function ``chi``; its mean only rotates the phase."""

    chi: np.ndarray

    def __post_init__(self):
        chi = np.asarray(self.chi)
        if np.iscomplexobj(chi):
            if np.abs(chi.imag).max() > 0:
                raise ValueError("gauge function must be real-valued")
            chi = chi.real
        object.__setattr__(self, "chi", chi.astype(float))

    @property
    def mean(self) -> float:
        return float(self.chi.mean())

    def __neg__(self) -> "GaugeFunction":
        return GaugeFunction(-self.chi)


def apply_gauge(state: CSHState, chi: GaugeFunction | np.ndarray) -> CSHState:
    """``phi -> e^{i chi} phi``, ``phi_t -> e^{i chi} phi_t``, ``A -> A + grad chi``.

    ``grad chi`` is mean-free and curl-free, so the mean of A and its
    divergence-free part are untouched.
    """
    if not isinstance(chi, GaugeFunction):
        chi = GaugeFunction(chi)
    phase = np.exp(1j * chi.chi)
    grad = state.grid.grad(chi.chi)
    return state.replace(phi=phase * state.phi, phi_t=phase * state.phi_t, a=state.a + grad)


def coulomb_chi(grid: TorusGrid, a: np.ndarray) -> GaugeFunction:
    """``chi = (-Lap)^-1 div A``, which removes the curl-free part of A.

    The mean of A is left alone: no periodic ``chi`` can change it.
    """
    ah = grid.fft(np.asarray(a, dtype=float))
    k1, k2 = grid.kt
    div_hat = 1j * (k1 * ah[0] + k2 * ah[1])
    return GaugeFunction(grid.ifft_real(grid.inv_ksq * div_hat))
