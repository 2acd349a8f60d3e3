"""Fourier calculus on the periodic square [0, L)^2.

Arrays are indexed ``values[i, j] = f(x1_i, x2_j)`` with ``x_i = i L / n``.
Spectral coefficients use the amplitude normalization

    f(x) = sum_m c_m exp(i k_m . x),    k_m = 2 pi m / L,

so the forward transform divides by the total point count.

Every multiplier zeroes the unpaired Nyquist row and column (``m = -n/2`` in
either direction); the Helmholtz split routes that content into the
divergence-free part so that the decomposition stays exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft


class RepresentationError(ValueError):
    """A field was passed in the wrong (physical/spectral) representation."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform ``n x n`` grid on the torus of side ``period``."""

    n_points: int
    period: float = 2 * np.pi

    def __post_init__(self):
        if self.n_points < 4 or self.n_points % 2:
            raise ValueError(f"n_points must be even and >= 4, got {self.n_points}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def n(self) -> int:
        return self.n_points

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_points, self.n_points)

    @property
    def dx(self) -> float:
        return self.period / self.n_points

    @property
    def area(self) -> float:
        return self.period**2

    @cached_property
    def x(self) -> tuple[np.ndarray, np.ndarray]:
        x1d = np.arange(self.n_points) * self.dx
        return tuple(np.meshgrid(x1d, x1d, indexing="ij"))

    @cached_property
    def modes(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer mode numbers ``(m1, m2)`` in FFT order."""
        m = np.rint(np.fft.fftfreq(self.n_points) * self.n_points).astype(int)
        return tuple(np.meshgrid(m, m, indexing="ij"))

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumbers ``2 pi m / L`` including the Nyquist entries."""
        m1, m2 = self.modes
        scale = 2 * np.pi / self.period
        return (scale * m1, scale * m2)

    @cached_property
    def ksq(self) -> np.ndarray:
        k1, k2 = self.k
        return k1**2 + k2**2

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def nyquist_free(self) -> np.ndarray:
        m1, m2 = self.modes
        half = self.n_points // 2
        return (m1 != -half) & (m2 != -half)

    @cached_property
    def kt(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumbers with the Nyquist row and column zeroed."""
        mask = self.nyquist_free
        return (self.k[0] * mask, self.k[1] * mask)

    @cached_property
    def inv_ksq(self) -> np.ndarray:
        """``1/|k|^2`` with value 0 at k = 0 and on the Nyquist lines."""
        out = np.zeros(self.shape)
        keep = (self.ksq > 0) & self.nyquist_free
        out[keep] = 1.0 / self.ksq[keep]
        return out

    @cached_property
    def bracket(self) -> np.ndarray:
        """``<k> = (1 + |k|^2)^(1/2)``."""
        return np.sqrt(1.0 + self.ksq)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        m1, m2 = self.modes
        return np.maximum(np.abs(m1), np.abs(m2)) * 3 <= self.n_points

    # -- array-level transforms ------------------------------------------

    def fft(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.fft2(values, norm="forward")

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return scipy.fft.ifft2(coeffs, norm="forward")

    def ifft_real(self, coeffs: np.ndarray) -> np.ndarray:
        return self.ifft(coeffs).real

    def deriv_hat(self, coeffs: np.ndarray, axis: int) -> np.ndarray:
        return 1j * self.kt[axis] * coeffs

    def grad(self, values: np.ndarray) -> np.ndarray:
        """Spectral gradient of a physical field, stacked as ``(2, n, n)``."""
        fh = self.fft(values)
        out = np.stack([self.ifft(self.deriv_hat(fh, 0)), self.ifft(self.deriv_hat(fh, 1))])
        return out.real if np.isrealobj(values) else out

    def div(self, a: np.ndarray) -> np.ndarray:
        ah = self.fft(a)
        return self.ifft_real(self.deriv_hat(ah[0], 0) + self.deriv_hat(ah[1], 1))

    def curl(self, a: np.ndarray) -> np.ndarray:
        """Scalar curl ``d1 a2 - d2 a1``."""
        ah = self.fft(a)
        return self.ifft_real(self.deriv_hat(ah[1], 0) - self.deriv_hat(ah[0], 1))

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        out = self.ifft(-self.ksq * self.nyquist_free * self.fft(values))
        return out.real if np.isrealobj(values) else out

    def dealias_array(self, values: np.ndarray) -> np.ndarray:
        out = self.ifft(self.dealias_mask * self.fft(values))
        return out.real if np.isrealobj(values) else out

    def mean(self, values: np.ndarray) -> np.ndarray:
        """Spatial mean over the last two axes."""
        return values.mean(axis=(-2, -1))

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoid quadrature over the torus (exact for band-limited data)."""
        return float(np.sum(values) * self.dx**2)

    def l2(self, values: np.ndarray) -> float:
        return float(np.sqrt(self.integrate(np.abs(values) ** 2)))


@dataclass
class ScalarField:
    """Field samples (``spectral=False``) or Fourier coefficients."""

    grid: TorusGrid
    values: np.ndarray
    spectral: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {self.values.shape}")

    def as_spectral(self) -> "ScalarField":
        return self if self.spectral else to_spectral(self)

    def as_physical(self) -> "ScalarField":
        return from_spectral(self) if self.spectral else self


def to_spectral(f: ScalarField) -> ScalarField:
    if f.spectral:
        raise RepresentationError("to_spectral expects a physical field")
    return ScalarField(f.grid, f.grid.fft(f.values), spectral=True)


def from_spectral(f: ScalarField) -> ScalarField:
    if not f.spectral:
        raise RepresentationError("from_spectral expects a spectral field")
    return ScalarField(f.grid, f.grid.ifft(f.values), spectral=False)


SYMBOLS = ("d1", "d2", "abs_pow", "bracket_pow", "invlap_d1", "invlap_d2", "neg_invlap")


def symbol(grid: TorusGrid, name: str, alpha: float | None = None) -> np.ndarray:
    """Multiplier values on the wavenumber lattice.

    ``d1, d2``: i k_j.  ``abs_pow``: |k|^alpha (0 at k = 0 when alpha < 0).
    ``bracket_pow``: <k>^alpha.  ``invlap_d1, invlap_d2``: -i k_j / |k|^2.
    ``neg_invlap``: 1/|k|^2.  Zero-mode conventions give 0 where undefined.
    """
    mask = grid.nyquist_free
    if name in ("d1", "d2"):
        return 1j * grid.kt[int(name[1]) - 1]
    if name in ("invlap_d1", "invlap_d2"):
        return -1j * grid.kt[int(name[-1]) - 1] * grid.inv_ksq
    if name == "neg_invlap":
        return grid.inv_ksq.copy()
    if alpha is None:
        raise ValueError(f"symbol {name!r} needs an exponent alpha")
    if name == "abs_pow":
        out = np.zeros(grid.shape)
        nz = grid.kabs > 0
        out[nz] = grid.kabs[nz] ** alpha
        if alpha == 0:
            out[~nz] = 1.0
        return out * mask
    if name == "bracket_pow":
        return grid.bracket**alpha * mask
    raise ValueError(f"unknown multiplier {name!r}; choose from {SYMBOLS}")


def apply_multiplier(f: ScalarField, name: str, alpha: float | None = None) -> ScalarField:
    fs = f.as_spectral()
    return ScalarField(f.grid, symbol(f.grid, name, alpha) * fs.values, spectral=True)


def helmholtz_hat(grid: TorusGrid, ah: np.ndarray):
    """Split spectral vector coefficients into (df, cf, mean)."""
    k1, k2 = grid.kt
    ktsq = k1**2 + k2**2
    inv = np.zeros(grid.shape)
    nz = ktsq > 0
    inv[nz] = 1.0 / ktsq[nz]
    kdot = (k1 * ah[0] + k2 * ah[1]) * inv
    cf = np.stack([k1 * kdot, k2 * kdot])
    mean = ah[:, 0, 0].copy()
    df = ah - cf
    df[:, 0, 0] = 0.0
    return df, cf, mean


def helmholtz_decompose(grid: TorusGrid, a: np.ndarray):
    """Split a real vector field ``a`` of shape (2, n, n).

    Returns ``(a_df, a_cf, mean)`` with ``a = a_df + a_cf + mean`` where
    ``a_df`` is divergence-free, ``a_cf`` curl-free, both mean-free.
    """
    a = np.asarray(a)
    if np.iscomplexobj(a):
        raise ValueError("helmholtz_decompose expects a real gauge field")
    df, cf, mean = helmholtz_hat(grid, grid.fft(a))
    return grid.ifft_real(df), grid.ifft_real(cf), mean.real


def curl_free_part(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    return helmholtz_decompose(grid, a)[1]


def div_free_part(grid: TorusGrid, a: np.ndarray) -> np.ndarray:
    return helmholtz_decompose(grid, a)[0]


def dealias(f: ScalarField) -> ScalarField:
    if not f.spectral:
        raise RepresentationError("dealias expects a spectral field")
    return ScalarField(f.grid, f.values * f.grid.dealias_mask, spectral=True)


def sobolev_norm(f: ScalarField, s: float, homogeneous: bool = False) -> float:
    """Continuum-scaled H^s (or homogeneous H^s) norm, p = 2.

    Uses ``||f||^2 = L^2 sum_m w_m^2 |c_m|^2`` with ``w = <k>^s`` or ``|k|^s``;
    the homogeneous version drops k = 0.
    """
    fs = f.as_spectral()
    grid = f.grid
    if homogeneous:
        w = np.zeros(grid.shape)
        nz = grid.kabs > 0
        w[nz] = grid.kabs[nz] ** s
    else:
        w = grid.bracket**s
    return float(np.sqrt(grid.area * np.sum((w * np.abs(fs.values)) ** 2)))


def weighted_norm(grid: TorusGrid, values: np.ndarray, eps: float, s: float) -> float:
    """``|| |grad|^eps a ||_{H^s}`` for a scalar or stacked vector field."""
    values = np.asarray(values)
    if values.ndim == 2:
        values = values[None]
    ch = grid.fft(values)
    w = np.zeros(grid.shape)
    nz = grid.kabs > 0
    w[nz] = grid.kabs[nz] ** eps
    w = w * grid.bracket**s
    return float(np.sqrt(grid.area * np.sum((w * np.abs(ch)) ** 2)))
