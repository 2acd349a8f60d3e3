"""Band-limited initial data generators."""
from __future__ import annotations

import numpy as np

from .model import CSHState, Potential, make_compatible_data
from .spectral import ScalarField, TorusGrid, sobolev_norm

KINDS = ("zero", "plane-wave", "gaussian-bump", "random-band", "from-snapshot")


def random_band_field(grid: TorusGrid, kmax: int, rng: np.random.Generator, rms: float = 1.0, real: bool = False):
    """Random field with Gaussian coefficients on ``|m| <= kmax``, scaled to
    the given root-mean-square amplitude."""
    m1, m2 = grid.modes
    band = (m1**2 + m2**2) <= kmax**2
    if kmax >= grid.n // 3:
        raise ValueError("kmax must lie inside the dealiased band")
    coeffs = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * band
    values = grid.ifft(coeffs)
    if real:
        values = values.real
    norm = np.sqrt(np.mean(np.abs(values) ** 2))
    return values * (rms / norm) if norm > 0 else values


def remove_obstruction(phi0: np.ndarray, phi1: np.ndarray) -> np.ndarray:
    """Shift ``phi1`` along ``i phi0`` so that ``mean(Im(conj(phi0) phi1)) = 0``."""
    dens = np.mean(np.abs(phi0) ** 2)
    if dens == 0:
        return phi1
    c = np.mean(np.imag(np.conj(phi0) * phi1)) / dens
    return phi1 - 1j * c * phi0


def random_state(
    grid: TorusGrid,
    seed: int = 0,
    *,
    kmax: int = 3,
    phi_rms: float = 0.5,
    phit_rms: float = 0.5,
    a_rms: float = 0.3,
    a_mean=(0.1, -0.2),
) -> CSHState:
    """Compatible random state: random matter fields, gradient-type ``A^cf``."""
    rng = np.random.default_rng(seed)
    phi0 = random_band_field(grid, kmax, rng, phi_rms)
    phi1 = remove_obstruction(phi0, random_band_field(grid, kmax, rng, phit_rms))
    psi = random_band_field(grid, kmax, rng, 1.0, real=True)
    grad = grid.grad(psi)
    norm = np.sqrt(np.mean(grad**2))
    a_cf = grad * (a_rms / norm) if a_rms > 0 else np.zeros_like(grad)
    return make_compatible_data(grid, phi0, phi1, a_cf, a_mean)


def plane_wave(grid: TorusGrid, m=(1, 0), amplitude: float = 1.0, mass_sq: float = 1.0, sign: int = 1):
    """``phi = amplitude * exp(i (k.x - sign * omega t))`` at t = 0 and its time
    derivative, ``omega = sqrt(|k|^2 + mass_sq)``."""
    scale = 2 * np.pi / grid.period
    k1, k2 = scale * m[0], scale * m[1]
    x1, x2 = grid.x
    omega = np.sqrt(k1**2 + k2**2 + mass_sq)
    phi0 = amplitude * np.exp(1j * (k1 * x1 + k2 * x2))
    return phi0, -1j * sign * omega * phi0


def gaussian_bump(grid: TorusGrid, amplitude: float = 1.0, width: float = 0.5, center=None):
    """Periodized Gaussian truncated to the dealiased band."""
    L = grid.period
    if center is None:
        center = (L / 2, L / 2)
    x1, x2 = grid.x
    out = np.zeros(grid.shape)
    for s1 in (-1, 0, 1):
        for s2 in (-1, 0, 1):
            r2 = (x1 - center[0] + s1 * L) ** 2 + (x2 - center[1] + s2 * L) ** 2
            out += np.exp(-r2 / (2 * width**2))
    return amplitude * grid.dealias_array(out).astype(complex)


def build_initial(grid: TorusGrid, spec, V: Potential, *, check_obstruction: bool = True) -> CSHState:
    """Construct compatible initial data described by an ``[initial]`` config section."""
    kind = spec.kind
    if kind == "zero":
        return CSHState.zero(grid)
    if kind == "random-band":
        st = random_state(
            grid,
            spec.seed,
            kmax=spec.kmax,
            phi_rms=spec.amplitude,
            phit_rms=spec.velocity,
            a_rms=spec.gauge_amplitude,
            a_mean=spec.a_mean,
        )
        return st
    if kind == "plane-wave":
        mass_sq = V.coeffs[0] if V.coeffs else 0.0
        phi0, phi1 = plane_wave(grid, spec.mode, spec.amplitude, mass_sq, spec.sign)
    elif kind == "gaussian-bump":
        phi0 = gaussian_bump(grid, spec.amplitude, spec.width)
        phi1 = np.zeros_like(phi0)
    else:
        raise ValueError(f"unknown initial-data kind {kind!r}")
    return make_compatible_data(grid, phi0, phi1, None, spec.a_mean, check_obstruction=check_obstruction)


def unit_h1_state(grid: TorusGrid, seed: int = 0, *, kmax: int = 3, a_size: float = 0.5, a_mean=(0.1, -0.2)) -> CSHState:
    """Compatible random state with ``||phi0||_{H^1} = ||phi1||_{L^2} = 1`` and
    ``||A^cf||_{L^2} = a_size``."""
    rng = np.random.default_rng(seed)
    phi0 = random_band_field(grid, kmax, rng)
    phi0 = phi0 / sobolev_norm(ScalarField(grid, phi0), 1.0)
    phi1 = remove_obstruction(phi0, random_band_field(grid, kmax, rng))
    phi1 = phi1 / grid.l2(phi1)
    grad = grid.grad(random_band_field(grid, kmax, rng, real=True))
    size = np.sqrt(grid.integrate(np.sum(grad**2, axis=0)))
    a_cf = grad * (a_size / size) if a_size > 0 else np.zeros_like(grad)
    return make_compatible_data(grid, phi0, phi1, a_cf, a_mean)
