"""State, covariant calculus and observables of the Chern-Simons-Higgs system.

Temporal gauge ``A_0 = 0``; spatial indices are contracted with the
Euclidean metric throughout:

    D_j phi = d_j phi - i A_j phi,
    d_t A_1 = -2 Im(conj(phi) D_2 phi),   d_t A_2 = 2 Im(conj(phi) D_1 phi),
    d_t^2 phi = sum_j D_j D_j phi - phi V'(|phi|^2),
    d_1 A_2 - d_2 A_1 = 2 Im(conj(phi) d_t phi).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import TorusGrid, helmholtz_decompose


class CompatibilityError(ValueError):
    """Initial data violate the constraint and cannot be repaired."""


class TopologicalObstructionError(CompatibilityError):
    """``mean(Im(conj(phi0) phi1)) != 0``: no periodic A has that curl."""


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class CSHState:
    """One time slice: ``phi``, ``phi_t`` and the gauge field.

    ``a`` holds the mean-free part of the spatial gauge field (shape
    ``(2, n, n)``, real) and ``a_mean`` its k = 0 mode, so the full field is
    ``a + a_mean``.  The Helmholtz parts are derived on demand.
    """

    grid: TorusGrid
    t: float
    phi: np.ndarray
    phi_t: np.ndarray
    a: np.ndarray
    a_mean: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=complex))
        object.__setattr__(self, "phi_t", np.asarray(self.phi_t, dtype=complex))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "a_mean", np.asarray(self.a_mean, dtype=float).reshape(2))
        shape = self.grid.shape
        if self.phi.shape != shape or self.phi_t.shape != shape or self.a.shape != (2, *shape):
            raise ValueError("state arrays do not match the grid")

    @classmethod
    def zero(cls, grid: TorusGrid, t: float = 0.0) -> "CSHState":
        z = np.zeros(grid.shape)
        return cls(grid, t, z, z, np.zeros((2, *grid.shape)))

    @cached_property
    def _split(self):
        return helmholtz_decompose(self.grid, self.a)

    @property
    def a_df(self) -> np.ndarray:
        return self._split[0]

    @property
    def a_cf(self) -> np.ndarray:
        return self._split[1]

    @property
    def gauge_field(self) -> np.ndarray:
        """Total spatial gauge field ``A`` including its mean."""
        return self.a + self.a_mean[:, None, None]

    def replace(self, **changes) -> "CSHState":
        kw = dict(t=self.t, phi=self.phi, phi_t=self.phi_t, a=self.a, a_mean=self.a_mean)
        kw.update(changes)
        return CSHState(self.grid, **kw)


@dataclass(frozen=True)
class Potential:
    """Polynomial Higgs potential ``V(r) = sum_k coeffs[k-1] r^k`` (V(0) = 0)."""

    coeffs: tuple[float, ...] = ()
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    @property
    def derivative_coeffs(self) -> tuple[float, ...]:
        """Coefficients of ``V'(r)`` in increasing powers of r."""
        return tuple((k + 1) * c for k, c in enumerate(self.coeffs))


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("potential argument r must be nonnegative")
    return r


def eval_potential(V: Potential, r) -> np.ndarray:
    r = _check_r(r)
    out = np.zeros_like(r)
    for c in reversed(V.coeffs):
        out = (out + c) * r
    return out


def eval_potential_prime(V: Potential, r) -> np.ndarray:
    r = _check_r(r)
    out = np.zeros_like(r)
    for k in range(len(V.coeffs), 0, -1):
        out = out * r + k * V.coeffs[k - 1]
    return out


def check_sign_condition(V: Potential, alpha: float, r_max: float, samples: int = 10001) -> bool:
    """Check ``V(r) >= -alpha^2 r`` on ``[0, r_max]`` and at infinity.

    Dense uniform sampling covers the interval; the sign of the leading
    coefficient of ``V(r) + alpha^2 r`` settles the behaviour beyond it.
    """
    r = np.linspace(0.0, r_max, samples)
    if np.any(eval_potential(V, r) + alpha**2 * r < 0):
        return False
    poly = list(V.coeffs) or [0.0]
    poly[0] += alpha**2
    nonzero = [c for c in poly if c != 0.0]
    return not nonzero or nonzero[-1] > 0


def covariant_gradient(grid: TorusGrid, phi: np.ndarray, a: np.ndarray, dealias: bool = True) -> np.ndarray:
    """``(D_1 phi, D_2 phi)`` stacked as (2, n, n); ``a`` is the full field."""
    dphi = grid.grad(np.asarray(phi, dtype=complex))
    out = dphi - 1j * a * phi
    if dealias:
        out = grid.dealias_array(out)
    return out


def matter_current(grid: TorusGrid, phi: np.ndarray, a: np.ndarray, dealias: bool = True) -> np.ndarray:
    """``J_j = Im(conj(phi) D_j phi)``."""
    dphi = covariant_gradient(grid, phi, a, dealias=False)
    out = np.imag(np.conj(phi) * dphi)
    if dealias:
        out = grid.dealias_array(out)
    return out


def adf_from_matter(grid: TorusGrid, phi: np.ndarray, phi_t: np.ndarray, dealias: bool = False) -> np.ndarray:
    """Divergence-free gauge field fixed by the constraint.

    ``A^df_1 = -2 Lap^-1 d_2 Im(conj(phi) phi_t)``,
    ``A^df_2 =  2 Lap^-1 d_1 Im(conj(phi) phi_t)``.
    """
    rho_hat = grid.fft(np.imag(np.conj(phi) * phi_t))
    if dealias:
        rho_hat = rho_hat * grid.dealias_mask
    k1, k2 = grid.kt
    # Lap^-1 d_j <-> -i k_j / |k|^2
    a1 = -2 * (-1j * k2 * grid.inv_ksq) * rho_hat
    a2 = 2 * (-1j * k1 * grid.inv_ksq) * rho_hat
    return grid.ifft_real(np.stack([a1, a2]))


def energy_density(state: CSHState, V: Potential) -> np.ndarray:
    grid = state.grid
    dphi = covariant_gradient(grid, state.phi, state.gauge_field, dealias=False)
    dens = np.abs(state.phi_t) ** 2 + np.sum(np.abs(dphi) ** 2, axis=0)
    return dens + eval_potential(V, np.abs(state.phi) ** 2)


def energy(state: CSHState, V: Potential) -> float:
    return state.grid.integrate(energy_density(state, V))


def covariant_energy(state: CSHState) -> float:
    """``sum_mu ||D_mu phi||^2`` (the energy without the potential)."""
    return energy(state, Potential())


def constraint_residual(state: CSHState):
    """Field ``d_1 A_2 - d_2 A_1 - 2 Im(conj(phi) phi_t)`` and its L2 norm."""
    grid = state.grid
    res = grid.curl(state.a) - 2 * np.imag(np.conj(state.phi) * state.phi_t)
    return res, grid.l2(res)


def i_functional(state: CSHState) -> float:
    grid = state.grid
    dphi = covariant_gradient(grid, state.phi, state.gauge_field, dealias=False)
    return grid.l2(state.phi) + grid.l2(dphi[0]) + grid.l2(dphi[1]) + grid.l2(state.phi_t)


def covariant_sobolev_ratio(grid: TorusGrid, phi: np.ndarray, a: np.ndarray) -> float:
    """``||phi||_L4 / (||phi||_L2^(1/2) (sum_j ||D_j phi||_L2)^(1/2))``."""
    dphi = covariant_gradient(grid, phi, a, dealias=False)
    l4 = grid.integrate(np.abs(phi) ** 4) ** 0.25
    denom = np.sqrt(grid.l2(phi) * (grid.l2(dphi[0]) + grid.l2(dphi[1])))
    if denom == 0:
        raise ZeroDivisionError("degenerate field for the covariant Sobolev ratio")
    return float(l4 / denom)


def obstruction(grid: TorusGrid, phi0: np.ndarray, phi1: np.ndarray) -> float:
    """Spatial mean of ``Im(conj(phi0) phi1)``; must vanish on the torus."""
    return float(np.mean(np.imag(np.conj(phi0) * phi1)))


def make_compatible_data(
    grid: TorusGrid,
    phi0: np.ndarray,
    phi1: np.ndarray,
    a_cf_free: np.ndarray | None = None,
    a_mean=(0.0, 0.0),
    *,
    project: bool = False,
    check_obstruction: bool = True,
    t: float = 0.0,
) -> CSHState:
    """Assemble ``A(0) = a_cf_free + A^df(phi0, phi1) + a_mean``.

    A constant component of ``a_cf_free`` is moved into the mean.  With
    ``check_obstruction=False`` the mean of ``Im(conj(phi0) phi1)`` is not
    checked (for runs where the gauge field is decoupled).
    """
    phi0 = np.asarray(phi0, dtype=complex)
    phi1 = np.asarray(phi1, dtype=complex)
    if a_cf_free is None:
        a_cf_free = np.zeros((2, *grid.shape))
    a_cf_free = np.asarray(a_cf_free, dtype=float)
    df, cf, mean = helmholtz_decompose(grid, a_cf_free)
    curl_l2 = grid.l2(grid.curl(a_cf_free))
    if curl_l2 > 1e-10 and not project:
        raise CompatibilityError(
            f"a_cf_free has curl of L2 size {curl_l2:.3e}; pass project=True to drop it"
        )
    if check_obstruction:
        obs = obstruction(grid, phi0, phi1)
        scale = max(1.0, float(np.mean(np.abs(phi0) * np.abs(phi1))))
        if abs(obs) > 1e-12 * scale:
            raise TopologicalObstructionError(
                f"mean of Im(conj(phi0) phi1) is {obs:.3e}; the curl of a periodic "
                "gauge field has zero mean, so the constraint cannot hold"
            )
    a = cf + adf_from_matter(grid, phi0, phi1)
    return CSHState(grid, t, phi0, phi1, a, np.asarray(a_mean, dtype=float) + mean)


@dataclass
class HalfWavePair:
    phi_plus: np.ndarray
    phi_minus: np.ndarray


def half_wave_split(grid: TorusGrid, phi: np.ndarray, phi_t: np.ndarray) -> HalfWavePair:
    """``phi_pm = (phi -+ i <grad>^-1 phi_t) / 2``."""
    inv = grid.nyquist_free / grid.bracket
    w = grid.ifft(inv * grid.fft(phi_t))
    return HalfWavePair(0.5 * (phi - 1j * w), 0.5 * (phi + 1j * w))


def half_wave_merge(grid: TorusGrid, pair: HalfWavePair):
    """Inverse of :func:`half_wave_split`: returns ``(phi, phi_t)``."""
    phi = pair.phi_plus + pair.phi_minus
    diff = grid.fft(pair.phi_plus - pair.phi_minus)
    phi_t = 1j * grid.ifft(grid.bracket * grid.nyquist_free * diff)
    return phi, phi_t
