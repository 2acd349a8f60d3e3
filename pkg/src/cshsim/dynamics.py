"""Right-hand sides and time stepping for both formulations.

Evolved variables per formulation (all tuples of arrays):

* ``direct``: ``(phi, phi_t, a, a_mean)`` with ``a`` the mean-free gauge field,
* ``reformulated``: ``(phi, phi_t, a_cf, a_mean)``; ``A^df`` is rebuilt from
  the matter fields at every stage and never integrated,
* ``halfwave``: ``(phi_plus, phi_minus, a_cf, a_mean)`` stepped with an
  integrating-factor RK4 whose linear propagator is exact.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import (
    CSHState,
    HalfWavePair,
    Potential,
    adf_from_matter,
    constraint_residual,
    eval_potential_prime,
    half_wave_merge,
    half_wave_split,
)
from .spectral import TorusGrid, helmholtz_hat

log = logging.getLogger(__name__)

FORMULATIONS = ("direct", "reformulated", "halfwave")

# dt <= CFL[formulation] / max|k|.  RK4 is stable on the imaginary axis up to
# |lambda dt| = 2 sqrt(2); the half-wave scheme treats the wave operator exactly.
CFL = {"direct": 2.8, "reformulated": 2.8, "halfwave": math.inf}


class BlowUpError(RuntimeError):
    def __init__(self, t: float, last_state: CSHState, trajectory: "Trajectory | None" = None):
        super().__init__(f"non-finite values after step ending at t = {t:.6g}")
        self.t = t
        self.last_state = last_state
        self.trajectory = trajectory


@dataclass
class SchemeConfig:
    dt: float
    t_end: float
    formulation: str = "reformulated"
    dealias: bool = True
    record_every: int = 1
    gauge_coupling: bool = True
    potential_on: bool = True

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if not self.dt > 0:
            raise ValueError("scheme.dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("scheme.t_end must be nonnegative")
        if self.record_every < 1:
            raise ValueError("scheme.record_every must be >= 1")


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    states: list[CSHState] = field(default_factory=list)
    records: list = field(default_factory=list)
    end_state: CSHState | None = None

    def append(self, state: CSHState, record=None):
        if self.times and not state.t > self.times[-1]:
            raise ValueError("trajectory times must increase")
        self.times.append(state.t)
        self.states.append(state)
        if record is not None:
            self.records.append(record)

    @property
    def final(self) -> CSHState:
        """State at the end of the run (recorded or not)."""
        return self.end_state if self.end_state is not None else self.states[-1]

    def __len__(self):
        return len(self.states)


def max_stable_dt(grid: TorusGrid, formulation: str) -> float:
    return CFL[formulation] / float(grid.kabs.max())


# -- shared physics ---------------------------------------------------------


def _matter_and_law(grid, phi, a_full, V, cfg):
    """Laplacian of phi, the remaining (nonlinear) part of d_t^2 phi, and the
    direct law for d_t A.  ``a_full`` is the total gauge field."""
    dealias = cfg.dealias
    phi_hat = grid.fft(phi)
    k1, k2 = grid.kt
    lap = grid.ifft(-grid.ksq * grid.nyquist_free * phi_hat)
    grad = np.stack([grid.ifft(1j * k1 * phi_hat), grid.ifft(1j * k2 * phi_hat)])
    nonlin = np.zeros_like(phi)
    if cfg.gauge_coupling:
        ah = grid.fft(a_full)
        div_a = grid.ifft_real(1j * k1 * ah[0] + 1j * k2 * ah[1])
        nonlin = (
            -2j * (a_full[0] * grad[0] + a_full[1] * grad[1])
            - 1j * div_a * phi
            - (a_full[0] ** 2 + a_full[1] ** 2) * phi
        )
        dphi = grad - 1j * a_full * phi
    else:
        dphi = grad
    if cfg.potential_on and V.coeffs:
        nonlin = nonlin - phi * eval_potential_prime(V, np.abs(phi) ** 2)
    current = np.imag(np.conj(phi) * dphi)
    law = np.stack([-2 * current[1], 2 * current[0]])
    if dealias:
        nonlin = grid.dealias_array(nonlin)
        law = grid.dealias_array(law)
    return lap, nonlin, law


def _project_law(grid, law):
    """Curl-free part and mean of the direct law (spectral projection)."""
    df, cf, mean = helmholtz_hat(grid, grid.fft(law))
    return grid.ifft_real(cf), mean.real


def _default_cfg(cfg):
    return cfg if cfg is not None else SchemeConfig(dt=1.0, t_end=0.0)


def rhs_direct(state: CSHState, V: Potential, cfg: SchemeConfig | None = None):
    """``(d_t phi, d_t^2 phi, d_t A)`` for the direct system.

    ``d_t A`` is the full (2, n, n) field including its mean.
    """
    cfg = _default_cfg(cfg)
    lap, nonlin, law = _matter_and_law(state.grid, state.phi, state.gauge_field, V, cfg)
    return state.phi_t.copy(), lap + nonlin, law


def rhs_reformulated(state: CSHState, V: Potential, cfg: SchemeConfig | None = None):
    """``(d_t phi, d_t^2 phi, d_t A^cf, d_t a_mean)`` with ``A^df`` rebuilt
    from the matter fields."""
    cfg = _default_cfg(cfg)
    grid = state.grid
    a_full = (
        adf_from_matter(grid, state.phi, state.phi_t, dealias=cfg.dealias)
        + state.a_cf
        + state.a_mean[:, None, None]
    )
    lap, nonlin, law = _matter_and_law(grid, state.phi, a_full, V, cfg)
    dacf, dmean = _project_law(grid, law)
    return state.phi_t.copy(), lap + nonlin, dacf, dmean


@dataclass
class NullFormTerms:
    """The three pieces of ``d_t A^cf`` plus their sum, each (2, n, n)."""

    null: np.ndarray
    cross: np.ndarray
    cubic: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.null + self.cross + self.cubic


def rhs_acf_nullform(state: CSHState, dealias: bool = False) -> NullFormTerms:
    """``d_t A^cf_j = Lap^-1 d_j S`` with ``S`` expanded as

    ``2 Q + 2 (A_2 d_1|phi|^2 - A_1 d_2|phi|^2) + 4 Im(conj(phi) phi_t) |phi|^2``

    where ``Q = Im(d_2 conj(phi) d_1 phi - d_1 conj(phi) d_2 phi)`` is the null
    form.  The last term uses the constraint, so the state must satisfy it.
    """
    grid = state.grid
    phi = state.phi
    a = state.gauge_field
    grad = grid.grad(phi)
    rho = np.abs(phi) ** 2
    grad_rho = grid.grad(rho)
    null = 2 * np.imag(np.conj(grad[1]) * grad[0] - np.conj(grad[0]) * grad[1])
    cross = 2 * (a[1] * grad_rho[0] - a[0] * grad_rho[1])
    cubic = 4 * np.imag(np.conj(phi) * state.phi_t) * rho
    k1, k2 = grid.kt

    def lift(s):
        sh = grid.fft(s)
        if dealias:
            sh = sh * grid.dealias_mask
        return grid.ifft_real(np.stack([-1j * k1 * grid.inv_ksq * sh, -1j * k2 * grid.inv_ksq * sh]))

    return NullFormTerms(lift(null), lift(cross), lift(cubic))


# -- integrators -------------------------------------------------------------


def _axpy(y, h, k):
    return tuple(yi + h * ki for yi, ki in zip(y, k))


def _finite(y) -> bool:
    return all(np.all(np.isfinite(yi)) for yi in y)


class _Stepper:
    """Formulation-specific packing and RK4 stepping."""

    def __init__(self, grid: TorusGrid, V: Potential, cfg: SchemeConfig):
        self.grid, self.V, self.cfg = grid, V, cfg

    def pack(self, state: CSHState):
        raise NotImplementedError

    def unpack(self, y, t: float) -> CSHState:
        raise NotImplementedError

    def rhs(self, y):
        raise NotImplementedError

    def _dealias_state(self, y):
        if not self.cfg.dealias:
            return y
        g = self.grid
        return (g.dealias_array(y[0]), g.dealias_array(y[1]), g.dealias_array(y[2]), y[3])

    def step(self, y, dt):
        k1 = self.rhs(y)
        k2 = self.rhs(_axpy(y, dt / 2, k1))
        k3 = self.rhs(_axpy(y, dt / 2, k2))
        k4 = self.rhs(_axpy(y, dt, k3))
        out = tuple(
            yi + dt / 6 * (a + 2 * b + 2 * c + d) for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
        )
        return self._dealias_state(out)


class _DirectStepper(_Stepper):
    def pack(self, state):
        return (state.phi, state.phi_t, state.a, state.a_mean)

    def unpack(self, y, t):
        return CSHState(self.grid, t, y[0], y[1], y[2], y[3])

    def rhs(self, y):
        phi, phi_t, a, mean = y
        lap, nonlin, law = _matter_and_law(self.grid, phi, a + mean[:, None, None], self.V, self.cfg)
        dmean = law.mean(axis=(1, 2))
        return (phi_t, lap + nonlin, law - dmean[:, None, None], dmean)


class _ReformulatedStepper(_Stepper):
    def pack(self, state):
        return (state.phi, state.phi_t, state.a_cf, state.a_mean)

    def full_field(self, phi, phi_t, a_cf, mean):
        return adf_from_matter(self.grid, phi, phi_t, dealias=self.cfg.dealias) + a_cf

    def unpack(self, y, t):
        phi, phi_t, a_cf, mean = y
        return CSHState(self.grid, t, phi, phi_t, self.full_field(*y), mean)

    def rhs(self, y):
        phi, phi_t, a_cf, mean = y
        a_full = self.full_field(*y) + mean[:, None, None]
        lap, nonlin, law = _matter_and_law(self.grid, phi, a_full, self.V, self.cfg)
        dacf, dmean = _project_law(self.grid, law)
        return (phi_t, lap + nonlin, dacf, dmean)


class _HalfWaveStepper(_ReformulatedStepper):
    """Integrating-factor RK4 on ``(phi_plus, phi_minus, a_cf, a_mean)``.

    ``d_t phi_pm = +-i <grad> phi_pm -+ (i/2) <grad>^-1 (N + phi)`` where
    ``N = d_t^2 phi - Lap phi``; the linear part is propagated exactly.
    """

    def pack(self, state):
        pair = half_wave_split(self.grid, state.phi, state.phi_t)
        return (pair.phi_plus, pair.phi_minus, state.a_cf, state.a_mean)

    def matter(self, y):
        return half_wave_merge(self.grid, HalfWavePair(y[0], y[1]))

    def unpack(self, y, t):
        phi, phi_t = self.matter(y)
        return super().unpack((phi, phi_t, y[2], y[3]), t)

    def rhs(self, y):
        g = self.grid
        phi, phi_t = self.matter(y)
        a_full = self.full_field(phi, phi_t, y[2], y[3]) + y[3][:, None, None]
        lap, nonlin, law = _matter_and_law(g, phi, a_full, self.V, self.cfg)
        forcing = g.ifft(g.nyquist_free / g.bracket * g.fft(nonlin + phi))
        dacf, dmean = _project_law(g, law)
        return (-0.5j * forcing, 0.5j * forcing, dacf, dmean)

    def propagate(self, y, h):
        g = self.grid
        phase = np.exp(1j * h * g.bracket) * g.nyquist_free
        return (
            g.ifft(phase * g.fft(y[0])),
            g.ifft(np.conj(phase) * g.fft(y[1])),
            y[2],
            y[3],
        )

    def step(self, y, dt):
        P = self.propagate
        k1 = self.rhs(y)
        k2 = self.rhs(P(_axpy(y, dt / 2, k1), dt / 2))
        k3 = self.rhs(_axpy(P(y, dt / 2), dt / 2, k2))
        k4 = self.rhs(_axpy(P(y, dt), dt, P(k3, dt / 2)))
        y_full = P(y, dt)
        k1p = P(k1, dt)
        k23 = P(tuple(b + c for b, c in zip(k2, k3)), dt / 2)
        out = tuple(
            yi + dt / 6 * (a + 2 * bc + d) for yi, a, bc, d in zip(y_full, k1p, k23, k4)
        )
        return self._dealias_state(out)


_STEPPERS = {
    "direct": _DirectStepper,
    "reformulated": _ReformulatedStepper,
    "halfwave": _HalfWaveStepper,
}


def make_stepper(grid: TorusGrid, V: Potential, cfg: SchemeConfig) -> _Stepper:
    return _STEPPERS[cfg.formulation](grid, V, cfg)


def step_rk4(state: CSHState, V: Potential, dt: float, cfg: SchemeConfig | None = None) -> CSHState:
    """One classical RK4 step of the direct or reformulated system."""
    cfg = _default_cfg(cfg)
    if cfg.formulation == "halfwave":
        raise ValueError("use step_halfwave for the half-wave formulation")
    stepper = make_stepper(state.grid, V, cfg)
    y = stepper.step(stepper.pack(state), dt)
    t = state.t + dt
    if not _finite(y):
        raise BlowUpError(t, state)
    return stepper.unpack(y, t)


def step_halfwave(
    grid: TorusGrid,
    pair: HalfWavePair,
    a_cf: np.ndarray,
    a_mean: np.ndarray,
    dt: float,
    V: Potential,
    cfg: SchemeConfig | None = None,
):
    """Advance ``(pair, a_cf, a_mean)`` by one integrating-factor RK4 step."""
    cfg = _default_cfg(cfg)
    stepper = _HalfWaveStepper(grid, V, cfg)
    y = stepper.step((pair.phi_plus, pair.phi_minus, a_cf, np.asarray(a_mean, dtype=float)), dt)
    if not _finite(y):
        raise BlowUpError(math.nan, CSHState.zero(grid))
    return HalfWavePair(y[0], y[1]), y[2], y[3]


def evolve(
    initial: CSHState,
    scheme: SchemeConfig,
    V: Potential,
    *,
    recorder: Callable[[CSHState], object] | None = None,
) -> Trajectory:
    """Integrate from ``initial`` to ``initial.t + scheme.t_end``.

    Snapshots (and ``recorder(state)`` results, when given) are stored every
    ``scheme.record_every`` steps, starting with the initial state.
    """
    grid = initial.grid
    nsteps = int(round(scheme.t_end / scheme.dt))
    if abs(nsteps * scheme.dt - scheme.t_end) > 1e-9 * max(1.0, scheme.t_end):
        raise ValueError("scheme.t_end must be an integer multiple of scheme.dt")
    if scheme.dt > max_stable_dt(grid, scheme.formulation):
        warnings.warn(
            f"dt = {scheme.dt} exceeds the tabulated stability bound "
            f"{max_stable_dt(grid, scheme.formulation):.3g}",
            stacklevel=2,
        )
    if scheme.gauge_coupling:
        _, res = constraint_residual(initial)
        if res > 1e-10:
            warnings.warn(f"initial constraint residual {res:.2e} exceeds 1e-10", stacklevel=2)

    stepper = make_stepper(grid, V, scheme)
    traj = Trajectory()

    def keep(state):
        traj.append(state, recorder(state) if recorder is not None else None)

    keep(initial)
    y = stepper.pack(initial)
    for i in range(1, nsteps + 1):
        y_prev = y
        y = stepper.step(y, scheme.dt)
        t = initial.t + i * scheme.dt
        if not _finite(y):
            traj.end_state = stepper.unpack(y_prev, t - scheme.dt)
            raise BlowUpError(t, traj.end_state, traj)
        if i % scheme.record_every == 0:
            keep(stepper.unpack(y, t))
    traj.end_state = traj.states[-1] if nsteps % scheme.record_every == 0 else stepper.unpack(
        y, initial.t + nsteps * scheme.dt
    )
    log.debug("evolved %d steps to t = %g", nsteps, initial.t + nsteps * scheme.dt)
    return traj
