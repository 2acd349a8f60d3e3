"""Discrete space-time norms and empirical checks of the linear estimates.

Space-time transforms use ``u^(tau, xi) ~ int e^{-i(t tau + x.xi)} u``, so a
wave ``e^{i(x.xi - t|xi|)}`` sits on ``tau = -|xi|`` and belongs to ``X_plus``
(weight ``<tau + |xi|>``).  Samples are tapered in time before transforming
(raised cosine over the first and last 10% of the window, peak value 1, no
renormalization).

A bounded ratio over seeded batches is evidence of a finite constant, not a
proof of one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy.signal.windows import tukey

from .model import covariant_sobolev_ratio
from .spectral import TorusGrid

X_FAMILIES = ("X_plus", "X_minus", "X_wave", "X_tau0")
FAMILIES = X_FAMILIES + ("mixed", "Lq", "sobolev")
WINDOWS = ("tukey", "none")


class ResolutionError(ValueError):
    pass


class DegenerateSampleError(ValueError):
    pass


def bracket(x):
    return np.sqrt(1.0 + np.square(x))


def taper(nt: int, name: str = "tukey") -> np.ndarray:
    if name == "tukey":
        return tukey(nt, alpha=0.2)
    if name == "none":
        return np.ones(nt)
    raise ValueError(f"unknown window {name!r}; choose from {WINDOWS}")


@dataclass
class SpaceTimeSample:
    """Values ``u(t_i, x)`` of shape ``(nt, n, n)`` on a uniform time grid."""

    grid: TorusGrid
    times: np.ndarray
    values: np.ndarray
    window: str = "tukey"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)
        if self.values.shape != (len(self.times), *self.grid.shape):
            raise ValueError("values must have shape (nt, n, n)")
        if len(self.times) > 1:
            steps = np.diff(self.times)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise ValueError("sample times must be uniformly spaced")
        taper(2, self.window)

    @property
    def nt(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def windowed(self) -> np.ndarray:
        return self.values * taper(self.nt, self.window)[:, None, None]

    def scaled(self, c) -> "SpaceTimeSample":
        return SpaceTimeSample(self.grid, self.times, c * self.values, self.window)


@dataclass
class NormSpec:
    family: str
    s: float = 0.0
    b: float = 0.0
    q: float = 2.0
    r: float = 2.0
    epsilon: float = 0.01

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown norm family {self.family!r}")
        if self.q < 1 or self.r < 1:
            raise ValueError("exponents must be >= 1 (math.inf allowed)")


def _modulation(family, tau, kabs):
    if family == "X_plus":
        return bracket(tau + kabs)
    if family == "X_minus":
        return bracket(tau - kabs)
    if family == "X_wave":
        return bracket(np.abs(tau) - kabs)
    if family == "X_tau0":
        return bracket(tau) + 0 * kabs
    raise ValueError(f"{family!r} is not an X-family")


def spacetime_spectrum(u: SpaceTimeSample):
    """Coefficients ``G[tau, m]`` of the windowed sample plus the ``tau`` grid.

    ``L^2 dt / nt * sum |G|^2`` is the windowed L^2_{xt} norm squared.
    """
    if u.nt < 8:
        raise ResolutionError("X^{s,b} norms need at least 8 time samples")
    spatial = scipy.fft.fft2(u.windowed(), axes=(1, 2), norm="forward")
    G = scipy.fft.fft(spatial, axis=0)
    tau = 2 * np.pi * np.fft.fftfreq(u.nt, u.dt)
    return G, tau


def xsb_norm(u: SpaceTimeSample, spec: NormSpec, *, _spectrum=None) -> float:
    """Discrete ``|| <xi>^s w(tau, xi)^b u^ ||_{L^2}`` for an X-family."""
    if spec.family not in X_FAMILIES:
        raise ValueError(f"xsb_norm needs an X-family, got {spec.family!r}")
    G, tau = _spectrum if _spectrum is not None else spacetime_spectrum(u)
    grid = u.grid
    mod = _modulation(spec.family, tau[:, None, None], grid.kabs[None])
    weight = grid.bracket[None] ** spec.s * mod**spec.b
    total = np.sum((weight * np.abs(G)) ** 2)
    return float(math.sqrt(grid.area * u.dt / u.nt * total))


def mixed_norm(u: SpaceTimeSample | np.ndarray, q: float, r: float, *, grid=None, dt=None, windowed=False) -> float:
    """``( int ( int |u|^r dt )^{q/r} dx )^{1/q}`` with the time integral inside.

    Trapezoid rule in time, the grid sum in space; ``math.inf`` is allowed
    for either exponent.
    """
    if isinstance(u, SpaceTimeSample):
        grid, dt = u.grid, u.dt
        vals = u.windowed() if windowed else u.values
    else:
        vals = np.asarray(u)
    a = np.abs(vals)
    if math.isinf(r):
        inner = a.max(axis=0)
    else:
        inner = np.trapezoid(a**r, dx=dt, axis=0) ** (1.0 / r)
    if math.isinf(q):
        return float(inner.max())
    return float((np.sum(inner**q) * grid.dx**2) ** (1.0 / q))


def lq_norm(u: SpaceTimeSample, q: float) -> float:
    return mixed_norm(u, q, q)


def free_wave_sample(
    grid: TorusGrid,
    band: tuple[float, float],
    seed: int = 0,
    sign: int = 1,
    dispersion: str = "abs",
    T: float = 2 * np.pi,
    nt: int | None = None,
    window: str = "tukey",
) -> SpaceTimeSample:
    """``u(t) = e^{-i sign t w(grad)} u0`` with random ``u0`` on the annulus
    ``band[0] <= |k| <= band[1]``, ``||u0||_{L^2} = 1``; ``w = |k|`` or ``<k>``.
    """
    kmin, kmax = band
    inside = (grid.kabs >= kmin) & (grid.kabs <= kmax) & grid.nyquist_free
    if not inside.any():
        raise ValueError(f"empty wavenumber band {band}")
    if kmax >= grid.kabs[grid.modes[1] == 0].max():
        raise ValueError("band exceeds grid resolution")
    if dispersion == "abs":
        omega = grid.kabs
    elif dispersion == "bracket":
        omega = grid.bracket
    else:
        raise ValueError("dispersion must be 'abs' or 'bracket'")
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * inside
    c /= math.sqrt(grid.area * np.sum(np.abs(c) ** 2))
    wmax = float(omega[inside].max())
    if nt is None:
        # time Nyquist frequency about twice the largest temporal frequency
        nt = max(32, int(math.ceil(2 * T * wmax / math.pi)) + 1)
    times = np.linspace(0.0, T, nt)
    phases = np.exp(-1j * sign * times[:, None, None] * omega[None])
    values = scipy.fft.ifft2(phases * c[None], axes=(1, 2), norm="forward")
    return SpaceTimeSample(grid, times, values, window)


def inequality_exponents(name: str, epsilon: float = 0.01):
    """``(q, r, s, b)`` for ``||u||_{L^q_x L^r_t} <~ ||u||_{X^{s,b}_{|tau|=|xi|}}``."""
    e = epsilon
    table = {
        "Str": (6.0, 6.0, 0.5, 0.5 + e),
        "T": (6.0, 2.0, 1 / 6, 0.5 + e),
        "I0": (2.0, 2.0, 0.0, 0.0),
        "I1": (6.0, 2.0 + e, 1 / 6 + e, 0.5 + e),
        "I2": (4.0, 4.0, 3 / 8, 3 / 8 + e),
        "I3": (4.0, 2.0 + e, 1 / 8 + e, 3 / 8 + e),
        "I4": (4.0 + e, 2.0 + e, 1 / 8 + e, 3 / 8 + e),
        "I5": (3.0, 2.0, 1 / 12, 1 / 4 + e),
        "I6": (2 / (1 - e), 2.0, e / 4, 0.75 * e + e),
    }
    if name not in table:
        raise ValueError(f"unknown inequality {name!r}")
    return table[name]


INEQUALITIES = ("Str", "T", "I0", "I1", "I2", "I3", "I4", "I5", "I6", "covariant-sobolev")


def estimate_ratio(u: SpaceTimeSample, inequality: str, epsilon: float = 0.01) -> float:
    """Left norm over right norm of the named inequality, both evaluated on the
    windowed sample.  ``covariant-sobolev`` uses the first time slice with
    ``A = 0``."""
    if inequality == "covariant-sobolev":
        try:
            return covariant_sobolev_ratio(u.grid, u.values[0], np.zeros((2, *u.grid.shape)))
        except ZeroDivisionError as exc:
            raise DegenerateSampleError(str(exc)) from None
    q, r, s, b = inequality_exponents(inequality, epsilon)
    rhs = xsb_norm(u, NormSpec("X_wave", s=s, b=b, epsilon=epsilon))
    if rhs == 0:
        raise DegenerateSampleError("right-hand norm vanishes")
    lhs = mixed_norm(u, q, r, windowed=True)
    return lhs / rhs


@dataclass
class BatchResult:
    inequality: str
    n: int
    ratios: list[float] = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)


def batch_ratios(
    grid: TorusGrid,
    inequality: str,
    seeds,
    band: tuple[float, float],
    *,
    T: float = 2 * np.pi,
    epsilon: float = 0.01,
    dispersion: str = "abs",
) -> BatchResult:
    out = BatchResult(inequality, grid.n)
    for seed in seeds:
        u = free_wave_sample(grid, band, seed=seed, T=T, dispersion=dispersion)
        out.ratios.append(estimate_ratio(u, inequality, epsilon))
    return out


def _as_vectors(*vs):
    out = [np.atleast_2d(np.asarray(v, dtype=float)) for v in vs]
    for v in out:
        if np.any(np.hypot(v[..., 0], v[..., 1]) == 0):
            raise ValueError("zero vector in angle computation")
    return out


def angle(u, v):
    """Angle in [0, pi] between 2-vectors (last axis), vectorized."""
    cross = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    dot = u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]
    return np.arctan2(np.abs(cross), dot)


def null_symbol_check(xi, eta):
    """``(|xi_1 eta_2 - xi_2 eta_1|, |xi| |eta| angle(xi, eta))``."""
    xi, eta = _as_vectors(xi, eta)
    lhs = np.abs(xi[..., 0] * eta[..., 1] - xi[..., 1] * eta[..., 0])
    rhs = np.hypot(xi[..., 0], xi[..., 1]) * np.hypot(eta[..., 0], eta[..., 1]) * angle(xi, eta)
    return lhs, rhs


def angle_bound_check(xi1, tau1, sign1, xi2, tau2, sign2, epsilon: float = 0.01):
    """Angle ``(sign1 xi1, sign2 xi2)`` and the two-term modulation bound.

    With ``xi3 = -xi1 - xi2`` and ``tau3 = -tau1 - tau2`` the bound is
    ``((<tau1 + s1|xi1|> + <tau2 + s2|xi2|>) / m)^(1/2)
    + (<|tau3| - |xi3|> / m)^(1/2 - eps)``, ``m = min(<xi1>, <xi2>)``.
    """
    xi1, xi2 = _as_vectors(xi1, xi2)
    tau1 = np.asarray(tau1, dtype=float)
    tau2 = np.asarray(tau2, dtype=float)
    s1 = np.asarray(sign1, dtype=float)
    s2 = np.asarray(sign2, dtype=float)
    lhs = angle(s1[..., None] * xi1, s2[..., None] * xi2)
    n1 = np.hypot(xi1[..., 0], xi1[..., 1])
    n2 = np.hypot(xi2[..., 0], xi2[..., 1])
    xi3 = -xi1 - xi2
    n3 = np.hypot(xi3[..., 0], xi3[..., 1])
    tau3 = -tau1 - tau2
    m = np.minimum(bracket(n1), bracket(n2))
    first = np.sqrt((bracket(tau1 + s1 * n1) + bracket(tau2 + s2 * n2)) / m)
    second = (bracket(np.abs(tau3) - n3) / m) ** (0.5 - epsilon)
    return lhs, first + second


def _random_vectors(rng, size, rmax):
    # log-uniform magnitudes in [1e-3, rmax], uniform directions
    r = np.exp(rng.uniform(np.log(1e-3), np.log(rmax), size))
    th = rng.uniform(0, 2 * np.pi, size)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


def sample_null_symbol(samples: int, rng: np.random.Generator, rmax: float = 1e3):
    """Random pairs for :func:`null_symbol_check`; returns ``(lhs, rhs)``."""
    xi = _random_vectors(rng, samples, rmax)
    eta = _random_vectors(rng, samples, rmax)
    # a tenth of the pairs are nearly parallel, where the bound is tight
    k = samples // 10
    eta[:k] = xi[:k] * rng.uniform(0.1, 10, (k, 1)) + rng.normal(0, 1e-6, (k, 2))
    return null_symbol_check(xi, eta)


def sample_angle_bound(samples: int, rng: np.random.Generator, epsilon: float = 0.01, rmax: float = 100.0):
    """Random frequency configurations for :func:`angle_bound_check`.

    Half of the samples put both inputs within O(1) of their cones
    (``tau_i ~ -sign_i |xi_i|``), the rest draw ``tau_i`` uniformly.
    """
    xi1 = _random_vectors(rng, samples, rmax)
    xi2 = _random_vectors(rng, samples, rmax)
    s1 = rng.choice([-1.0, 1.0], samples)
    s2 = rng.choice([-1.0, 1.0], samples)
    near = rng.random(samples) < 0.5
    n1 = np.hypot(xi1[:, 0], xi1[:, 1])
    n2 = np.hypot(xi2[:, 0], xi2[:, 1])
    tau1 = np.where(near, -s1 * n1 + rng.normal(0, 1, samples), rng.uniform(-2 * rmax, 2 * rmax, samples))
    tau2 = np.where(near, -s2 * n2 + rng.normal(0, 1, samples), rng.uniform(-2 * rmax, 2 * rmax, samples))
    return angle_bound_check(xi1, tau1, s1, xi2, tau2, s2, epsilon)
