"""Per-snapshot observables, a priori bound checks and trajectory comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .model import CSHState, Potential, constraint_residual, covariant_energy, energy, i_functional
from .spectral import ScalarField, sobolev_norm, weighted_norm

CSV_COLUMNS = ("t", "energy", "constraint_l2", "I", "phi_l2", "phi_h1", "phit_l2", "acf_norm", "adf_norm")


@dataclass
class DiagnosticsRecord:
    t: float
    energy: float
    constraint_l2: float
    I: float
    phi_l2: float
    phi_h1: float
    phit_l2: float
    acf_norm: float
    adf_norm: float
    # sum_mu ||D_mu phi||^2; not part of the CSV contract
    covariant_sq: float = math.nan

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.row())


def record(state: CSHState, V: Potential, eps: float = 0.1, coupled: bool = True) -> DiagnosticsRecord:
    """All observables of one snapshot.

    ``acf_norm``/``adf_norm`` are ``|| |grad|^eps A ||_{H^1/2}`` of the
    Helmholtz parts, summed over components in quadrature.  With
    ``coupled=False`` the energy-type quantities use plain derivatives,
    matching a run whose matter equation ignores A.
    """
    grid = state.grid
    phi = ScalarField(grid, state.phi)
    _, res = constraint_residual(state)
    matter = state if coupled else state.replace(a=np.zeros_like(state.a), a_mean=np.zeros(2))
    return DiagnosticsRecord(
        t=float(state.t),
        energy=energy(matter, V),
        constraint_l2=res,
        I=i_functional(matter),
        phi_l2=grid.l2(state.phi),
        phi_h1=sobolev_norm(phi, 1.0),
        phit_l2=grid.l2(state.phi_t),
        acf_norm=weighted_norm(grid, state.a_cf, eps, 0.5),
        adf_norm=weighted_norm(grid, state.a_df, eps, 0.5),
        covariant_sq=covariant_energy(matter),
    )


def recorder(V: Potential, eps: float = 0.1, coupled: bool = True):
    """Callback for :func:`cshsim.dynamics.evolve`."""
    return lambda state: record(state, V, eps, coupled)


@dataclass
class BoundCheck:
    ok: bool
    min_slack: float
    worst_t: float

    def __bool__(self):
        return self.ok


def _check_alpha(alpha):
    if not alpha > 0:
        raise ValueError("alpha must be positive")


def gronwall_check(series, alpha: float, tol: float = 1e-12) -> BoundCheck:
    """``||phi(t)||^2 <= e^{2 alpha |t|} (||phi(0)||^2 + |t| |E(0)| / alpha)``.

    Times are measured from the first record; a violation beyond
    ``tol * max(1, rhs)`` fails the check.
    """
    _check_alpha(alpha)
    first = series[0]
    e0 = abs(first.energy)
    ok, worst, worst_t = True, math.inf, first.t
    for rec in series:
        dt = abs(rec.t - first.t)
        rhs = math.exp(2 * alpha * dt) * (first.phi_l2**2 + dt * e0 / alpha)
        slack = rhs - rec.phi_l2**2
        if slack < worst:
            worst, worst_t = slack, rec.t
        if slack < -tol * max(1.0, rhs):
            ok = False
    return BoundCheck(ok, worst, worst_t)


def energy_bound_check(series, alpha: float, tol: float = 1e-12) -> BoundCheck:
    """``sum_mu ||D_mu phi(t)||^2 <= |E(0)| + alpha^2 ||phi(t)||^2``."""
    _check_alpha(alpha)
    e0 = abs(series[0].energy)
    ok, worst, worst_t = True, math.inf, series[0].t
    for rec in series:
        if math.isnan(rec.covariant_sq):
            raise ValueError("records lack covariant_sq; build them with diagnostics.record")
        rhs = e0 + alpha**2 * rec.phi_l2**2
        slack = rhs - rec.covariant_sq
        if slack < worst:
            worst, worst_t = slack, rec.t
        if slack < -tol * max(1.0, rhs):
            ok = False
    return BoundCheck(ok, worst, worst_t)


@dataclass
class TrajectoryDiff:
    times: np.ndarray
    phi_sup: np.ndarray
    phi_l2: np.ndarray
    phit_sup: np.ndarray
    phit_l2: np.ndarray
    a_sup: np.ndarray
    a_l2: np.ndarray
    modulus_sup: np.ndarray

    @property
    def sup(self) -> float:
        """Largest sup-norm difference over all fields and times."""
        return float(max(self.phi_sup.max(), self.phit_sup.max(), self.a_sup.max()))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def compare_trajectories(a, b) -> TrajectoryDiff:
    """Per-time sup and L2 differences of phi, phi_t and the full gauge field."""
    if len(a.states) != len(b.states):
        raise ValueError("trajectories have different numbers of records")
    rows = []
    for sa, sb in zip(a.states, b.states):
        if sa.grid != sb.grid:
            raise ValueError("trajectories live on different grids")
        if not math.isclose(sa.t, sb.t, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"record times differ: {sa.t} vs {sb.t}")
        g = sa.grid
        dphi = sa.phi - sb.phi
        dphit = sa.phi_t - sb.phi_t
        da = sa.gauge_field - sb.gauge_field
        rows.append(
            (
                sa.t,
                np.abs(dphi).max(),
                g.l2(dphi),
                np.abs(dphit).max(),
                g.l2(dphit),
                np.abs(da).max(),
                math.sqrt(g.l2(da[0]) ** 2 + g.l2(da[1]) ** 2),
                np.abs(np.abs(sa.phi) - np.abs(sb.phi)).max(),
            )
        )
    cols = np.array(rows, dtype=float).T
    return TrajectoryDiff(*cols)
