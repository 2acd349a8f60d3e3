"""Command-line front end: ``run``, ``estimates``, ``gauge-demo`` and ``check``.

Exit codes: 0 success, 1 configuration or data error, 2 blow-up.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import estimates as est
from .config import ConfigError, RunConfig, parse_config, serialize_config
from .diagnostics import compare_trajectories, energy_bound_check, gronwall_check, record, recorder
from .dynamics import BlowUpError, SchemeConfig, Trajectory, evolve
from .gauge import GaugeFunction, apply_gauge
from .initial import build_initial
from .io import SnapshotFormatError, read_snapshot, write_diagnostics, write_snapshot
from .model import (
    CompatibilityError,
    CSHState,
    Potential,
    check_sign_condition,
    constraint_residual,
    energy,
    i_functional,
)
from .spectral import TorusGrid

EXIT_OK, EXIT_DATA, EXIT_BLOWUP = 0, 1, 2


class _Reporter:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, msg: str):
        if not self.quiet:
            print(msg)

    @staticmethod
    def error(msg: str):
        print(f"error: {msg}", file=sys.stderr)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def potential_of(cfg: RunConfig) -> Potential:
    """The potential used for evolution and energy; zero when switched off."""
    if not cfg.scheme.potential_on:
        return Potential((), cfg.potential.alpha)
    return Potential(cfg.potential.coefficients, cfg.potential.alpha)


def scheme_of(cfg: RunConfig) -> SchemeConfig:
    s = cfg.scheme
    return SchemeConfig(
        dt=s.dt,
        t_end=s.t_end,
        formulation=s.formulation,
        dealias=s.dealias,
        record_every=s.stride,
        gauge_coupling=s.gauge_coupling,
        potential_on=s.potential_on,
    )


def initial_state(cfg: RunConfig) -> CSHState:
    """Compatible initial data described by ``cfg.initial``."""
    ini = cfg.initial
    if ini.kind == "from-snapshot":
        state = read_snapshot(ini.path)
        if state.grid.n != cfg.grid.n or not math.isclose(state.grid.period, cfg.grid.L, rel_tol=1e-15):
            raise ConfigError(f"snapshot grid (n={state.grid.n}, L={state.grid.period}) differs from [grid]")
        return state
    grid = TorusGrid(cfg.grid.n, cfg.grid.L)
    return build_initial(grid, ini, potential_of(cfg), check_obstruction=cfg.scheme.gauge_coupling)


def linear_mode_error(cfg: RunConfig, initial: CSHState, final: CSHState) -> float | None:
    """Sup error against the exact plane wave when the run is linear.

    The run is linear when the gauge coupling is off, the initial datum is a
    plane wave and ``V'`` is constant.
    """
    V = potential_of(cfg)
    if cfg.scheme.gauge_coupling or cfg.initial.kind != "plane-wave" or len(V.coeffs) > 1:
        return None
    g = initial.grid
    mass_sq = V.coeffs[0] if V.coeffs else 0.0
    m = cfg.initial.mode
    k2 = (2 * math.pi / g.period) ** 2 * (m[0] ** 2 + m[1] ** 2)
    omega = math.sqrt(k2 + mass_sq)
    elapsed = final.t - initial.t
    exact = initial.phi * np.exp(-1j * cfg.initial.sign * omega * elapsed)
    return float(np.abs(final.phi - exact).max())


def _bound_summary(records, cfg: RunConfig, V: Potential) -> dict | None:
    alpha = cfg.potential.alpha
    if not records or not alpha > 0 or not cfg.scheme.gauge_coupling:
        return None
    r_max = max(4.0, 4.0 * max(1.0, max(r.phi_l2 for r in records)) ** 2)
    if not check_sign_condition(V, alpha, r_max):
        return {"applicable": False}
    g = gronwall_check(records, alpha)
    e = energy_bound_check(records, alpha)
    return {
        "applicable": True,
        "gronwall_ok": g.ok,
        "gronwall_min_slack": g.min_slack,
        "energy_ok": e.ok,
        "energy_min_slack": e.min_slack,
    }


def _json_safe(v):
    # non-finite floats are not valid JSON; report them as null
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _write_json(path: Path, data: dict):
    path.write_text(json.dumps(_json_safe(data), indent=2, sort_keys=True, allow_nan=False) + "\n")


def cmd_run(cfg: RunConfig, say: _Reporter) -> int:
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(serialize_config(cfg))
    V = potential_of(cfg)
    try:
        initial = initial_state(cfg)
        scheme = scheme_of(cfg)
    except (CompatibilityError, SnapshotFormatError, ConfigError, OSError, ValueError) as exc:
        say.error(str(exc))
        return EXIT_DATA
    coupled = cfg.scheme.gauge_coupling
    rec = recorder(V, cfg.diagnostics.epsilon, coupled) if cfg.diagnostics.record else None
    if cfg.diagnostics.snapshots:
        write_snapshot(initial, out / "initial.bin")

    status = "ok"
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            traj = evolve(initial, scheme, V, recorder=rec)
        for w in caught:
            say(f"warning: {w.message}")
    except BlowUpError as exc:
        traj = exc.trajectory or Trajectory(end_state=exc.last_state)
        status = "blow-up"
        say.error(str(exc))
    except ValueError as exc:
        say.error(str(exc))
        return EXIT_DATA

    with np.errstate(over="ignore", invalid="ignore"):
        return _finish_run(cfg, say, V, initial, traj, status)


def _finish_run(cfg, say, V, initial, traj, status) -> int:
    out = Path(cfg.output.dir)
    final = traj.final
    records = list(traj.records)
    if records:
        if cfg.diagnostics.record and (not traj.states or traj.states[-1].t != final.t):
            # close the series at the last finite state
            records.append(record(final, V, cfg.diagnostics.epsilon, cfg.scheme.gauge_coupling))
        write_diagnostics(records, out / "diagnostics.csv")
    if cfg.diagnostics.snapshots:
        write_snapshot(final, out / "final.bin")

    coupled = cfg.scheme.gauge_coupling
    eps = cfg.diagnostics.epsilon
    e0, e1 = record(initial, V, eps, coupled).energy, record(final, V, eps, coupled).energy
    summary = {
        "status": status,
        "t_start": initial.t,
        "t_final": final.t,
        "steps_recorded": len(traj),
        "energy_initial": e0,
        "energy_final": e1,
        "energy_drift": abs(e1 - e0) / max(abs(e0), 1e-300) if e0 != 0 else abs(e1),
        "constraint_initial": constraint_residual(initial)[1],
        "constraint_max": max((r.constraint_l2 for r in records), default=constraint_residual(final)[1]),
        "linear_mode_error": linear_mode_error(cfg, initial, final),
    }
    if cfg.diagnostics.bounds and status == "ok":
        summary["bounds"] = _bound_summary(records, cfg, V)
    _write_json(out / "summary.json", summary)
    say(f"{status}: t = {final.t:.6g}, energy drift {summary['energy_drift']:.3e}, "
        f"max constraint residual {summary['constraint_max']:.3e}")
    if summary["linear_mode_error"] is not None:
        say(f"linear-mode error vs closed form: {summary['linear_mode_error']:.3e}")
    return EXIT_BLOWUP if status == "blow-up" else EXIT_OK


def gauge_function(grid: TorusGrid, amplitude: float, mode) -> GaugeFunction:
    """``chi = amplitude * sin(k.x)`` for the integer mode ``mode``."""
    x1, x2 = grid.x
    s = 2 * math.pi / grid.period
    return GaugeFunction(amplitude * np.sin(s * (mode[0] * x1 + mode[1] * x2)))


def cmd_gauge_demo(cfg: RunConfig, say: _Reporter) -> int:
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    V = potential_of(cfg)
    try:
        initial = initial_state(cfg)
        scheme = scheme_of(cfg)
    except (CompatibilityError, SnapshotFormatError, ConfigError, OSError, ValueError) as exc:
        say.error(str(exc))
        return EXIT_DATA
    chi = gauge_function(initial.grid, cfg.gauge.chi_amplitude, cfg.gauge.chi_mode)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            plain = evolve(initial, scheme, V)
            gauged = evolve(apply_gauge(initial, chi), scheme, V)
    except BlowUpError as exc:
        say.error(str(exc))
        return EXIT_BLOWUP
    transformed = Trajectory()
    for s in plain.states:
        transformed.append(apply_gauge(s, chi))
    diff = compare_trajectories(transformed, gauged)
    g0 = apply_gauge(initial, chi)
    summary = {
        "max_difference": diff.sup,
        "energy_change": abs(energy(g0, V) - energy(initial, V)),
        "I_change": abs(i_functional(g0) - i_functional(initial)),
        "constraint_change": abs(constraint_residual(g0)[1] - constraint_residual(initial)[1]),
    }
    with (out / "gauge_demo.csv").open("w", newline="") as fh:
        fh.write("t,phi_sup,phit_sup,a_sup,modulus_sup\n")
        for row in zip(diff.times, diff.phi_sup, diff.phit_sup, diff.a_sup, diff.modulus_sup):
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    _write_json(out / "gauge_demo.json", summary)
    say(f"evolve/gauge commutator sup difference: {diff.sup:.3e}")
    return EXIT_OK


def cmd_estimates(cfg: RunConfig, say: _Reporter) -> int:
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    e = cfg.estimates
    seeds = range(cfg.initial.seed, cfg.initial.seed + e.seeds)
    rows = []
    for name in e.inequalities:
        for n in e.resolutions:
            grid = TorusGrid(n, cfg.grid.L)
            res = est.batch_ratios(grid, name, seeds, tuple(e.band), T=e.duration, epsilon=e.epsilon)
            r = np.array(res.ratios)
            rows.append((name, n, len(r), r.max(), r.min(), r.mean()))
            say(f"{name:>4s} n={n:<4d} max ratio {r.max():.6g}")
    with (out / "estimates.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("inequality", "n", "seeds", "max_ratio", "min_ratio", "mean_ratio"))
        for row in rows:
            w.writerow(row[:3] + tuple(format(float(v), ".17g") for v in row[3:]))

    rng = np.random.default_rng(cfg.initial.seed)
    lhs, rhs = est.sample_null_symbol(e.samples, rng)
    null_violations = int(np.count_nonzero(lhs > rhs * (1 + 1e-12)))
    alhs, arhs = est.sample_angle_bound(e.samples, rng, e.epsilon)
    angle_sup = float(np.max(alhs / arhs))
    summary = {
        "null_symbol_samples": e.samples,
        "null_symbol_violations": null_violations,
        "angle_samples": e.samples,
        "angle_ratio_sup": angle_sup,
    }
    _write_json(out / "estimates.json", summary)
    say(f"null symbol: {null_violations} violations in {e.samples} pairs; angle ratio sup {angle_sup:.6g}")
    return EXIT_OK


def cmd_check(path, potential: Potential, say: _Reporter) -> int:
    try:
        state = read_snapshot(path)
    except (SnapshotFormatError, OSError) as exc:
        say.error(str(exc))
        return EXIT_DATA
    _, res = constraint_residual(state)
    report = {
        "n": state.grid.n,
        "L": state.grid.period,
        "t": state.t,
        "energy": energy(state, potential),
        "constraint_l2": res,
        "I": i_functional(state),
    }
    say(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cshsim", description="Chern-Simons-Higgs pseudospectral simulator")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
    common.add_argument("--seed", type=int, metavar="N", help="random seed (overrides [initial] seed)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "evolve and write diagnostics"),
        ("estimates", "space-time estimate batch"),
        ("gauge-demo", "gauge covariance experiment"),
    ):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("config")
    sp = sub.add_parser("check", parents=[common], help="constraint and energy report for a snapshot")
    sp.add_argument("snapshot")
    sp.add_argument("--potential", type=float, nargs="*", default=(), metavar="C",
                    help="coefficients of V(r) = sum_k C_k r^k, k = 1, 2, ...")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    say = _Reporter(args.quiet)
    if args.command == "check":
        return cmd_check(args.snapshot, Potential(tuple(args.potential)), say)
    try:
        cfg = load_config(args.config).with_overrides(out=args.out, seed=args.seed)
    except ConfigError as exc:
        say.error(str(exc))
        return EXIT_DATA
    handler = {"run": cmd_run, "estimates": cmd_estimates, "gauge-demo": cmd_gauge_demo}[args.command]
    return handler(cfg, say)


if __name__ == "__main__":
    sys.exit(main())
