"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line with the measured quantity; the lines are
repeated in the terminal summary (see ``conftest.py``).
"""
import math
from functools import lru_cache

import numpy as np

from cshsim.cli import main
from cshsim.diagnostics import compare_trajectories, energy_bound_check, gronwall_check, recorder
from cshsim.dynamics import SchemeConfig, Trajectory, evolve, rhs_acf_nullform, rhs_direct
from cshsim.estimates import (
    NormSpec,
    SpaceTimeSample,
    batch_ratios,
    sample_angle_bound,
    sample_null_symbol,
    xsb_norm,
)
from cshsim.gauge import apply_gauge, coulomb_chi
from cshsim.initial import random_state, unit_h1_state
from cshsim.io import read_snapshot, snapshot_bytes, write_snapshot
from cshsim.model import (
    Potential,
    adf_from_matter,
    constraint_residual,
    energy,
    half_wave_merge,
    half_wave_split,
    i_functional,
    make_compatible_data,
    matter_current,
)
from cshsim.spectral import TorusGrid, helmholtz_decompose

RESULTS: list[str] = []

QUARTIC = Potential((0.0, 1.0), 1.0)  # V(r) = r^2
HIGGS = Potential((-1.0, 1.0), 1.0)  # V(r) = r^2 - r >= -r
NODEALIAS = SchemeConfig(dt=1.0, t_end=0.0, dealias=False)


def report(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def sup_diff(a, b):
    return max(
        np.abs(a.phi - b.phi).max(),
        np.abs(a.phi_t - b.phi_t).max(),
        np.abs(a.gauge_field - b.gauge_field).max(),
    )


@lru_cache(maxsize=None)
def standard_run(formulation, potential):
    V = {"higgs": HIGGS, "quartic": QUARTIC}[potential]
    initial = unit_h1_state(TorusGrid(64), 1)
    cfg = SchemeConfig(1e-3, 1.0, formulation, record_every=50)
    return evolve(initial, cfg, V, recorder=recorder(V)), V


STANDARD = [("direct", "higgs"), ("reformulated", "higgs"), ("reformulated", "quartic")]


def test_1_formulation_equivalence():
    initial = random_state(TorusGrid(64), 11)
    cfg = dict(dt=1e-3, t_end=0.5, record_every=500)
    a = evolve(initial, SchemeConfig(formulation="direct", **cfg), QUARTIC).final
    b = evolve(initial, SchemeConfig(formulation="reformulated", **cfg), QUARTIC).final
    d = sup_diff(a, b)
    assert report(1, d <= 1e-6, f"direct vs reformulated sup difference {d:.2e} (<= 1e-6)")


def test_2_nullform_equivalence():
    worst = 0.0
    for seed in range(50):
        s = random_state(TorusGrid(32), seed)
        _, cf, _ = helmholtz_decompose(s.grid, rhs_direct(s, QUARTIC, NODEALIAS)[2])
        total = rhs_acf_nullform(s).total
        worst = max(worst, np.abs(total - cf).max() / np.abs(cf).max())
    assert report(2, worst <= 1e-10, f"null-form vs projected law, worst relative {worst:.2e} over 50 states (<= 1e-10)")


def test_3_energy_conservation():
    drifts = []
    for key in STANDARD:
        traj, _ = standard_run(*key)
        e = np.array([r.energy for r in traj.records])
        drifts.append(np.abs(e - e[0]).max() / abs(e[0]))
    worst = max(drifts)
    assert report(3, worst <= 1e-6, f"relative energy drift on [0,1] {worst:.2e} (<= 1e-6)")


def test_4_constraint_propagation():
    start = max(standard_run(*k)[0].records[0].constraint_l2 for k in STANDARD)
    peak = max(r.constraint_l2 for k in STANDARD for r in standard_run(*k)[0].records)
    ok = start <= 1e-12 and peak <= 1e-8
    assert report(4, ok, f"constraint residual initial {start:.2e} (<= 1e-12), max {peak:.2e} (<= 1e-8)")


def test_5_adf_time_derivative():
    g = TorusGrid(64)
    dt = 1e-3
    traj = evolve(unit_h1_state(g, 3), SchemeConfig(dt, 2 * dt, "reformulated"), HIGGS)
    before, mid, after = traj.states
    adf = [adf_from_matter(g, s.phi, s.phi_t, dealias=True) for s in (before, after)]
    numeric = (adf[1] - adf[0]) / (2 * dt)
    div_j = g.div(matter_current(g, mid.phi, mid.gauge_field))
    lap_div = g.ifft(g.fft(div_j) * -g.inv_ksq).real
    formula = np.stack([-2 * g.grad(lap_div)[1], 2 * g.grad(lap_div)[0]])
    rel = np.abs(numeric - formula).max() / np.abs(formula).max()
    assert report(5, rel <= 1e-4, f"centered difference of A^df vs current formula, relative {rel:.2e} (<= 1e-4)")


def test_6_gauge_covariance():
    g = TorusGrid(64)
    s = unit_h1_state(g, 5)
    chi = 0.5 * np.sin(g.x[0] + g.x[1])
    cfg = SchemeConfig(1e-3, 0.2, record_every=50)
    plain = evolve(s, cfg, HIGGS)
    gauged = evolve(apply_gauge(s, chi), cfg, HIGGS)
    moved = Trajectory()
    for x in plain.states:
        moved.append(apply_gauge(x, chi))
    flow = compare_trajectories(moved, gauged).sup
    inv = 0.0
    for x in plain.states:
        y = apply_gauge(x, chi)
        inv = max(
            inv,
            abs(energy(y, HIGGS) - energy(x, HIGGS)),
            abs(i_functional(y) - i_functional(x)),
            abs(constraint_residual(y)[1] - constraint_residual(x)[1]),
        )
    cf_left = 0.0
    rng = np.random.default_rng(6)
    for _ in range(10):
        a = rng.standard_normal((2, 64, 64))
        _, cf, _ = helmholtz_decompose(g, a + g.grad(coulomb_chi(g, a).chi))
        cf_left = max(cf_left, np.abs(cf).max())
    ok = flow <= 1e-8 and inv <= 1e-10 and cf_left <= 1e-12
    assert report(
        6, ok,
        f"evolve/gauge commutator {flow:.2e} (<= 1e-8), invariant change {inv:.2e} (<= 1e-10), "
        f"curl-free remainder {cf_left:.2e} (<= 1e-12)",
    )


def test_7_a_priori_bounds():
    slack = math.inf
    ok = True
    for key in STANDARD:
        traj, V = standard_run(*key)
        for check in (gronwall_check, energy_bound_check):
            out = check(traj.records, V.alpha)
            ok &= out.ok
            slack = min(slack, out.min_slack)
    assert report(7, ok, f"Gronwall and energy bounds hold at every record, min slack {slack:.3e}")


def _analytic_linear(n, T, beta=1.0, nref=256):
    # phi0 = f(x1) f(x2) e^{i x1}, f(x) = sinh b / (cosh b - cos x); phi1 = 0; V(r) = r
    def f(x):
        return math.sinh(beta) / (math.cosh(beta) - np.cos(x))

    ref = TorusGrid(nref)
    x1, x2 = ref.x
    phi0 = f(x1) * f(x2) * np.exp(1j * x1)
    omega = np.sqrt(ref.ksq + 1.0)
    exact = ref.ifft(ref.fft(phi0) * np.cos(omega * T))
    step = nref // n
    return phi0[::step, ::step], exact[::step, ::step]


def test_8_convergence_orders():
    slopes = []
    for formulation in ("direct", "reformulated"):
        s = random_state(TorusGrid(32), 3)
        finals = [evolve(s, SchemeConfig(dt, 0.4, formulation, record_every=10**6), QUARTIC).final for dt in (4e-3, 2e-3, 1e-3)]
        slopes.append(math.log2(sup_diff(finals[0], finals[1]) / sup_diff(finals[1], finals[2])))
    errors = []
    for n in (32, 64):
        g = TorusGrid(n)
        phi0, exact = _analytic_linear(n, 0.5)
        s = make_compatible_data(g, phi0, np.zeros_like(phi0), check_obstruction=False)
        cfg = SchemeConfig(1e-3, 0.5, gauge_coupling=False, record_every=10**6)
        errors.append(np.abs(evolve(s, cfg, Potential((1.0,))).final.phi - exact).max())
    gain = errors[0] / errors[1]
    ok = all(abs(p - 4.0) <= 0.3 for p in slopes) and gain >= 1e3
    assert report(
        8, ok,
        f"RK4 slopes {', '.join(f'{p:.3f}' for p in slopes)} (4.0 +- 0.3); "
        f"spatial error n=32 {errors[0]:.2e}, n=64 {errors[1]:.2e}, gain {gain:.2e} (>= 1e3)",
    )


def test_9_half_wave():
    g = TorusGrid(32)
    s = random_state(g, 3)
    pair = half_wave_split(g, s.phi, s.phi_t)
    phi, phi_t = half_wave_merge(g, pair)
    trip = max(np.abs(phi - s.phi).max(), np.abs(phi_t - s.phi_t).max())
    diffs = []
    for dt in (4e-3, 2e-3, 1e-3):
        runs = [evolve(s, SchemeConfig(dt, 0.4, f, record_every=10**6), QUARTIC).final for f in ("halfwave", "reformulated")]
        diffs.append(sup_diff(*runs))
    slopes = [math.log2(diffs[0] / diffs[1]), math.log2(diffs[1] / diffs[2])]
    ok = trip <= 1e-12 and min(slopes) >= 3.5
    assert report(9, ok, f"split/merge round trip {trip:.2e} (<= 1e-12); half-wave vs RK4 slopes "
                         f"{', '.join(f'{p:.2f}' for p in slopes)} (>= 3.5)")


def test_10_estimates_lab():
    rng = np.random.default_rng(10)
    lhs, rhs = sample_null_symbol(10**6, rng)
    violations = int(np.count_nonzero(lhs > rhs * (1 + 1e-12)))
    alhs, arhs = sample_angle_bound(10**6, rng)
    angle_sup = float(np.max(alhs / arhs))

    factors = {}
    for name in ("Str", "T"):
        maxima = [batch_ratios(TorusGrid(n), name, range(100), (1.0, 4.0)).max_ratio for n in (32, 64, 128)]
        factors[name] = (max(maxima) / min(maxima), maxima)

    ordering = True
    for seed in range(100):
        r = np.random.default_rng(1000 + seed)
        vals = r.standard_normal((16, 8, 8)) + 1j * r.standard_normal((16, 8, 8))
        u = SpaceTimeSample(TorusGrid(8), np.linspace(0, 1, 16), vals)
        s = r.uniform(-1, 1)
        for b in (-r.uniform(0, 1), r.uniform(0, 1)):
            wave = xsb_norm(u, NormSpec("X_wave", s, b))
            for fam in ("X_plus", "X_minus"):
                v = xsb_norm(u, NormSpec(fam, s, b))
                ordering &= v <= wave * (1 + 1e-12) if b <= 0 else v >= wave * (1 - 1e-12)

    ok = violations == 0 and math.isfinite(angle_sup) and all(f < 2 for f, _ in factors.values()) and ordering
    detail = "; ".join(
        f"{k} max ratio {', '.join(f'{m:.4f}' for m in ms)} (factor {f:.3f} < 2)" for k, (f, ms) in factors.items()
    )
    assert report(10, ok, f"null-symbol violations {violations}/1e6; angle ratio sup {angle_sup:.4f}; {detail}; "
                          f"X-norm ordering {'holds' if ordering else 'fails'} on 100 samples")


def test_11_io(tmp_path):
    s = random_state(TorusGrid(32), 2).replace(t=0.75)
    back = read_snapshot(write_snapshot(s, tmp_path / "s.bin"))
    exact = snapshot_bytes(back) == snapshot_bytes(s) and all(
        np.array_equal(getattr(back, k), getattr(s, k)) for k in ("phi", "phi_t", "a", "a_mean")
    ) and back.t == s.t
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "[grid]\nn = 32\n[scheme]\ndt = 0.01\nt_end = 0.2\nstride = 5\n"
        "[potential]\ncoefficients = -1.0, 1.0\n[initial]\nkind = random-band\nkmax = 2\nseed = 8\n"
    )
    codes = [main(["run", str(cfg), "--out", str(tmp_path / d), "--quiet"]) for d in ("a", "b")]
    same = (tmp_path / "a" / "diagnostics.csv").read_bytes() == (tmp_path / "b" / "diagnostics.csv").read_bytes()
    ok = exact and same and codes == [0, 0]
    assert report(11, ok, f"snapshot round trip {'bit-exact' if exact else 'differs'}; "
                          f"repeated run CSVs {'byte-identical' if same else 'differ'}")
