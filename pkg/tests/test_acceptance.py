"""End-to-end acceptance checks, one test per criterion.

Each test prints a single `ACCEPTANCE <name>: PASS/FAIL` line (visible with
`pytest -s` or in captured output) before asserting, so the suite doubles as
a checklist.  Tolerances are stated inline; randomized checks use fixed
seeds.
"""

import time

import numpy as np
import pytest
import sympy as sp
from scipy.interpolate import CubicSpline

from memstrip.cli import parse_config, sweep
from memstrip.core import (
    DeviceParams,
    MembraneState,
    SolverThresholds,
    build_grid2,
    grid_for_size,
    initial_profile,
    is_even,
)
from memstrip.elliptic import solve_potential, trace_forcing
from memstrip.evolution import decay_rate, run
from memstrip.operators import (
    apply_quasilinear,
    assemble_frozen_operator,
    bending_remainder,
    operator_parts,
    spectral_report,
)
from memstrip.steady import estimate_pull_in, linear_stability, newton_solve


def _report(name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {name}: {status} {detail}".rstrip())
    return ok


def random_admissible(rng, n, amp=0.8):
    g = grid_for_size(n)
    c = rng.uniform(-0.5, 0.5, 4)
    u = sum(c[k] * np.sin((k + 1) * np.pi * (g.x + 1.0) / 2.0) for k in range(4))
    u *= amp / max(1.0, np.max(np.abs(u)))
    u[0] = u[-1] = 0.0
    return u


def test_criterion_01_elliptic_correctness():
    """Manufactured-solution order >= 1.9; flat and eps=0 cases exact."""
    x, eta = sp.symbols("x eta")
    eps = sp.Rational(3, 10)
    u_sym = -sp.Rational(3, 10) * (1 - x**2) ** 2
    phi_sym = eta + eta * (1 - eta) * sp.sin(sp.pi * x)
    up, upp = sp.diff(u_sym, x), sp.diff(u_sym, x, 2)
    px, pe = sp.diff(phi_sym, x), sp.diff(phi_sym, eta)
    pxx, pee = sp.diff(phi_sym, x, 2), sp.diff(phi_sym, eta, 2)
    pxe = sp.diff(px, eta)
    lhs = (
        eps**2
        * (
            pxx
            - 2 * eta * up / (1 + u_sym) * pxe
            + (eta * up / (1 + u_sym)) ** 2 * pee
            + eta * (2 * up**2 / (1 + u_sym) ** 2 - upp / (1 + u_sym)) * pe
        )
        + pee / (1 + u_sym) ** 2
    )
    srcf = sp.lambdify((x, eta), -lhs, "numpy")
    phif = sp.lambdify((x, eta), phi_sym, "numpy")
    uf = sp.lambdify(x, u_sym, "numpy")

    p = DeviceParams(epsilon=0.3)
    errs = []
    for n in (33, 65, 129):
        g = grid_for_size(n)
        g2 = build_grid2(g, n)
        X, E = np.meshgrid(g.x, g2.eta, indexing="ij")
        fld = solve_potential(MembraneState(uf(g.x)), g2, p, source=srcf(X, E))
        errs.append(float(np.max(np.abs(fld.phi - phif(X, E)))))
    orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]

    g2 = build_grid2(grid_for_size(65), 33)
    flat = solve_potential(MembraneState(np.zeros(65)), g2, DeviceParams(epsilon=0.5))
    flat_err = float(np.max(np.abs(flat.phi - g2.eta[None, :])))

    gx = grid_for_size(65).x
    bowed = MembraneState(-0.3 * (1.0 - gx**2) ** 2)
    p0 = DeviceParams(epsilon=0.0, model="small_gap")
    lin = solve_potential(bowed, g2, p0)
    lin_err = float(np.max(np.abs(lin.phi - g2.eta[None, :])))

    ok = all(o >= 1.9 for o in orders) and flat_err < 1e-12 and lin_err < 1e-12
    assert _report(
        "01 elliptic correctness",
        ok,
        f"(orders {orders[0]:.2f}, {orders[1]:.2f}; flat {flat_err:.1e}; "
        f"eps=0 {lin_err:.1e})",
    )


def test_criterion_02_trace_dual_computation():
    """Trace formula vs physical-domain gradient oracle, 1e-3 relative."""
    n = 129
    g1 = grid_for_size(n)
    u = -0.3 * (1.0 - g1.x**2) ** 2
    st = MembraneState(u)
    g2 = build_grid2(g1, 129)
    p = DeviceParams(epsilon=0.3)
    fld = solve_potential(st, g2, p)
    gtr = trace_forcing(st, fld, p)

    cols = [g2.eta * (1.0 + ui) - 1.0 for ui in u]
    spl = [CubicSpline(cols[i], fld.phi[i]) for i in range(n)]
    dz = np.array([spl[i](u[i], 1) for i in range(n)])
    dx = np.zeros(n)
    for i in range(1, n - 1):
        w = list(range(max(0, i - 3), min(n, i + 4)))
        vals = np.array([spl[kk](u[i]) for kk in w])
        dx[i] = CubicSpline(g1.x[w], vals)(g1.x[i], 1)
    oracle = p.epsilon**2 * dx**2 + dz**2
    rel = float(
        np.max(np.abs(gtr[1:-1] - oracle[1:-1])) / np.max(np.abs(oracle[1:-1]))
    )
    assert _report("02 trace dual computation", rel < 1e-3, f"(rel {rel:.2e})")


def test_criterion_03_small_gap_limit():
    """max|g_eps - 1/(1+u)^2| decays at order 2 +- 0.3 in eps."""
    n = 129
    g1 = grid_for_size(n)
    st = MembraneState(-0.3 * (1.0 - g1.x**2) ** 2)
    g2 = build_grid2(g1, 129)
    glim = 1.0 / (1.0 + st.u) ** 2
    devs = []
    for eps in (0.4, 0.2, 0.1, 0.05):
        p = DeviceParams(epsilon=eps)
        gtr = trace_forcing(st, solve_potential(st, g2, p), p)
        devs.append(float(np.max(np.abs(gtr - glim))))
    orders = [np.log2(a / b) for a, b in zip(devs, devs[1:])]
    ok = all(abs(o - 2.0) <= 0.3 for o in orders)
    assert _report(
        "03 small-gap limit",
        ok,
        "(orders " + ", ".join(f"{o:.2f}" for o in orders) + ")",
    )


def test_criterion_04_splitting_identity():
    """||K(u) - (A(u)u + h(u))||_inf < 1e-12 on 50 random profiles."""
    rng = np.random.default_rng(42)
    p = DeviceParams(epsilon=0.5, beta=1.0, tau=1.0)
    worst = 0.0
    for _ in range(50):
        u = random_admissible(rng, 65)
        K = apply_quasilinear(u, p)
        split = assemble_frozen_operator(u, p).apply(u) + bending_remainder(u, p)
        worst = max(worst, float(np.max(np.abs(K - split))))
    assert _report("04 splitting identity", worst < 1e-12, f"(worst {worst:.2e})")


def test_criterion_05_spectral_bound():
    """Spectra of -A(w): real, below -2*sigma + slack; margin O(h^2)."""
    rng = np.random.default_rng(20)
    p = DeviceParams(epsilon=0.5)
    real_ok = bound_ok = True
    for _ in range(20):
        rep = spectral_report(random_admissible(rng, 65), p)
        re, im = rep.eigenvalues.real, rep.eigenvalues.imag
        real_ok &= bool(np.all(np.abs(im) <= 1e-8 * np.abs(re)))
        bound_ok &= bool(np.max(re) <= -rep.bound + rep.tolerance)

    # tension-only flat case: the violation is exactly the discretization
    # gap mu1 - (4/h^2) sin^2(pi h / 4), which shrinks at second order
    p2 = DeviceParams(epsilon=0.5, beta=0.0, tau=1.0, model="small_deformation")
    viols = [spectral_report(np.zeros(n), p2).violation for n in (33, 65, 129)]
    orders = [np.log2(a / b) for a, b in zip(viols, viols[1:])]
    margin_ok = all(abs(o - 2.0) < 0.1 for o in orders)

    ok = real_ok and bound_ok and margin_ok
    assert _report(
        "05 spectral bound",
        ok,
        f"(real {real_ok}, bound {bound_ok}, margin orders "
        + ", ".join(f"{o:.2f}" for o in orders)
        + ")",
    )


def test_criterion_06_energy_decay():
    """Per-step energy increase <= 1e-10 relative across the test matrix."""
    worst = 0.0
    for model in ("full", "small_deformation", "small_gap"):
        for lam in (0.0, 0.05, 0.2):
            eps = 0.0 if model == "small_gap" else 0.5
            p = DeviceParams(epsilon=eps, lam=lam, model=model)
            st = initial_profile("bump(-0.3)", grid_for_size(65))
            traj, out = run(st, p, t_end=20.0)
            e = traj.energy
            inc = float(np.max((e[1:] - e[:-1]) / (1.0 + np.abs(e[:-1]))))
            worst = max(worst, inc)
            worst = max(worst, out.diagnostics["energy_increase_max"])
    assert _report("06 energy decay", worst <= 1e-10, f"(worst step {worst:.2e})")


def test_criterion_07_symmetry_preservation():
    """Even initial data keeps iterates, forcing, steady states even."""
    ok = True
    for model in ("full", "small_deformation", "small_gap"):
        for lam in (0.0, 0.05, 0.2):
            eps = 0.0 if model == "small_gap" else 0.5
            p = DeviceParams(epsilon=eps, lam=lam, model=model)
            st = initial_profile("bump(-0.3)", grid_for_size(65))
            traj, _ = run(st, p, t_end=20.0)
            ok &= all(is_even(u) for u in traj.profiles)
            _, gfrc, _, _ = operator_parts(traj.final_state, p)
            ok &= is_even(gfrc)
            ss = newton_solve(traj.final_state, p)
            ok &= is_even(ss.u)
    assert _report("07 symmetry preservation", ok)


def test_criterion_08_small_lambda_stability():
    """full, eps=0.5, lam=0.05: converged, Newton-matched, stable."""
    p = DeviceParams(epsilon=0.5, lam=0.05)
    traj, out = run(MembraneState(np.zeros(65)), p)
    converged = out.kind == "converged"
    ss = newton_solve(traj.final_state, p)
    match = float(np.max(np.abs(ss.u - traj.profiles[-1])))
    inside = bool(-1.0 < np.min(ss.u) and np.max(ss.u) <= 0.0)
    rep = linear_stability(ss, p)
    stable = bool(rep.stable and np.min(rep.eigenvalues.real) > 0.0)
    ok = converged and match <= 1e-6 and inside and stable
    assert _report(
        "08 small-lambda stability",
        ok,
        f"(kind {out.kind}, |evo-newton| {match:.1e}, gap {rep.gap:.3f})",
    )


def test_criterion_09_decay_rate():
    """Fitted decay rate within 15% of the linearization gap."""
    th = SolverThresholds(dt_max=2e-3)
    rels = []
    for lam in (0.0, 0.05):
        p = DeviceParams(epsilon=0.5, lam=lam)
        st = initial_profile("bump(-0.05)", grid_for_size(65))
        traj, out = run(st, p, th)
        assert out.kind == "converged"
        ss = newton_solve(traj.final_state, p)
        rate = decay_rate(traj, ss)
        gap = linear_stability(ss, p).gap
        rels.append(abs(rate - gap) / gap)
    ok = all(r <= 0.15 for r in rels)
    assert _report(
        "09 decay rate",
        ok,
        "(rel err " + ", ".join(f"{r:.3f}" for r in rels) + ")",
    )


def test_criterion_10_pull_in_consistency():
    """Fold vs dynamic bisection brackets; bit-for-bit reproducibility."""
    t0 = time.time()
    p = DeviceParams(epsilon=0.0, model="small_gap", lam=0.0)
    g = grid_for_size(65)
    est1 = estimate_pull_in(p, g, t_end=500.0)
    est2 = estimate_pull_in(p, g, t_end=500.0)

    reproducible = (
        est1.lambda_star == est2.lambda_star
        and est1.dynamic_bracket == est2.dynamic_bracket
        and est1.fold_bracket == est2.fold_bracket
    )
    lo, hi = est1.dynamic_bracket
    flo, fhi = est1.fold_bracket
    overlap = flo <= hi and lo <= fhi
    consistent = overlap or est1.rel_gap < 0.02

    cfg = parse_config(
        "model = small_gap\nepsilon = 0\nnx = 65\nneta = 33\nt_end = 40\n"
        "output_dir = /tmp/acc_sweep_a\n"
    )
    import dataclasses

    lams = [0.5, 2.0, 4.0, 4.8, 5.0]
    a = sweep(cfg, lams, parallel=False)
    b = sweep(
        dataclasses.replace(cfg, output_dir="/tmp/acc_sweep_b"), lams, parallel=True
    )
    elapsed = time.time() - t0
    ok = reproducible and consistent and a == b and elapsed < 900.0
    assert _report(
        "10 pull-in consistency",
        ok,
        f"(star {est1.lambda_star:.5f}, rel_gap {est1.rel_gap:.2e}, "
        f"reruns {'identical' if reproducible else 'DIFFER'}, "
        f"sweep {'identical' if a == b else 'DIFFER'}, {elapsed:.0f}s)",
    )


def test_criterion_11_large_lambda_touchdown():
    """lam=100 touches down at both resolutions, times within 10%."""
    p = DeviceParams(epsilon=0.0, lam=100.0, model="small_gap")
    times = {}
    kinds = {}
    for n in (65, 129):
        traj, out = run(MembraneState(np.zeros(n)), p)
        times[n], kinds[n] = out.t_final, out.kind
    both_touchdown = kinds == {65: "touchdown", 129: "touchdown"}
    spread = abs(times[65] - times[129]) / times[129]
    ok = both_touchdown and spread <= 0.10
    assert _report(
        "11 large-lambda touchdown",
        ok,
        f"(t65 {times[65]:.5f}, t129 {times[129]:.5f}, spread {spread:.1%})",
    )
