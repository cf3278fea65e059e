"""Elastic operator assembly, splitting, spectra and energies."""

import numpy as np
import pytest
from scipy.optimize import brentq

from memstrip.core import (
    DeviceParams,
    grid_for_size,
    integrate_nodal,
    is_even,
)
from memstrip.operators import (
    MU1,
    OperatorMatrix,
    SpectralReport,
    apply_quasilinear,
    assemble_frozen_operator,
    bending_remainder,
    mechanical_energy,
    small_deflection_operator,
    spectral_report,
    total_energy,
    write_spectral_report,
)


def random_admissible(rng, n, amp=0.8):
    """Smooth random profile with zero ends, min(u) > -amp."""
    g = grid_for_size(n)
    c = rng.uniform(-0.5, 0.5, 4)
    u = sum(c[k] * np.sin((k + 1) * np.pi * (g.x + 1.0) / 2.0) for k in range(4))
    u *= amp / max(1.0, np.max(np.abs(u)))
    u[0] = u[-1] = 0.0
    return u


class TestSplitting:
    def test_identity_on_random_profiles(self):
        # the factored apply shares its expression shapes with the direct
        # transcription, so the split reproduces K to the last bit
        rng = np.random.default_rng(42)
        p = DeviceParams(epsilon=0.5, beta=1.0, tau=1.0)
        worst = 0.0
        for _ in range(50):
            u = random_admissible(rng, 65)
            K = apply_quasilinear(u, p)
            split = assemble_frozen_operator(u, p).apply(u) + bending_remainder(u, p)
            worst = max(worst, float(np.max(np.abs(K - split))))
        assert worst < 1e-12

    def test_remainder_vanishes_without_bending(self):
        rng = np.random.default_rng(1)
        u = random_admissible(rng, 65)
        p = DeviceParams(
            epsilon=0.5, beta=0.0, tau=1.0, model="small_deformation"
        )
        assert np.all(bending_remainder(u, p) == 0.0)

    def test_remainder_is_cubic_at_small_amplitude(self):
        g = grid_for_size(65)
        u = 1e-3 * np.sin(np.pi * (g.x + 1.0)) * (1.0 - g.x**2)
        p = DeviceParams(epsilon=0.5)
        r1 = bending_remainder(u, p)
        r2 = bending_remainder(2.0 * u, p)
        i = int(np.argmax(np.abs(r1)))
        assert r2[i] / r1[i] == pytest.approx(8.0, rel=1e-2)

    def test_boundary_entries_are_zero(self):
        rng = np.random.default_rng(2)
        u = random_admissible(rng, 65)
        p = DeviceParams(epsilon=0.5)
        for arr in (apply_quasilinear(u, p), bending_remainder(u, p)):
            assert arr[0] == 0.0 and arr[-1] == 0.0


class TestAssembly:
    def test_frozen_at_zero_equals_constant_coefficient(self):
        p = DeviceParams(epsilon=0.5)
        g = grid_for_size(65)
        a = assemble_frozen_operator(np.zeros(65), p)
        b = small_deflection_operator(p, g)
        assert np.array_equal(a.matrix, b.matrix)

    def test_matrix_exactly_symmetric(self):
        rng = np.random.default_rng(5)
        u = random_admissible(rng, 65)
        M = assemble_frozen_operator(u, DeviceParams(epsilon=0.5)).matrix
        assert np.max(np.abs(M - M.T)) == 0.0

    def test_matrix_matches_factored_apply_at_roundoff(self):
        rng = np.random.default_rng(3)
        n = 65
        g = grid_for_size(n)
        p = DeviceParams(epsilon=0.5)
        op = assemble_frozen_operator(-0.4 * (1 - g.x**2) ** 2, p)
        v = rng.standard_normal(n)
        v[0] = v[-1] = 0.0
        diff = np.max(np.abs(op.matrix @ v[1:-1] - op.apply(v)[1:-1]))
        # partial products are O(h^-4) before cancelling; allow a few
        # hundred ulps at that magnitude
        scale = np.finfo(float).eps * (6.0 * p.beta / g.h**4 + 2.0 * p.tau / g.h**2)
        assert diff < 200.0 * scale * np.max(np.abs(v))

    def test_constant_coefficient_stencil_values(self):
        p = DeviceParams(epsilon=0.5, beta=1.0, tau=0.0)
        g = grid_for_size(65)
        d = small_deflection_operator(p, g).diagonals()
        h4 = g.h**4
        mid = 10
        assert d[0][mid] == pytest.approx(6.0 / h4)
        assert d[1][mid] == pytest.approx(-4.0 / h4)
        assert d[2][mid] == pytest.approx(1.0 / h4)
        # clamped ghost reflection adds one to the first diagonal entry
        assert d[0][0] == pytest.approx(7.0 / h4)

    def test_pinned_first_row(self):
        p = DeviceParams(
            epsilon=0.5, beta=1.0, tau=0.0, model="small_deformation", bc="pinned"
        )
        g = grid_for_size(65)
        d = small_deflection_operator(p, g).diagonals()
        assert d[0][0] == pytest.approx(5.0 / g.h**4)

    def test_solve_shifted_is_consistent_with_matrix(self):
        rng = np.random.default_rng(8)
        n = 65
        u = random_admissible(rng, n)
        op = assemble_frozen_operator(u, DeviceParams(epsilon=0.5))
        rhs = rng.standard_normal(n - 2)
        dt = 1e-3
        x = op.solve_shifted(dt, rhs)
        ref = np.linalg.solve(np.eye(n - 2) + dt * op.matrix, rhs)
        assert np.max(np.abs(x - ref)) < 1e-10 * np.max(np.abs(ref))

    def test_solve_even_data_stays_even(self):
        g = grid_for_size(65)
        u = -0.3 * (1.0 - g.x**2) ** 2
        op = assemble_frozen_operator(u, DeviceParams(epsilon=0.5))
        rhs = np.cos(np.pi * g.x[1:-1] / 2.0)
        rhs = 0.5 * (rhs + rhs[::-1])
        assert is_even(op.solve_shifted(1e-3, rhs))


class TestEigenvalueOracles:
    def test_clamped_beam_principal_eigenvalue(self):
        # beam equation u'''' = L u on a span of length 2 with clamped ends:
        # the frequency condition is cos(2k) cosh(2k) = 1
        k1 = brentq(lambda k: np.cos(2 * k) * np.cosh(2 * k) - 1.0, 1.5, 3.0)
        oracle = k1**4
        p = DeviceParams(epsilon=0.5, beta=1.0, tau=0.0)
        errs = []
        for n in (65, 129, 257):
            lam1 = np.min(
                np.linalg.eigvalsh(assemble_frozen_operator(np.zeros(n), p).matrix)
            )
            errs.append(abs(lam1 - oracle) / oracle)
        assert errs[2] < 2e-4
        order = np.log2(errs[0] / errs[1])
        assert 1.8 < order < 2.2

    def test_pinned_tension_principal_eigenvalue(self):
        p = DeviceParams(
            epsilon=0.5, beta=0.0, tau=1.0, model="small_deformation", bc="pinned"
        )
        op = small_deflection_operator(p, grid_for_size(257))
        lam1 = np.min(np.linalg.eigvalsh(op.matrix))
        assert lam1 == pytest.approx(MU1, rel=5e-5)


class TestSpectralReport:
    def test_bound_at_flat_state(self):
        p = DeviceParams(epsilon=0.5, beta=1.0, tau=1.0)
        rep = spectral_report(np.zeros(65), p)
        assert rep.bound == pytest.approx(MU1**2 + MU1, rel=1e-14)
        assert not rep.flagged
        assert rep.violation < 0.0

    def test_random_profiles_real_and_bounded(self):
        rng = np.random.default_rng(20)
        p = DeviceParams(epsilon=0.5)
        for _ in range(20):
            rep = spectral_report(random_admissible(rng, 65), p)
            re, im = rep.eigenvalues.real, rep.eigenvalues.imag
            assert np.max(np.abs(im)) <= 1e-8 * np.max(np.abs(re))
            assert np.max(re) <= -rep.bound + rep.tolerance
            assert not rep.flagged

    def test_margin_shrinks_second_order(self):
        # beta=0, tau=1, w=0: top eigenvalue of -A is -(4/h^2) sin^2(pi h/4),
        # so the bound violation is exactly the O(h^2) discretization gap
        p = DeviceParams(epsilon=0.5, beta=0.0, tau=1.0, model="small_deformation")
        viols = [spectral_report(np.zeros(n), p).violation for n in (33, 65, 129)]
        assert all(v > 0.0 for v in viols)
        for a, b in zip(viols, viols[1:]):
            assert np.log2(a / b) == pytest.approx(2.0, abs=0.1)

    def test_invalid_bound_rejected(self):
        with pytest.raises(ValueError):
            SpectralReport(
                eigenvalues=np.array([-1.0 + 0j]),
                bound=-1.0,
                tolerance=0.1,
                violation=0.0,
                flagged=False,
            )

    def test_report_file_format(self, tmp_path):
        p = DeviceParams(epsilon=0.5)
        rep = spectral_report(np.zeros(65), p)
        path = tmp_path / "spec.csv"
        write_spectral_report(path, rep)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# bound ")
        assert lines[1] == "re,im"
        re_col = [float(ln.split(",")[0]) for ln in lines[2:]]
        assert re_col == sorted(re_col)
        assert len(re_col) == 63


class TestLipschitzBehavior:
    def test_frozen_operator_is_stable_under_profile_perturbation(self):
        # ||A(w + s d) - A(w)|| ~ s: the ratio at two perturbation sizes
        # should agree to a few percent (empirical Lipschitz probe)
        rng = np.random.default_rng(17)
        n = 65
        w = random_admissible(rng, n, amp=0.5)
        d = random_admissible(rng, n, amp=0.5)
        p = DeviceParams(epsilon=0.5)
        base = assemble_frozen_operator(w, p).matrix
        norms = []
        for s in (1e-4, 5e-5):
            pert = assemble_frozen_operator(w + s * d, p).matrix
            norms.append(np.max(np.abs(pert - base)) / s)
        assert norms[0] == pytest.approx(norms[1], rel=5e-2)


class TestEnergies:
    def test_full_energy_gradient_matches_operator(self):
        # directional derivative of the mechanical energy along a compactly
        # supported perturbation equals <K(u), v> up to O(h^2) quadrature
        p = DeviceParams(epsilon=0.5)
        rels = []
        for n in (129, 257):
            g = grid_for_size(n)
            u = -0.3 * (1.0 - g.x**2) ** 2
            v = np.sin(np.pi * (g.x + 1.0)) ** 2 * (1.0 - g.x**2) ** 2
            s = 1e-6
            dE = (mechanical_energy(u + s * v, p) - mechanical_energy(u - s * v, p)) / (
                2.0 * s
            )
            Kv = integrate_nodal(apply_quasilinear(u, p) * v, g.h)
            rels.append(abs(dE - Kv) / abs(dE))
        assert rels[0] < 5e-4
        assert rels[1] < rels[0] / 3.0

    def test_quadratic_energy_for_reduced_models(self):
        g = grid_for_size(129)
        u = -0.2 * (1.0 - g.x**2) ** 2
        p = DeviceParams(epsilon=0.5, model="small_deformation", beta=2.0, tau=3.0)
        # (beta/2) int (u'')^2 + (tau/2) int (u')^2 against the closed forms
        # for the quartic bump: u'' = a(12x^2 - 4), u' = -4ax(1 - x^2)
        a = -0.2
        bend = 0.5 * 2.0 * a * a * (144.0 * 2.0 / 5.0 - 96.0 * 2.0 / 3.0 + 32.0)
        tens = 0.5 * 3.0 * 16.0 * a * a * (2.0 / 3.0 - 4.0 / 5.0 + 2.0 / 7.0)
        assert mechanical_energy(u, p) == pytest.approx(bend + tens, rel=1e-3)

    def test_small_strain_limit_of_full_energy(self):
        # the curvature-exact energy approaches the quadratic one as eps -> 0
        g = grid_for_size(129)
        u = -0.2 * (1.0 - g.x**2) ** 2
        quad = mechanical_energy(
            u, DeviceParams(epsilon=0.5, model="small_deformation")
        )
        gaps = []
        for eps in (0.2, 0.1, 0.05):
            full = mechanical_energy(u, DeviceParams(epsilon=eps))
            gaps.append(abs(full - quad))
        assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.3)
        assert gaps[1] / gaps[2] == pytest.approx(4.0, rel=0.3)

    def test_total_energy_flat_profile_small_gap(self):
        p = DeviceParams(epsilon=0.0, lam=1.0, model="small_gap")
        # flat membrane: mechanical part 0, electrostatic integral is 2
        val = total_energy(np.zeros(65), None, p)
        assert val == pytest.approx(-2.0, rel=1e-12)

    def test_total_energy_without_field_needs_zero_lambda(self):
        p = DeviceParams(epsilon=0.5, lam=0.1)
        with pytest.raises(ValueError):
            total_energy(np.zeros(65), None, p)
        p0 = DeviceParams(epsilon=0.5, lam=0.0)
        g = grid_for_size(65)
        u = -0.1 * (1.0 - g.x**2) ** 2
        assert total_energy(u, None, p0) > 0.0
