"""Discrete elastic operators for the strip.

The curvature-exact elastic restoring force splits into a part that is
linear in its second argument plus a cubic remainder:

    K(u) = beta (u''/W^{5/2})'' + (5/2) eps^2 beta (u' (u'')^2 / W^{7/2})'
           - tau (u'/W^{1/2})',                W = 1 + eps^2 (u')^2,
    K(u) = A(u) u + h(u),
    A(w) v = beta (v''/W^{5/2})'' - tau (v'/W^{1/2})'   (W built from w),
    h(v)   = (5/2) eps^2 beta (v' (v'')^2 / W^{7/2})'.

A(w) is discretized in nested divergence form: the bending block applies the
centered second difference, multiplies by the nodal coefficient W^{-5/2},
and applies the second difference again (ghost nodes close the boundary);
the tension block is the classic conservative form with midpoint-averaged
coefficients.  Freezing the coefficients at a state w makes A(w) a
pentadiagonal matrix on the interior nodes, which drives the linearly
implicit time stepper and all spectral diagnostics.

OperatorMatrix keeps both representations: the factored (nested-difference)
application, which is the discrete operator action and preserves the exact
splitting K(u) = A(u)u + h(u) at machine precision, and the materialized
banded/dense matrix used for linear solves and eigenvalue work.  A raw
matrix-vector product cannot reproduce the factored action to better than
ulp(||u||/h^4) because its partial products are O(h^-4) before cancelling,
so the two are reconciled by a dedicated roundoff-scaled test instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvals, solve_banded

from . import elliptic
from .core import (
    SolverError,
    _float_repr,
    build_grid2,
    first_derivative,
    grid_for_size,
    integrate_nodal,
    is_even,
    second_derivative,
)

#: principal Dirichlet eigenvalue of -d^2/dx^2 on (-1, 1)
MU1 = np.pi**2 / 4.0


def _state_array(state):
    return state.u if hasattr(state, "u") else np.asarray(state, dtype=float)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Frozen-coefficient elastic operator on the interior nodes.

    c2 holds the nodal bending coefficient W^{-5/2} (all nodes), c1m the
    midpoint-averaged tension coefficient W^{-1/2}.  `apply` evaluates the
    factored nested-difference form on a full nodal vector; `matrix`
    materializes the dense interior matrix; `solve_shifted` solves
    (I + dt A) on the interior using a banded factorization.
    """

    c2: np.ndarray
    c1m: np.ndarray
    w: np.ndarray
    h: float
    beta: float
    tau: float
    bc: str

    def __post_init__(self):
        for a in (self.c2, self.c1m, self.w):
            a.setflags(write=False)

    @property
    def n(self):
        return self.c2.shape[0]

    def apply(self, v):
        """Factored operator action on a full nodal vector (ends = 0)."""
        h2 = self.h * self.h
        d2v = second_derivative(v, self.h, self.bc)
        flux = self.c2 * d2v
        bend = ((flux[:-2] + flux[2:]) - 2.0 * flux[1:-1]) / h2
        tens = (
            self.c1m[1:] * (v[2:] - v[1:-1]) - self.c1m[:-1] * (v[1:-1] - v[:-2])
        ) / h2
        out = np.zeros_like(v)
        out[1:-1] = self.beta * bend - self.tau * tens
        return out

    def diagonals(self):
        """Pentadiagonal entries as a dict {offset: values}."""
        n, h = self.n, self.h
        h2, h4 = h * h, h**4
        c2, c1m = self.c2, self.c1m
        gbc = 2.0 if self.bc == "clamped" else 0.0
        i = np.arange(1, n - 1)
        cm, cc, cp = c2[i - 1], c2[i], c2[i + 1]

        d0 = cm + 4.0 * cc + cp
        d0[0] = gbc * c2[0] + 4.0 * c2[1] + c2[2]
        d0[-1] = c2[n - 3] + 4.0 * c2[n - 2] + gbc * c2[n - 1]
        d0 = self.beta * d0 / h4 + self.tau * (c1m[i] + c1m[i - 1]) / h2

        dm1 = self.beta * (-2.0 * (cm + cc))[1:] / h4 - self.tau * c1m[i - 1][1:] / h2
        dp1 = self.beta * (-2.0 * (cc + cp))[:-1] / h4 - self.tau * c1m[i][:-1] / h2
        dm2 = self.beta * cm[2:] / h4
        dp2 = self.beta * cp[:-2] / h4
        return {-2: dm2, -1: dm1, 0: d0, 1: dp1, 2: dp2}

    @property
    def matrix(self):
        """Dense interior matrix (size n-2 by n-2)."""
        d = self.diagonals()
        return (
            np.diag(d[0])
            + np.diag(d[1], 1)
            + np.diag(d[-1], -1)
            + np.diag(d[2], 2)
            + np.diag(d[-2], -2)
        )

    def _band(self, ident, dt):
        """LAPACK band storage of (ident*I + dt A) on the interior."""
        d = self.diagonals()
        nint = d[0].shape[0]
        ab = np.zeros((5, nint))
        ab[0, 2:] = dt * d[2]
        ab[1, 1:] = dt * d[1]
        ab[2, :] = ident + dt * d[0]
        ab[3, :-1] = dt * d[-1]
        ab[4, :-2] = dt * d[-2]
        return ab

    def _banded_solve(self, ident, dt, rhs):
        try:
            x = solve_banded((2, 2), self._band(ident, dt), rhs)
        except np.linalg.LinAlgError:
            raise SolverError("implicit step singular") from None
        if not np.all(np.isfinite(x)):
            raise SolverError("implicit step singular")
        if is_even(self.w) and is_even(rhs):
            x = 0.5 * (x + x[::-1])
        return x

    def solve_shifted(self, dt, rhs):
        """Solve (I + dt A) x = rhs on the interior nodes.

        For bitwise-even inputs the exact solution is even, so the
        elimination roundoff is projected out to keep mirror symmetry exact.
        """
        return self._banded_solve(1.0, dt, rhs)

    def solve(self, rhs):
        """Solve A x = rhs on the interior nodes (same banded path)."""
        return self._banded_solve(0.0, 1.0, rhs)


def _coefficients(w, params, bc):
    h = 2.0 / (w.shape[0] - 1)
    eps2 = params.epsilon**2
    dw = first_derivative(w, h, bc)
    wfac = 1.0 + eps2 * dw * dw
    c2 = wfac**-2.5
    c1 = wfac**-0.5
    c1m = 0.5 * (c1[:-1] + c1[1:])
    return h, c2, c1m


def assemble_frozen_operator(w, params):
    """Elastic operator with coefficients frozen at the profile w."""
    w = _state_array(w)
    h, c2, c1m = _coefficients(w, params, params.bc)
    return OperatorMatrix(
        c2=c2,
        c1m=c1m,
        w=w.copy(),
        h=h,
        beta=params.beta,
        tau=params.tau,
        bc=params.bc,
    )


def small_deflection_operator(params, grid):
    """Constant-coefficient operator beta D4 - tau D2 under the active BC.

    Unit coefficients collapse the pentadiagonal assembly to the classic
    [1,-4,6,-4,1]/h^4 and [-1,2,-1]/h^2 stencils; coincides bitwise with
    the frozen operator at w = 0.
    """
    n = grid.n
    return OperatorMatrix(
        c2=np.ones(n),
        c1m=np.ones(n - 1),
        w=np.zeros(n),
        h=grid.h,
        beta=params.beta,
        tau=params.tau,
        bc=params.bc,
    )


def apply_quasilinear(state, params):
    """Nodal values of the curvature-exact elastic operator K(u).

    Direct transcription: nested divergence form for the bending term,
    conservative midpoint form for the tension term, centered derivative of
    the nodal cubic flux for the remainder.  Returns a full nodal array with
    zero entries at the boundary nodes.
    """
    u = _state_array(state)
    h = 2.0 / (u.shape[0] - 1)
    h2 = h * h
    eps2 = params.epsilon**2
    du = first_derivative(u, h, params.bc)
    d2u = second_derivative(u, h, params.bc)
    wfac = 1.0 + eps2 * du * du

    flux = wfac**-2.5 * d2u
    bend = ((flux[:-2] + flux[2:]) - 2.0 * flux[1:-1]) / h2

    c1 = wfac**-0.5
    c1m = 0.5 * (c1[:-1] + c1[1:])
    tens = (c1m[1:] * (u[2:] - u[1:-1]) - c1m[:-1] * (u[1:-1] - u[:-2])) / h2

    q = du * d2u * d2u * wfac**-3.5
    rem = 2.5 * eps2 * params.beta * (q[2:] - q[:-2]) / (2.0 * h)

    out = np.zeros_like(u)
    out[1:-1] = params.beta * bend - params.tau * tens + rem
    return out


def bending_remainder(state, params):
    """Cubic remainder h(v) = (5/2) eps^2 beta (v' (v'')^2 / W^{7/2})'."""
    v = _state_array(state)
    h = 2.0 / (v.shape[0] - 1)
    eps2 = params.epsilon**2
    dv = first_derivative(v, h, params.bc)
    d2v = second_derivative(v, h, params.bc)
    wfac = 1.0 + eps2 * dv * dv
    q = dv * d2v * d2v * wfac**-3.5
    out = np.zeros_like(v)
    out[1:-1] = 2.5 * eps2 * params.beta * (q[2:] - q[:-2]) / (2.0 * h)
    return out


# ---------------------------------------------------------------------------
# spectral diagnostics


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Spectrum of -A(w) against the analytic decay bound.

    bound is 2*sigma(w) = beta mu1^2 ||W||_inf^{-5/2} + tau mu1 ||W||_inf^{-1/2}
    with mu1 = pi^2/4; every eigenvalue of -A(w) should satisfy
    Re(eig) <= -bound up to the O(h^2) discretization slack carried in
    `tolerance`.  `violation` is max Re(eig) + bound (negative when the
    bound holds strictly).
    """

    eigenvalues: np.ndarray
    bound: float
    tolerance: float
    violation: float
    flagged: bool

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        if self.bound <= 0.0:
            raise ValueError("decay bound must be positive")


def spectral_report(w, params):
    """Eigenvalues of the discretized -A(w) plus the analytic bound."""
    w = _state_array(w)
    op = assemble_frozen_operator(w, params)
    h = op.h
    dw = first_derivative(w, h, params.bc)
    w_inf = float(np.max(1.0 + params.epsilon**2 * dw * dw))
    bound = params.beta * MU1**2 * w_inf**-2.5 + params.tau * MU1 * w_inf**-0.5
    eigs = -eigvals(op.matrix)
    norm_a = float(np.max(np.abs(eigs)))
    tolerance = 10.0 * h * h * norm_a
    violation = float(np.max(eigs.real) + bound)
    return SpectralReport(
        eigenvalues=eigs,
        bound=bound,
        tolerance=tolerance,
        violation=violation,
        flagged=violation > tolerance,
    )


def write_spectral_report(path, report):
    """CSV re,im rows with a one-line metadata header carrying the bound."""
    lines = [f"# bound {_float_repr(report.bound)}", "re,im"]
    order = np.argsort(report.eigenvalues.real)
    for ev in report.eigenvalues[order]:
        lines.append(f"{_float_repr(ev.real)},{_float_repr(ev.imag)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# energies


def _mechanical_parts(u, params):
    h = 2.0 / (u.shape[0] - 1)
    du = first_derivative(u, h, params.bc)
    d2u = second_derivative(u, h, params.bc)
    if params.model == "full":
        eps2 = params.epsilon**2
        wfac = 1.0 + eps2 * du * du
        bend = 0.5 * params.beta * integrate_nodal(d2u * d2u * wfac**-2.5, h)
        stretch = (params.tau / eps2) * integrate_nodal(np.sqrt(wfac) - 1.0, h)
    else:
        # reduced models are gradient flows of the quadratic elastic energy;
        # this is also the eps -> 0 limit of the curvature-exact form
        bend = 0.5 * params.beta * integrate_nodal(d2u * d2u, h)
        stretch = 0.5 * params.tau * integrate_nodal(du * du, h)
    return bend, stretch


def mechanical_energy(state, params):
    """Bending plus stretching energy of the profile under the active model."""
    u = _state_array(state)
    bend, stretch = _mechanical_parts(u, params)
    return bend + stretch


def total_energy(state, field, params):
    """Lyapunov functional of the evolution: mechanical minus electrostatic.

    For the small-gap model the electrostatic term is the closed form
    lambda * integral dx/(1+u); the other models integrate the potential
    gradient over the gap, so a PotentialField solved at this state is
    required.
    """
    u = _state_array(state)
    mech = mechanical_energy(u, params)
    if params.model == "small_gap":
        h = 2.0 / (u.shape[0] - 1)
        electro = params.lam * integrate_nodal(1.0 / (1.0 + u), h)
    elif field is None:
        if params.lam != 0.0:
            raise ValueError("total_energy needs the potential field here")
        electro = 0.0
    else:
        electro = elliptic.electrostatic_energy(u, field, params)
    return mech - electro


# ---------------------------------------------------------------------------
# model dispatch shared by the stepper and the steady-state residual


def operator_parts(state, params, grid2=None, kappa=1e-3):
    """Assemble (A, g, h, phi) for the active model at the given state.

    Returns the frozen elastic operator, the nodal electrostatic forcing g,
    the nodal cubic remainder, and the potential field (None when the model
    does not solve for it).
    """
    u = _state_array(state)
    n = u.shape[0]
    if params.model == "small_gap":
        g = 1.0 / (1.0 + u) ** 2
        field = None
    else:
        if grid2 is None:
            grid2 = default_gap_grid(n)
        field = elliptic.solve_potential(u, grid2, params, kappa=kappa)
        g = elliptic.trace_forcing(u, field, params)
    if params.model == "full":
        op = assemble_frozen_operator(u, params)
        rem = bending_remainder(u, params)
    else:
        op = small_deflection_operator(params, grid_for_size(n))
        rem = np.zeros(n)
    return op, g, rem, field


def default_gap_grid(n):
    """Default transformed-rectangle grid: (n+1)/2 vertical nodes."""
    return build_grid2(grid_for_size(n), (n + 1) // 2)


__all__ = [
    "MU1",
    "OperatorMatrix",
    "SpectralReport",
    "apply_quasilinear",
    "assemble_frozen_operator",
    "bending_remainder",
    "default_gap_grid",
    "mechanical_energy",
    "operator_parts",
    "small_deflection_operator",
    "spectral_report",
    "total_energy",
    "write_spectral_report",
]
