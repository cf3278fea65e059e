"""Steady profiles, their stability, and the pull-in threshold.

A steady profile solves R(v) = A(v) v + h(v) + lam g(v) = 0 on the
interior nodes.  The solver is damped Newton with a dense forward-difference
Jacobian.  Because the elastic operator scales like 1/h^4, the residual of
an exact root still evaluates to O(eps_mach * |v| / h^4); the damped search
therefore accepts a point once the line search stalls with the residual at
that rounding floor, instead of mistaking the floor for stagnation.

The branch tracer runs natural continuation in lam with a secant predictor.
Pull-in (loss of the stable deflected state) shows up as a fold: Newton
keeps failing as lam approaches the fold no matter how small the increment,
while the stability gap of the last converged points collapses.  Both
effects together declare the fold; either alone is a solver failure.

estimate_pull_in brackets the same threshold dynamically: relaxation runs
from the flat state classify each lam as settling or touching down, a
doubling sweep finds a touchdown lam, and bisection tightens the bracket.
The fold location from continuation is attached as a cross check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    DomainError,
    MembraneState,
    SolverError,
    SolverThresholds,
    _float_repr,
    discrete_norm,
    is_even,
)
from .evolution import run
from .operators import operator_parts


def _state_array(state):
    return state.u if hasattr(state, "u") else np.asarray(state, dtype=float)


def steady_residual(state, params, grid2=None, kappa=1e-3):
    """Full nodal residual A(v)v + h(v) + lam g(v); zero at the ends."""
    v = _state_array(state)
    op, g, rem, _ = operator_parts(v, params, grid2, kappa)
    r = op.apply(v) + rem
    r[1:-1] += params.lam * g[1:-1]
    return r


def residual_jacobian(state, params, grid2=None, kappa=1e-3):
    """Forward-difference Jacobian of the interior residual.

    Column step sqrt(eps_mach) * (1 + max|v|) balances truncation against
    subtraction noise for a residual that is O(1/h^4) stiff.
    """
    v = _state_array(state).copy()
    r0 = steady_residual(v, params, grid2, kappa)[1:-1]
    delta = np.sqrt(np.finfo(float).eps) * (1.0 + np.max(np.abs(v)))
    nint = r0.shape[0]
    jac = np.empty((nint, nint))
    try:
        for j in range(nint):
            saved = v[1 + j]
            v[1 + j] = saved + delta
            jac[:, j] = (steady_residual(v, params, grid2, kappa)[1:-1] - r0) / delta
            v[1 + j] = saved
    except DomainError:
        raise SolverError("iterate touched down") from None
    return jac


def _residual_floor(v, params, h):
    eps_m = np.finfo(float).eps
    stiff = params.beta / h**4 + params.tau / h**2
    return 64.0 * eps_m * (1.0 + np.max(np.abs(v))) * stiff


def newton_solve(initial, params, thresholds=None, grid2=None):
    """Damped Newton iteration for a steady profile.

    Accepts an initial guess (state or nodal array) and returns the steady
    profile as a MembraneState.  At most 50 iterations with up to 20 step
    halvings each; a trial that enters the touchdown guard band is never
    evaluated.  Convergence: residual max-norm below newton_tol, or the
    line search stalls with the residual at its rounding floor.
    """
    th = thresholds if thresholds is not None else SolverThresholds()
    v = _state_array(initial).copy()
    v[0] = 0.0
    v[-1] = 0.0
    h = 2.0 / (v.shape[0] - 1)
    kappa = th.kappa_stop
    if float(np.min(v)) <= -1.0 + kappa:
        raise SolverError("iterate touched down")

    r = steady_residual(v, params, grid2, kappa)
    norm_r = float(np.max(np.abs(r)))
    for _ in range(50):
        if norm_r < th.newton_tol:
            return MembraneState(v)
        jac = residual_jacobian(v, params, grid2, kappa)
        try:
            d = np.linalg.solve(jac, -r[1:-1])
        except np.linalg.LinAlgError:
            raise SolverError("Newton stagnation") from None
        if is_even(v) and is_even(r):
            d = 0.5 * (d + d[::-1])

        scale = 1.0
        trial = None
        all_gap = True
        for _ in range(20):
            cand = v.copy()
            cand[1:-1] += scale * d
            if float(np.min(cand)) <= -1.0 + kappa:
                scale *= 0.5
                continue
            all_gap = False
            r_cand = steady_residual(cand, params, grid2, kappa)
            norm_cand = float(np.max(np.abs(r_cand)))
            if norm_cand < norm_r:
                trial = (cand, r_cand, norm_cand)
                break
            scale *= 0.5
        if trial is None:
            if all_gap:
                raise SolverError("iterate touched down")
            if norm_r <= _residual_floor(v, params, h):
                return MembraneState(v)
            raise SolverError("Newton stagnation")
        v, r, norm_r = trial

    if norm_r < th.newton_tol or norm_r <= _residual_floor(v, params, h):
        return MembraneState(v)
    raise SolverError("Newton stagnation")


def preconditioned_residual(state, params, grid2=None, kappa=1e-3):
    """Residual preconditioned by the frozen elastic solve: v + A(v)^{-1}(lam g + h).

    O(1)-scaled stand-in for the raw residual; immune to the 1/h^4 rounding
    floor, so it resolves steadiness far below what max|R| can certify.
    """
    v = _state_array(state)
    op, g, rem, _ = operator_parts(v, params, grid2, kappa)
    b = params.lam * g[1:-1] + rem[1:-1]
    out = np.zeros_like(v)
    out[1:-1] = v[1:-1] + op.solve(b)
    return out


# ---------------------------------------------------------------------------
# linear stability


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """Spectrum of the residual Jacobian at a steady profile.

    The evolution linearizes to d(du)/dt = -J du, so the profile is
    linearly stable when every eigenvalue of J has positive real part.
    gap is the smallest real part; positive gap = stable.
    """

    eigenvalues: np.ndarray
    gap: float
    stable: bool

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)


def linear_stability(state, params, grid2=None, kappa=1e-3):
    jac = residual_jacobian(state, params, grid2, kappa)
    eigs = np.linalg.eigvals(jac)
    gap = float(np.min(eigs.real))
    return StabilityReport(eigenvalues=eigs, gap=gap, stable=gap > 0.0)


# ---------------------------------------------------------------------------
# branch continuation


@dataclass(frozen=True, eq=False)
class BranchPoint:
    lam: float
    u: np.ndarray
    min_u: float
    l2_u: float
    h2d_u: float
    stable: bool
    gap: float

    def __post_init__(self):
        self.u.setflags(write=False)


@dataclass(frozen=True, eq=False)
class SteadyBranch:
    """Continuation record: points ordered by lam, plus the fold bracket.

    fold_bracket is None when the branch reached lambda_max without folding.
    """

    points: list
    fold_bracket: tuple | None

    @property
    def lambdas(self):
        return np.array([p.lam for p in self.points])

    def __len__(self):
        return len(self.points)


def _branch_point(lam, state, params, grid2, kappa):
    p = replace(params, lam=lam)
    rep = linear_stability(state, p, grid2, kappa)
    u = state.u
    return BranchPoint(
        lam=lam,
        u=u.copy(),
        min_u=float(np.min(u)),
        l2_u=discrete_norm(u, "L2"),
        h2d_u=discrete_norm(u, "H2d"),
        stable=rep.stable,
        gap=rep.gap,
    )


def continue_branch(params, dlambda0, lambda_max, grid, thresholds=None, grid2=None):
    """Trace the steady branch from lam = 0 toward lambda_max.

    Natural continuation with a secant predictor; the lam increment halves
    on Newton failure and regrows after success.  A fold is declared when
    the increment has collapsed below 1e-6 * dlambda0 while the stability
    gap of the trailing points has lost at least half its value; the
    returned bracket is (last lam, last lam + 2 * current increment).
    """
    if dlambda0 <= 0.0 or lambda_max <= 0.0:
        raise ValueError("continuation needs positive dlambda0 and lambda_max")
    th = thresholds if thresholds is not None else SolverThresholds()
    kappa = th.kappa_stop

    zero = np.zeros(grid.n)
    state = newton_solve(zero, replace(params, lam=0.0), th, grid2)
    points = [_branch_point(0.0, state, params, grid2, kappa)]

    lam = 0.0
    dlam = dlambda0
    prev_u = None
    prev_dlam = None
    fold_bracket = None

    while lam < lambda_max:
        dlam_try = min(dlam, lambda_max - lam)
        target = lam + dlam_try
        u_cur = points[-1].u
        if prev_u is None or prev_dlam is None:
            guess = u_cur
        else:
            guess = u_cur + (u_cur - prev_u) * (dlam_try / prev_dlam)
        try:
            state = newton_solve(guess, replace(params, lam=target), th, grid2)
        except SolverError:
            dlam *= 0.5
            if dlam < 1e-6 * dlambda0:
                gaps = [p.gap for p in points]
                if len(gaps) >= 5 and gaps[-1] <= 0.5 * gaps[-5]:
                    fold_bracket = (lam, lam + 2.0 * dlam)
                    break
                raise SolverError("Newton stagnation") from None
            continue
        prev_u = u_cur
        prev_dlam = dlam_try
        lam = target
        points.append(_branch_point(lam, state, params, grid2, kappa))
        dlam = min(1.5 * dlam, dlambda0)

    return SteadyBranch(points=points, fold_bracket=fold_bracket)


def write_branch(path, branch):
    """CSV lambda,min_u,l2_u,h2d_u,stable,gap; fold bracket as a trailer."""
    lines = ["lambda,min_u,l2_u,h2d_u,stable,gap"]
    for p in branch.points:
        cells = [
            _float_repr(p.lam),
            _float_repr(p.min_u),
            _float_repr(p.l2_u),
            _float_repr(p.h2d_u),
            str(int(p.stable)),
            _float_repr(p.gap),
        ]
        lines.append(",".join(cells))
    if branch.fold_bracket is not None:
        lo, hi = branch.fold_bracket
        lines.append(f"# fold_bracket {_float_repr(lo)} {_float_repr(hi)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# pull-in threshold


@dataclass(frozen=True, eq=False)
class PullInEstimate:
    """Bisected pull-in threshold with the fold location as a cross check.

    lambda_star is the midpoint of dynamic_bracket.  rel_gap compares the
    two bracket centers; it is nan when continuation found no fold.
    """

    lambda_star: float
    dynamic_bracket: tuple
    fold_bracket: tuple | None
    rel_gap: float


def _touches_down(lam, params, grid, th, grid2, t_end):
    p = replace(params, lam=lam)
    state = MembraneState(np.zeros(grid.n))
    _, outcome = run(state, p, th, t_end, grid2)
    if outcome.kind == "touchdown":
        return True
    if outcome.kind == "converged":
        return False
    raise SolverError(f"inconclusive at lambda = {lam:.6g}")


def estimate_pull_in(params, grid, thresholds=None, grid2=None, t_end=500.0, steps=12):
    """Bracket the pull-in threshold by relaxation runs plus bisection.

    Doubles lam from 1 until a run touches down, then bisects `steps`
    times between the largest settling lam and the smallest touching one.
    A run that hits t_end or the norm cap cannot be classified and aborts
    the search.  Continuation with increment lambda_hi/64 supplies the
    fold bracket for comparison.
    """
    th = thresholds if thresholds is not None else SolverThresholds()
    lam_lo = 0.0
    lam_hi = 1.0
    for _ in range(40):
        if _touches_down(lam_hi, params, grid, th, grid2, t_end):
            break
        lam_lo = lam_hi
        lam_hi *= 2.0
    else:
        raise SolverError(f"inconclusive at lambda = {lam_hi:.6g}")

    for _ in range(steps):
        mid = 0.5 * (lam_lo + lam_hi)
        if _touches_down(mid, params, grid, th, grid2, t_end):
            lam_hi = mid
        else:
            lam_lo = mid

    star = 0.5 * (lam_lo + lam_hi)
    try:
        branch = continue_branch(
            params, lam_hi / 64.0, 2.0 * lam_hi, grid, th, grid2
        )
        fold = branch.fold_bracket
    except SolverError:
        fold = None
    if fold is not None:
        rel_gap = abs(star - 0.5 * (fold[0] + fold[1])) / star
    else:
        rel_gap = float("nan")
    return PullInEstimate(
        lambda_star=star,
        dynamic_bracket=(lam_lo, lam_hi),
        fold_bracket=fold,
        rel_gap=rel_gap,
    )


__all__ = [
    "BranchPoint",
    "PullInEstimate",
    "StabilityReport",
    "SteadyBranch",
    "continue_branch",
    "estimate_pull_in",
    "linear_stability",
    "newton_solve",
    "preconditioned_residual",
    "residual_jacobian",
    "steady_residual",
    "write_branch",
]
