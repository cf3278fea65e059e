"""Time integration of the damped membrane evolution.

The dynamics is the damping-dominated gradient flow

    du/dt = -( A(u) u + h(u) + lam g(u) ),

advanced with a linearly implicit Euler step: elastic coefficients, the
cubic remainder, and the electrostatic forcing are frozen at the current
state and only the linear elastic part is treated implicitly,

    (I + dt A(u_n)) u_{n+1} = u_n - dt ( lam g(u_n) + h(u_n) ).

Each step is one pentadiagonal solve (plus one potential solve per state
for the models that carry the gap field).  The step size adapts: a
candidate that dips into the touchdown guard band min(u) <= -1 +
kappa_stop is rejected and dt halves, but only while dt > dt_min; at the
dt_min floor the violating step is taken and the run ends in touchdown.
A candidate that would raise the total energy by more than the monitor
budget is likewise rejected; the budget per step is 5e-11 * (1 + |E|),
halving dt shrinks the true increase quadratically, and once dt reaches
2*dt_min the remaining increase is rounding-level and the step is taken,
so the loop always terminates.  Accepted steps grow dt by 1.2 up to
dt_max.

Termination outcomes: "converged" (relative update rate below steady_tol),
"touchdown", "blowup_norm" (H2 seminorm above norm_cap) and "time_limit".
If a second trigger condition holds within two steps of the one that
fired, the outcome is flagged ambiguous in the diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DomainError,
    MembraneState,
    SolverError,
    SolverThresholds,
    _float_repr,
    discrete_norm,
    outcome_record,
)
from .operators import operator_parts, total_energy

#: rejection threshold: half the 1e-10 normalized per-step energy budget
ENERGY_BUDGET = 5e-11

#: trajectory sample cap; the stored stride doubles when it is hit
SAMPLE_CAP = 1200


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Decimated history of one run; all arrays share the leading length."""

    times: np.ndarray
    profiles: np.ndarray
    energy: np.ndarray
    min_u: np.ndarray
    dt: np.ndarray

    def __post_init__(self):
        for a in (self.times, self.profiles, self.energy, self.min_u, self.dt):
            a.setflags(write=False)

    def __len__(self):
        return self.times.shape[0]

    @property
    def final_state(self):
        return MembraneState(self.profiles[-1], t=float(self.times[-1]))


@dataclass(frozen=True, eq=False)
class SimOutcome:
    kind: str
    t_final: float
    min_u: float
    reason: str
    diagnostics: dict = field(default_factory=dict)

    def record(self):
        """Single-line JSON form of the outcome."""
        return outcome_record(self.kind, self.t_final, self.min_u, self.reason)


class _Store:
    """Stride-doubling sample buffer capped at SAMPLE_CAP entries."""

    def __init__(self):
        self.rows = []
        self.stride = 1
        self._since = 0

    def push(self, t, u, energy, dt, force=False):
        self._since += 1
        if not force and self._since < self.stride:
            return
        self._since = 0
        if force and self.rows and self.rows[-1][0] == t:
            return
        self.rows.append((t, u.copy(), energy, float(np.min(u)), dt))
        if len(self.rows) >= SAMPLE_CAP:
            self.rows = self.rows[::2]
            self.stride *= 2

    def trajectory(self):
        t, u, e, m, d = zip(*self.rows)
        return Trajectory(
            times=np.array(t),
            profiles=np.array(u),
            energy=np.array(e),
            min_u=np.array(m),
            dt=np.array(d),
        )


def _advance(u, op, g, rem, dt, params):
    """Solve the implicit step from u with frozen parts; full nodal result."""
    rhs = u[1:-1] - dt * (params.lam * g[1:-1] + rem[1:-1])
    unew = np.zeros_like(u)
    unew[1:-1] = op.solve_shifted(dt, rhs)
    return unew


def step(state, dt, params, thresholds=None, grid2=None):
    """One implicit Euler step of size dt; None when the step is rejected.

    Rejection happens only for dt > dt_min when the candidate enters the
    touchdown guard band; at the dt_min floor the violating candidate is
    accepted, which is how a run terminates in touchdown.
    """
    th = thresholds if thresholds is not None else SolverThresholds()
    op, g, rem, _ = operator_parts(state, params, grid2, th.kappa_stop)
    u = state.u
    unew = _advance(u, op, g, rem, dt, params)
    if float(np.min(unew)) <= -1.0 + th.kappa_stop and dt > th.dt_min:
        return None
    if float(np.min(unew)) <= -1.0:
        # taken at the floor but crossed the plate: shorten the step so the
        # state lands inside the admissible band
        unew, dt = _touchdown_state(u, op, g, rem, dt, params, th.kappa_stop)
    return MembraneState(unew, t=state.t + dt)


def _touchdown_state(u, op, g, rem, dt_hi, params, kappa):
    """Resolve the final partial step so the state lands inside the band.

    The candidate at dt_hi crossed min(u) <= -1, which no state may hold;
    the candidate min is continuous in dt, so bisection on dt finds a step
    landing in (-1, -1 + kappa].
    """
    lo, hi = 0.0, dt_hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        cand = _advance(u, op, g, rem, mid, params)
        m = float(np.min(cand))
        if m <= -1.0:
            hi = mid
        elif m > -1.0 + kappa:
            lo = mid
        else:
            return cand, mid
    cand = _advance(u, op, g, rem, lo, params)
    return cand, lo


def run(state, params, thresholds=None, t_end=50.0, grid2=None):
    """Integrate from `state` until one of the stop conditions fires.

    Returns (Trajectory, SimOutcome).  Diagnostics on the outcome carry the
    accepted step count, the rejection count, and energy_increase_max: the
    largest accepted per-step energy increase normalized by 1 + |E|.
    """
    th = thresholds if thresholds is not None else SolverThresholds()
    kappa = th.kappa_stop
    u = state.u
    t = float(state.t)

    op, g, rem, fld = operator_parts(u, params, grid2, kappa)
    energy = total_energy(u, fld, params)

    store = _Store()
    store.push(t, u, energy, th.dt0, force=True)

    dt = th.dt0
    steps = 0
    rejections = 0
    inc_max = 0.0
    last_rel = np.inf
    last_dt = dt
    kind = reason = None

    while True:
        if t >= t_end:
            kind, reason = "time_limit", "reached t_end"
            break

        clamped = t_end - t <= dt
        dt_eff = t_end - t if clamped else dt

        cause = None
        parts_new = None
        e_new = np.nan
        inc = 0.0
        try:
            unew = _advance(u, op, g, rem, dt_eff, params)
        except SolverError:
            cause = "solver"
            unew = None
        if cause is None:
            if float(np.min(unew)) <= -1.0 + kappa:
                cause = "gap"
            else:
                parts_new = operator_parts(unew, params, grid2, kappa)
                e_new = total_energy(unew, parts_new[3], params)
                inc = (e_new - energy) / (1.0 + abs(energy))
                if inc > ENERGY_BUDGET and dt_eff > 2.0 * th.dt_min:
                    cause = "energy"

        if cause == "gap" and dt_eff <= th.dt_min:
            # step floor reached: the violating step is taken and ends the run
            steps += 1
            if float(np.min(unew)) <= -1.0:
                unew, dt_eff = _touchdown_state(u, op, g, rem, dt_eff, params, kappa)
            last_dt = dt_eff
            last_rel = discrete_norm(unew - u, "L2") / dt_eff if dt_eff > 0 else np.inf
            u = unew
            t = t + dt_eff
            try:
                parts_td = operator_parts(u, params, grid2, kappa=0.0)
                energy = total_energy(u, parts_td[3], params)
            except (DomainError, SolverError):
                energy = np.nan
            store.push(t, u, energy, dt_eff, force=True)
            kind = "touchdown"
            reason = "minimum gap reached the stopping threshold"
            break

        if cause is not None:
            rejections += 1
            if cause == "solver" and dt_eff <= th.dt_min:
                raise SolverError("implicit step singular")
            dt = max(0.5 * dt_eff, th.dt_min)
            continue

        # accepted
        steps += 1
        last_dt = dt_eff
        last_rel = discrete_norm(unew - u, "L2") / dt_eff
        if inc > inc_max:
            inc_max = inc
        u, energy = unew, e_new
        op, g, rem, fld = parts_new
        t = t_end if clamped else t + dt_eff
        store.push(t, u, energy, dt_eff)

        if discrete_norm(u, "H2d") > th.norm_cap:
            kind, reason = "blowup_norm", "H2 seminorm exceeded norm_cap"
            break
        if last_rel < th.steady_tol:
            kind = "converged"
            reason = "relative update rate fell below steady_tol"
            break
        if t >= t_end:
            kind, reason = "time_limit", "reached t_end"
            break
        dt = min(1.2 * dt, th.dt_max)

    store.push(t, u, energy, last_dt, force=True)
    flags = {
        "converged": last_rel < th.steady_tol,
        "touchdown": float(np.min(u)) <= -1.0 + kappa,
        "blowup_norm": discrete_norm(u, "H2d") > th.norm_cap,
        "time_limit": t_end - t < 2.0 * last_dt,
    }
    flags[kind] = True
    outcome = SimOutcome(
        kind=kind,
        t_final=t,
        min_u=float(np.min(u)),
        reason=reason,
        diagnostics={
            "steps": steps,
            "rejections": rejections,
            "energy_increase_max": inc_max,
            "ambiguous": sum(flags.values()) >= 2,
            "final_dt": last_dt,
        },
    )
    return store.trajectory(), outcome


def decay_rate(trajectory, steady_state):
    """Exponential approach rate to a steady profile, from the last decade.

    Fits the slope of log ||u(t) - U|| over the trailing window where the
    distance lies within a factor of ten of its final value.  The fit needs
    at least five stored samples, a positive final distance, and a
    monotone window; otherwise the data does not support a rate estimate.
    """
    u_inf = steady_state.u if hasattr(steady_state, "u") else np.asarray(steady_state)
    dist = np.array(
        [discrete_norm(p - u_inf, "L2") for p in trajectory.profiles]
    )
    d_last = dist[-1]
    if not np.isfinite(d_last) or d_last <= 0.0:
        raise SolverError("decay fit unreliable")
    inside = np.nonzero(dist <= 10.0 * d_last)[0]
    start = inside[0]
    window = dist[start:]
    times = trajectory.times[start:]
    if window.shape[0] < 5 or np.any(window <= 0.0) or np.any(np.diff(window) > 0.0):
        raise SolverError("decay fit unreliable")
    slope = np.polyfit(times, np.log(window), 1)[0]
    if not np.isfinite(slope) or slope >= 0.0:
        raise SolverError("decay fit unreliable")
    return -slope


def write_trajectory(path, trajectory):
    """CSV t,min_u,l2_u,h2d_u,energy,dt with one row per stored sample."""
    lines = ["t,min_u,l2_u,h2d_u,energy,dt"]
    for i in range(len(trajectory)):
        u = trajectory.profiles[i]
        cells = (
            trajectory.times[i],
            trajectory.min_u[i],
            discrete_norm(u, "L2"),
            discrete_norm(u, "H2d"),
            trajectory.energy[i],
            trajectory.dt[i],
        )
        lines.append(",".join(_float_repr(c) for c in cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


__all__ = [
    "SimOutcome",
    "Trajectory",
    "decay_rate",
    "run",
    "step",
    "write_trajectory",
]
