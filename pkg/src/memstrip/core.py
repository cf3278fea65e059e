"""Grids, device parameters, membrane states and discrete norms.

The device is an elastic strip suspended over a rigid ground plate.  After
nondimensionalization the strip cross section is the interval [-1, 1], the
undeflected strip sits at height 0 and the ground plate at height -1, so a
deflection profile u is admissible only while min(u) > -1 (contact with the
plate, "touchdown", ends the model's validity).  Everything downstream works
on a uniform grid over [-1, 1] with an odd node count, which makes x = 0 a
node and keeps the grid exactly mirror symmetric; the gap potential
additionally lives on the fixed rectangle [-1, 1] x [0, 1].

This module owns the small value types shared by the whole package plus the
plain finite-difference helpers (boundary-condition aware first/second
derivatives, trapezoidal quadrature, profile CSV I/O).
"""

from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass

import numpy as np

MODELS = ("full", "small_deformation", "small_gap")
BCS = ("clamped", "pinned")

#: Nodal functions are plain float arrays over the grid nodes.
NodalFunction = np.ndarray


class DomainError(RuntimeError):
    """The moving domain degenerated (membrane at or below the plate)."""


class SolverError(RuntimeError):
    """A linear or nonlinear solve failed or could not be trusted."""


class ConfigError(ValueError):
    """Invalid run configuration or parameter combination."""


def _float_repr(v):
    # shortest round-trip float formatting; keeps CSV output reproducible
    return repr(float(v))


@dataclass(frozen=True)
class DeviceParams:
    """Dimensionless device constants plus model and boundary selectors.

    epsilon  aspect ratio of the device (gap height over half width); the
             reduced small-gap model is the epsilon -> 0 limit and is the
             only model that accepts epsilon = 0.
    beta     bending rigidity coefficient (fourth-order term).
    tau      tension coefficient (second-order term).
    lam      applied-voltage strength multiplying the electrostatic pull.
    gamma    inertia coefficient; only the damping-dominated limit gamma = 0
             is supported.
    model    'full' (curvature-exact elastic operator + gap potential),
             'small_deformation' (linear elastic operator + gap potential),
             'small_gap' (linear elastic operator + closed-form forcing).
    bc       'clamped' (u = u' = 0 at both ends) or 'pinned' (u = u'' = 0);
             pinned is only admitted for the reduced models.
    """

    epsilon: float = 0.5
    beta: float = 1.0
    tau: float = 1.0
    lam: float = 0.1
    gamma: float = 0.0
    model: str = "full"
    bc: str = "clamped"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model '{self.model}'")
        if self.bc not in BCS:
            raise ConfigError(f"unknown bc '{self.bc}'")
        if self.gamma != 0.0:
            raise ConfigError("inertia is not supported: gamma must be 0")
        if self.beta < 0.0 or self.tau < 0.0:
            raise ConfigError("beta and tau must be nonnegative")
        if self.beta + self.tau <= 0.0:
            raise ConfigError("beta + tau must be positive")
        if self.lam < 0.0:
            raise ConfigError("lambda must be nonnegative")
        if self.epsilon < 0.0:
            raise ConfigError("epsilon must be nonnegative")
        if self.model == "full" and self.epsilon <= 0.0:
            raise ConfigError("model=full requires epsilon > 0")
        if self.model == "full" and self.beta <= 0.0:
            raise ConfigError("model=full requires beta > 0")
        if self.epsilon == 0.0 and self.model != "small_gap":
            raise ConfigError("epsilon = 0 requires model=small_gap")
        if self.bc == "pinned" and self.model == "full":
            raise ConfigError("pinned BC only for reduced models")


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Uniform grid on [-1, 1] with odd node count.

    Nodes are built from integer offsets around the center so that
    x[i] == -x[n-1-i] bitwise for every i and x[(n-1)/2] == 0.0; the
    endpoints are pinned to exactly -1.0 and 1.0.
    """

    n: int
    h: float
    x: np.ndarray

    def __post_init__(self):
        self.x.setflags(write=False)


def build_grid(n):
    """Uniform symmetric grid with n nodes (n odd, n >= 33)."""
    n = int(n)
    if n % 2 == 0:
        raise ConfigError("grid size must be odd")
    if n < 33:
        raise ConfigError("grid size must be at least 33")
    h = 2.0 / (n - 1)
    mid = (n - 1) // 2
    x = (np.arange(n) - mid) * h
    x[0] = -1.0
    x[-1] = 1.0
    return Grid1D(n=n, h=h, x=x)


@functools.lru_cache(maxsize=32)
def grid_for_size(n):
    """Cached grid lookup; grids are fully determined by their node count."""
    return build_grid(n)


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Tensor grid for the transformed gap rectangle [-1, 1] x [0, 1]."""

    base: Grid1D
    m: int
    k: float
    eta: np.ndarray

    def __post_init__(self):
        self.eta.setflags(write=False)


def build_grid2(base, m):
    """Rectangle grid over base x [0, 1] with m vertical nodes (m >= 5)."""
    m = int(m)
    if m < 5:
        raise ConfigError("vertical grid size must be at least 5")
    eta = np.linspace(0.0, 1.0, m)
    return Grid2D(base=base, m=m, k=1.0 / (m - 1), eta=eta)


@dataclass(frozen=True, eq=False)
class MembraneState:
    """Deflection profile on the full node set at a given time.

    u carries the boundary values (identically 0 for both supported BCs),
    so len(u) == grid.n and u[0] == u[-1] == 0.
    """

    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        object.__setattr__(self, "u", u)
        u.setflags(write=False)
        if u.min() <= -1.0:
            raise DomainError("touchdown state: min(u) <= -1")

    @property
    def n(self):
        return self.u.shape[0]

    def grid(self):
        return grid_for_size(self.n)

    def with_u(self, u, t=None):
        return MembraneState(u=u, t=self.t if t is None else t)


@dataclass(frozen=True)
class SolverThresholds:
    """Numerical guards shared by the stepper and the steady-state solvers.

    kappa_stop   minimal admissible distance to the plate; states with
                 min(u) <= -1 + kappa_stop are treated as touched down.
    norm_cap     H2d norm above which a trajectory is declared blown up.
    newton_tol   sup-norm residual target for Newton.
    steady_tol   ||u_{n+1} - u_n||_L2 / dt below which a run is steady.
    dt0/dt_min/dt_max   adaptive step-size controls.
    """

    kappa_stop: float = 1e-3
    norm_cap: float = 1e4
    newton_tol: float = 1e-10
    steady_tol: float = 1e-9
    dt0: float = 1e-4
    dt_min: float = 1e-10
    dt_max: float = 5e-2

    def __post_init__(self):
        if not (0.0 < self.kappa_stop < 1.0):
            raise ConfigError("kappa_stop must lie in (0, 1)")
        if self.norm_cap <= 0.0:
            raise ConfigError("norm_cap must be positive")
        if self.newton_tol <= 0.0 or self.steady_tol <= 0.0:
            raise ConfigError("tolerances must be positive")
        if not (0.0 < self.dt_min <= self.dt0 <= self.dt_max):
            raise ConfigError("need 0 < dt_min <= dt0 <= dt_max")


# ---------------------------------------------------------------------------
# finite-difference primitives


def _ghosts(u, bc):
    # ghost values u[-1], u[n] for homogeneous BCs; mirror enforces u' = 0,
    # antisymmetric mirror enforces u'' = 0 (u itself vanishes at the ends)
    if bc == "clamped":
        return u[1], u[-2]
    return -u[1], -u[-2]


def first_derivative(u, h, bc):
    """Centered first derivative on all nodes, ghost-node boundary closure."""
    gl, gr = _ghosts(u, bc)
    du = np.empty_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    du[0] = (u[1] - gl) / (2.0 * h)
    du[-1] = (gr - u[-2]) / (2.0 * h)
    return du


def second_derivative(u, h, bc):
    """Centered second derivative on all nodes, ghost-node boundary closure."""
    gl, gr = _ghosts(u, bc)
    h2 = h * h
    d2 = np.empty_like(u)
    # (left + right) - 2 center: the commutative sum keeps mirror symmetry
    # of even data exact in floating point
    d2[1:-1] = ((u[:-2] + u[2:]) - 2.0 * u[1:-1]) / h2
    d2[0] = ((gl + u[1]) - 2.0 * u[0]) / h2
    d2[-1] = ((u[-2] + gr) - 2.0 * u[-1]) / h2
    return d2


def integrate_nodal(values, h):
    """Trapezoidal quadrature of nodal values on a uniform grid."""
    return h * (values.sum() - 0.5 * (values[0] + values[-1]))


def mirror(u):
    return u[::-1]


def is_even(u):
    """Exact (bitwise) mirror symmetry test."""
    return bool(np.array_equal(u, u[::-1]))


def discrete_norm(u, kind="L2"):
    """Discrete norms of a nodal function.

    'L2'   trapezoidal L2 norm over [-1, 1].
    'H2d'  (||u||_2^2 + ||D2 u||_2^2)^(1/2) where D2 is the centered second
           difference evaluated on the interior nodes (no BC assumption);
           used as the blowup monitor.
    """
    u = np.asarray(u, dtype=float)
    h = 2.0 / (u.shape[0] - 1)
    if kind == "L2":
        return float(np.sqrt(integrate_nodal(u * u, h)))
    if kind == "H2d":
        l2sq = integrate_nodal(u * u, h)
        d2 = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / (h * h)
        d2sq = integrate_nodal(d2 * d2, h)
        return float(np.sqrt(l2sq + d2sq))
    raise ValueError(f"unknown norm kind '{kind}'")


# ---------------------------------------------------------------------------
# initial profiles and profile CSV I/O

_BUMP_RE = re.compile(r"^bump\((?P<a>[^)]+)\)$")
_FILE_RE = re.compile(r"^file\((?P<path>.+)\)$")


def _check_bc_compatibility(u, grid, bc):
    # boundary values must vanish to 1e-8; the one-sided stencil for the
    # relevant end derivative only vanishes to its own O(h^2) truncation on
    # an exactly compatible smooth profile, so that tolerance scales with h^2
    h = grid.h
    if abs(u[0]) > 1e-8 or abs(u[-1]) > 1e-8:
        raise ConfigError("incompatible initial condition")
    tol = 10.0 * h * h * (1.0 + float(np.max(np.abs(u))))
    if bc == "clamped":
        dl = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
        dr = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
        if abs(dl) > tol or abs(dr) > tol:
            raise ConfigError("incompatible initial condition")
    else:
        d2l = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / (h * h)
        d2r = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / (h * h)
        if abs(d2l) > tol or abs(d2r) > tol:
            raise ConfigError("incompatible initial condition")


def initial_profile(spec, grid, bc="clamped"):
    """Build an initial membrane state from a textual profile spec.

    spec is one of 'zero', 'bump(a)' (the quartic a*(1-x^2)^2, which
    satisfies the clamped conditions identically) or 'file(path)' pointing
    at a profile CSV whose nodes must match the grid.
    """
    spec = spec.strip()
    if bc not in BCS:
        raise ConfigError(f"unknown bc '{bc}'")
    if spec == "zero":
        return MembraneState(u=np.zeros(grid.n), t=0.0)
    m = _BUMP_RE.match(spec)
    if m:
        try:
            a = float(m.group("a"))
        except ValueError:
            raise ConfigError(f"bad bump amplitude in '{spec}'") from None
        if a <= -1.0:
            raise ConfigError("initial touchdown")
        u = a * (1.0 - grid.x**2) ** 2
        if bc == "pinned" and a != 0.0:
            # the quartic bump carries nonzero curvature at the supports
            raise ConfigError("incompatible initial condition")
        return MembraneState(u=u, t=0.0)
    m = _FILE_RE.match(spec)
    if m:
        u = read_profile(m.group("path"), grid)
        if u.min() <= -1.0:
            raise ConfigError("initial touchdown")
        _check_bc_compatibility(u, grid, bc)
        return MembraneState(u=u, t=0.0)
    raise ConfigError(f"unknown initial profile spec '{spec}'")


def write_profile(path, grid, u):
    """Write a profile CSV with header x,u."""
    lines = ["x,u"]
    for xi, ui in zip(grid.x, u):
        lines.append(f"{_float_repr(xi)},{_float_repr(ui)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_profile(path, grid):
    """Read a profile CSV (header x,u); nodes must match grid to 1e-12."""
    try:
        with open(path) as fh:
            rows = [
                ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")
            ]
    except OSError as exc:
        raise ConfigError(f"cannot read profile file: {exc}") from None
    if not rows or rows[0].replace(" ", "") != "x,u":
        raise ConfigError(f"profile file {path} must start with header 'x,u'")
    data = np.array([[float(v) for v in ln.split(",")] for ln in rows[1:]])
    if data.shape[0] != grid.n:
        raise ConfigError("incompatible initial condition")
    if np.max(np.abs(data[:, 0] - grid.x)) > 1e-12:
        raise ConfigError("incompatible initial condition")
    return data[:, 1].copy()


def outcome_record(kind, t_final, min_u, reason):
    """Single-line JSON record describing how a run ended."""
    return json.dumps(
        {"kind": kind, "t_final": t_final, "min_u": min_u, "reason": reason}
    )


__all__ = [
    "BCS",
    "MODELS",
    "ConfigError",
    "DeviceParams",
    "DomainError",
    "Grid1D",
    "Grid2D",
    "MembraneState",
    "NodalFunction",
    "SolverError",
    "SolverThresholds",
    "build_grid",
    "build_grid2",
    "discrete_norm",
    "first_derivative",
    "grid_for_size",
    "initial_profile",
    "integrate_nodal",
    "is_even",
    "mirror",
    "outcome_record",
    "read_profile",
    "second_derivative",
    "write_profile",
]
