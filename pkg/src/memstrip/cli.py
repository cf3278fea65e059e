"""Batch front end: config files, subcommands, sweeps, exit codes.

Configs are plain `key = value` text with `#` comments; every parameter is
a scalar, so nothing heavier is warranted.  The resolved config is echoed
to `manifest.txt` in the output directory (itself valid config syntax) so
any run can be reproduced from its artifacts alone.  Everything here is
seed-free and deterministic: identical configs produce byte-identical
output files, which the sweep contract relies on.

Exit codes: 0 success (including a run that simply reached t_end),
2 touchdown, 3 norm blowup, 4 solver failure, 5 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .core import (
    MODELS,
    ConfigError,
    DeviceParams,
    DomainError,
    SolverError,
    SolverThresholds,
    _float_repr,
    build_grid2,
    discrete_norm,
    grid_for_size,
    initial_profile,
    write_profile,
)
from .evolution import run, write_trajectory
from .operators import spectral_report, write_spectral_report
from .steady import (
    continue_branch,
    estimate_pull_in,
    linear_stability,
    newton_solve,
    write_branch,
)


def _version():
    from . import __version__

    return __version__


@dataclass(frozen=True)
class RunConfig:
    """Flat, fully resolved run configuration.

    Covers the device parameters, the solver thresholds, the grids, the
    run horizon and initial profile, the output directory, and the two
    continuation controls used by the branch and pullin subcommands.
    """

    epsilon: float = 0.5
    beta: float = 1.0
    tau: float = 1.0
    lam: float = 0.1
    gamma: float = 0.0
    model: str = "full"
    bc: str = "clamped"
    nx: int = 129
    neta: int = 65
    kappa_stop: float = 1e-3
    norm_cap: float = 1e4
    newton_tol: float = 1e-10
    steady_tol: float = 1e-9
    dt0: float = 1e-4
    dt_min: float = 1e-10
    dt_max: float = 5e-2
    t_end: float = 50.0
    u0: str = "zero"
    output_dir: str = "out"
    dlambda0: float = 0.01
    lambda_max: float = 2.0

    def device_params(self):
        return DeviceParams(
            epsilon=self.epsilon,
            beta=self.beta,
            tau=self.tau,
            lam=self.lam,
            gamma=self.gamma,
            model=self.model,
            bc=self.bc,
        )

    def thresholds(self):
        return SolverThresholds(
            kappa_stop=self.kappa_stop,
            norm_cap=self.norm_cap,
            newton_tol=self.newton_tol,
            steady_tol=self.steady_tol,
            dt0=self.dt0,
            dt_min=self.dt_min,
            dt_max=self.dt_max,
        )

    def grid(self):
        return grid_for_size(self.nx)

    def grid2(self):
        return build_grid2(self.grid(), self.neta)

    def validated(self):
        """Run all cross-field validation; returns self for chaining."""
        self.device_params()
        self.thresholds()
        self.grid2()
        if self.t_end <= 0.0:
            raise ConfigError("t_end must be positive")
        if self.dlambda0 <= 0.0 or self.lambda_max <= 0.0:
            raise ConfigError("dlambda0 and lambda_max must be positive")
        return self


#: config-file key -> (dataclass field, converter); "lambda" is the one rename
_KEYS = {}
for _f in fields(RunConfig):
    _key = "lambda" if _f.name == "lam" else _f.name
    _KEYS[_key] = (_f.name, _f.type)


def _convert(key, field_type, raw):
    if field_type == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"invalid value for {key}: '{raw}'") from None
    if field_type == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"invalid value for {key}: '{raw}'") from None
    return raw


def parse_config(text):
    """Parse `key = value` config text into a validated RunConfig.

    Unknown keys and unparsable values are reported with their line number;
    later assignments to the same key win, matching --set semantics.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value: '{raw.strip()}'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        name, ftype = _KEYS[key]
        try:
            values[name] = _convert(key, ftype, val)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return RunConfig(**values).validated()


def render_config(config):
    """Canonical config text; parse_config(render_config(c)) == c."""
    lines = []
    for f in fields(RunConfig):
        key = "lambda" if f.name == "lam" else f.name
        v = getattr(config, f.name)
        if f.type == "float":
            lines.append(f"{key} = {_float_repr(v)}")
        else:
            lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def apply_overrides(config, pairs):
    """Apply repeatable --set key=value overrides to a config."""
    updates = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got '{pair}'")
        key, _, val = pair.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _KEYS:
            raise ConfigError(f"--set: unknown key '{key}'")
        name, ftype = _KEYS[key]
        updates[name] = _convert(key, ftype, val)
    return replace(config, **updates).validated()


# ---------------------------------------------------------------------------
# subcommands

_EXIT_BY_KIND = {"converged": 0, "time_limit": 0, "touchdown": 2, "blowup_norm": 3}


def _out(config, name):
    return os.path.join(config.output_dir, name)


def _write_manifest(config):
    os.makedirs(config.output_dir, exist_ok=True)
    text = f"# memstrip {_version()}\n" + render_config(config)
    with open(_out(config, "manifest.txt"), "w") as fh:
        fh.write(text)


def _cmd_simulate(config):
    grid = config.grid()
    state = initial_profile(config.u0, grid, config.bc)
    traj, outcome = run(
        state,
        config.device_params(),
        config.thresholds(),
        config.t_end,
        config.grid2(),
    )
    write_trajectory(_out(config, "trajectory.csv"), traj)
    write_profile(_out(config, "profile.csv"), grid, traj.profiles[-1])
    with open(_out(config, "outcome.json"), "w") as fh:
        fh.write(outcome.record() + "\n")
    return _EXIT_BY_KIND[outcome.kind]


def _cmd_steady(config):
    grid = config.grid()
    state0 = initial_profile(config.u0, grid, config.bc)
    th = config.thresholds()
    state = newton_solve(state0, config.device_params(), th, config.grid2())
    write_profile(_out(config, "profile.csv"), grid, state.u)
    rep = linear_stability(
        state, config.device_params(), config.grid2(), th.kappa_stop
    )
    lines = [
        f"# gap {_float_repr(rep.gap)}",
        f"# stable {int(rep.stable)}",
        "re,im",
    ]
    order = np.argsort(rep.eigenvalues.real)
    for ev in rep.eigenvalues[order]:
        lines.append(f"{_float_repr(ev.real)},{_float_repr(ev.imag)}")
    with open(_out(config, "stability.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def _cmd_branch(config):
    grid = config.grid()
    branch = continue_branch(
        config.device_params(),
        config.dlambda0,
        config.lambda_max,
        grid,
        config.thresholds(),
        config.grid2(),
    )
    write_branch(_out(config, "branch.csv"), branch)
    profile_dir = _out(config, "profiles")
    os.makedirs(profile_dir, exist_ok=True)
    for i, point in enumerate(branch.points):
        write_profile(
            os.path.join(profile_dir, f"point_{i:04d}.csv"), grid, point.u
        )
    return 0


def _cmd_pullin(config):
    est = estimate_pull_in(
        config.device_params(),
        config.grid(),
        config.thresholds(),
        config.grid2(),
        t_end=config.t_end,
    )
    fold_lo, fold_hi = est.fold_bracket if est.fold_bracket else (None, None)
    record = {
        "lambda_star": est.lambda_star,
        "dynamic_lo": est.dynamic_bracket[0],
        "dynamic_hi": est.dynamic_bracket[1],
        "fold_lo": fold_lo,
        "fold_hi": fold_hi,
        "rel_gap": None if np.isnan(est.rel_gap) else est.rel_gap,
    }
    with open(_out(config, "pullin.json"), "w") as fh:
        fh.write(json.dumps(record) + "\n")
    return 0


def _cmd_spectrum(config):
    grid = config.grid()
    state = initial_profile(config.u0, grid, config.bc)
    rep = spectral_report(state.u, config.device_params())
    write_spectral_report(_out(config, "spectrum.csv"), rep)
    return 0


def _cmd_compare(config):
    """Run the same setup under all three models; joint CSV output."""
    grid = config.grid()
    traj_lines = ["model,t,min_u,l2_u,h2d_u,energy,dt"]
    summary_lines = ["model,outcome,t_final,min_u_final"]
    finals = {}
    for model in MODELS:
        cfg_m = replace(config, model=model).validated()
        state = initial_profile(config.u0, grid, config.bc)
        traj, outcome = run(
            state,
            cfg_m.device_params(),
            cfg_m.thresholds(),
            cfg_m.t_end,
            cfg_m.grid2(),
        )
        for i in range(len(traj)):
            u = traj.profiles[i]
            cells = (
                traj.times[i],
                traj.min_u[i],
                discrete_norm(u, "L2"),
                discrete_norm(u, "H2d"),
                traj.energy[i],
                traj.dt[i],
            )
            traj_lines.append(model + "," + ",".join(_float_repr(c) for c in cells))
        summary_lines.append(
            f"{model},{outcome.kind},{_float_repr(outcome.t_final)},"
            f"{_float_repr(outcome.min_u)}"
        )
        finals[model] = traj.profiles[-1]
    with open(_out(config, "compare_trajectories.csv"), "w") as fh:
        fh.write("\n".join(traj_lines) + "\n")
    with open(_out(config, "compare_summary.csv"), "w") as fh:
        fh.write("\n".join(summary_lines) + "\n")
    prof_lines = ["x," + ",".join(f"u_{m}" for m in MODELS)]
    for i in range(grid.n):
        cells = [grid.x[i]] + [finals[m][i] for m in MODELS]
        prof_lines.append(",".join(_float_repr(c) for c in cells))
    with open(_out(config, "compare_profiles.csv"), "w") as fh:
        fh.write("\n".join(prof_lines) + "\n")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "steady": _cmd_steady,
    "branch": _cmd_branch,
    "pullin": _cmd_pullin,
    "spectrum": _cmd_spectrum,
    "compare": _cmd_compare,
}


# ---------------------------------------------------------------------------
# lambda sweeps


def _sweep_row(args):
    config, lam = args
    cfg = replace(config, lam=lam)
    try:
        grid = cfg.grid()
        state = initial_profile(cfg.u0, grid, cfg.bc)
        _, outcome = run(
            state, cfg.device_params(), cfg.thresholds(), cfg.t_end, cfg.grid2()
        )
        kind, t_final, min_u = outcome.kind, outcome.t_final, outcome.min_u
    except (SolverError, DomainError, ConfigError):
        kind, t_final, min_u = "solver_failure", float("nan"), float("nan")
    return f"{_float_repr(lam)},{kind},{_float_repr(t_final)},{_float_repr(min_u)}"


def sweep(config, lambda_list, parallel=False):
    """One relaxation run per lambda; returns the summary CSV text.

    Rows are ordered by lambda regardless of completion order, and a row
    whose run fails records the failure without aborting the sweep, so the
    output is byte-identical whether or not the runs execute in parallel.
    Also writes sweep.csv under the config's output directory.
    """
    lams = sorted(float(v) for v in lambda_list)
    if any(v < 0.0 for v in lams):
        raise ConfigError("lambda values must be nonnegative")
    jobs = [(config, lam) for lam in lams]
    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    text = "\n".join(["lambda,outcome,t_final,min_u_final"] + rows) + "\n"
    os.makedirs(config.output_dir, exist_ok=True)
    with open(_out(config, "sweep.csv"), "w") as fh:
        fh.write(text)
    return text


# ---------------------------------------------------------------------------
# entry point


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="memstrip",
        description="Membrane-over-plate simulator: relaxation runs, steady "
        "states, branch continuation, pull-in estimation.",
    )
    parser.add_argument("--version", action="version", version=f"memstrip {_version()}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "integrate the evolution and classify the outcome",
        "steady": "solve for a steady profile and its stability",
        "branch": "trace the steady branch in lambda",
        "pullin": "bracket the pull-in threshold",
        "spectrum": "eigenvalues of the frozen elastic operator at u0",
        "compare": "run all three models on one setup",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", default=None, help="config file path")
        sp.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
    return parser


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 5

    try:
        if args.config is not None:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from None
            config = parse_config(text)
        else:
            config = RunConfig().validated()
        config = apply_overrides(config, args.overrides)
        _write_manifest(config)
        return _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"memstrip: config error: {exc}", file=sys.stderr)
        return 5
    except (SolverError, DomainError) as exc:
        print(f"memstrip: solver failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())


__all__ = [
    "RunConfig",
    "apply_overrides",
    "main",
    "parse_config",
    "render_config",
    "sweep",
]
