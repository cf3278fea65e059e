"""Solve the electrostatic potential above a bowed strip and plot it.

The potential lives on a rectangle after the gap-normalizing change of
variables; this demo maps it back to the physical gap region so the plot
shows the actual geometry.  Saves potential_field.png next to this script.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from memstrip import (
    DeviceParams,
    MembraneState,
    build_grid2,
    grid_for_size,
    solve_potential,
    trace_forcing,
)

n = 129
grid = grid_for_size(n)
state = MembraneState(-0.45 * (1.0 - grid.x**2) ** 2)
grid2 = build_grid2(grid, 65)
p = DeviceParams(epsilon=0.4)

field = solve_potential(state, grid2, p)
g = trace_forcing(state, field, p)
print(f"peak forcing g at center: {g[n // 2]:.4f}")
print(f"flat-plate reference would be 1.0000")

# physical vertical coordinate z = eta * (1 + u) - 1, one column per node
X = np.repeat(grid.x[:, None], grid2.m, axis=1)
Z = grid2.eta[None, :] * (1.0 + state.u[:, None]) - 1.0

fig, ax = plt.subplots(figsize=(7, 3.2))
cs = ax.contourf(X, Z, field.phi, levels=21, cmap="viridis")
ax.plot(grid.x, state.u, "k-", lw=1.5, label="strip")
ax.axhline(-1.0, color="k", lw=0.8, ls="--", label="ground plate")
ax.set_xlabel("x")
ax.set_ylabel("z")
ax.legend(loc="lower right", fontsize=8)
fig.colorbar(cs, ax=ax, label="potential")
fig.tight_layout()
out = pathlib.Path(__file__).with_suffix(".png")
fig.savefig(out, dpi=120)
print(f"wrote {out}")
