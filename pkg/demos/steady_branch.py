"""Trace the branch of stable steady states up to the fold.

Continuation in the forcing strength: at each step the solver predicts the
next profile, corrects with Newton, and stops once the fold is bracketed.
Plots the response diagram (center deflection vs forcing) plus a few
profiles along the way.  Saves steady_branch.png next to this script.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from memstrip import DeviceParams, continue_branch, grid_for_size

p = DeviceParams(epsilon=0.0, model="small_gap")
grid = grid_for_size(65)
branch = continue_branch(p, dlambda0=0.05, lambda_max=6.0, grid=grid)

lam = [pt.lam for pt in branch.points]
center = [pt.u[32] for pt in branch.points]
print(f"{len(branch.points)} points, last lambda = {lam[-1]:.5f}")
if branch.fold_bracket is not None:
    lo, hi = branch.fold_bracket
    print(f"fold bracketed in [{lo:.5f}, {hi:.5f}]")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
ax1.plot(lam, center, ".-")
ax1.set_xlabel("forcing strength")
ax1.set_ylabel("center deflection")
ax1.set_title("response diagram")
for k in range(0, len(branch.points), max(1, len(branch.points) // 6)):
    pt = branch.points[k]
    ax2.plot(grid.x, pt.u, label=f"{pt.lam:.2f}")
ax2.set_xlabel("x")
ax2.set_ylabel("u")
ax2.set_title("profiles along the branch")
ax2.legend(fontsize=7, title="forcing")
fig.tight_layout()
out = pathlib.Path(__file__).with_suffix(".png")
fig.savefig(out, dpi=120)
print(f"wrote {out}")
