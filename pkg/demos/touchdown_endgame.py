"""Drive the strip past pull-in and resolve the approach to touchdown.

Above the pull-in threshold no steady state exists: the center of the strip
accelerates into the ground plate.  The stepper shrinks its step near the
contact time so the final state lands just inside the stopping band rather
than crossing the plate.  Saves touchdown_endgame.png next to this script.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from memstrip import DeviceParams, MembraneState, run

p = DeviceParams(epsilon=0.0, lam=10.0, model="small_gap")
traj, outcome = run(MembraneState(np.zeros(65)), p)

print(f"outcome: {outcome.kind} at t = {outcome.t_final:.6f}")
print(f"final minimum gap: {1.0 + outcome.min_u:.2e}")
print(f"final step size:   {outcome.diagnostics['final_dt']:.2e}")

gap = 1.0 + traj.profiles.min(axis=1)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
ax1.semilogy(traj.times, gap, ".-", ms=3)
ax1.set_xlabel("t")
ax1.set_ylabel("min gap")
ax1.set_title("gap collapse (log scale)")
for k in np.linspace(0, len(traj) - 1, 7).astype(int):
    ax2.plot(traj.profiles[k], lw=1, label=f"t={traj.times[k]:.4f}")
ax2.set_xlabel("node")
ax2.set_ylabel("u")
ax2.set_title("profiles approaching the plate")
ax2.legend(fontsize=6)
fig.tight_layout()
out = pathlib.Path(__file__).with_suffix(".png")
fig.savefig(out, dpi=120)
print(f"wrote {out}")
