"""Locate the pull-in threshold two independent ways and compare.

Below the threshold the strip settles to a steady sag; above it the strip
accelerates into the plate (touchdown).  The estimate combines dynamic
bisection on simulation outcomes with the fold location from steady
continuation, and reports both brackets.
"""

from memstrip import DeviceParams, estimate_pull_in, grid_for_size

p = DeviceParams(epsilon=0.0, model="small_gap")
est = estimate_pull_in(p, grid_for_size(65), t_end=300.0)

lo, hi = est.dynamic_bracket
print(f"dynamic bracket : [{lo:.6f}, {hi:.6f}]")
if est.fold_bracket is not None:
    flo, fhi = est.fold_bracket
    print(f"fold bracket    : [{flo:.6f}, {fhi:.6f}]")
print(f"pull-in estimate: {est.lambda_star:.6f}")
print(f"relative gap    : {est.rel_gap:.2e}")
