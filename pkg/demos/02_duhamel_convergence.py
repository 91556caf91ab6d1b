"""Second-order convergence of both time steppers.

The reference solution on a 3^3 grid is the variation-of-constants formula
evaluated with dense matrix exponentials. Halving dt should cut the error
by about four.
"""
import numpy as np

from micromorphx import LoadTerm, RunConfig, SeparableLoads, State, TimeProfile, assemble_stiffness, build_grid, run
from micromorphx import reference_exponential
from micromorphx.dynamics import stability_limit
from micromorphx.statics import norm_X

grid = build_grid(3)
sm = assemble_stiffness(grid)
x, y, z = grid.nodes.T
f = np.zeros((grid.n_nodes, 3))
f[:, 0] = np.sin(np.pi * x) * np.sin(np.pi * y) * np.sin(np.pi * z)
loads = SeparableLoads(grid, [LoadTerm(f, None, TimeProfile((1.0, 0.5), "sin", 2.0))])

state0 = State.random(sm, np.random.default_rng(1)).scaled(0.1)
ref = np.concatenate(reference_exponential(sm, state0, loads, 1.0).vectors(sm))
print("leapfrog stability limit:", stability_limit(sm))

for scheme in ("midpoint", "leapfrog"):
    errors = []
    for k in (32, 64, 128, 256):
        final = run(RunConfig(sm, 1.0 / k, 1.0, state0, loads, scheme)).final
        errors.append(norm_X(sm, np.concatenate(final.vectors(sm)) - ref) / norm_X(sm, ref))
    slopes = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    print(scheme, "errors", np.array2string(np.array(errors), precision=3), "slopes", np.round(slopes, 3))
