"""Feasibility through cuts: split problems and separation oracles.

Some target sets have no closed-form projection.  Two constructions still
make them reachable: supporting halfspaces for split problems
{x : Ax in Z}, and separation-oracle cuts for arbitrary convex bodies.
Each probe point yields one halfspace containing the target, and the
stochastic solver runs on those cuts directly.
"""

import numpy as np

from randproj import (
    Ball,
    SeparationOracleSet,
    SolverConfig,
    StepsizePolicy,
    run_sap,
    separation_cut,
)
from randproj.harness import split_feasibility_problem
from randproj.solvers import FeasibilityProblem

rng = np.random.default_rng(1)

# --- split feasibility: find x with Ax inside a ball -----------------------
A = rng.standard_normal((3, 4))
x_star = rng.standard_normal(4)
Z = Ball(A @ x_star, radius=0.5)

for mode in ("iterate", "gaussian"):
    problem = split_feasibility_problem(A, Z, probe_mode=mode, x_star=x_star)
    cfg = SolverConfig(N=1, policy=StepsizePolicy.constant(1.0), max_iters=3000,
                       tol_F=1e-22, seed=4, trace_every=500, trace_iterates=False)
    trace = run_sap(problem, cfg, x0=np.zeros(4))
    image_err = max(0.0, np.linalg.norm(A @ trace.x_final - Z.center) - Z.radius)
    print(f"split problem, probe mode {mode!r}: {trace.status} after "
          f"{trace.iterations} cuts, image outside Z by {image_err:.2e}")

# --- separation oracle: an ellipse known only through cuts ------------------
Q = np.array([[2.0, 0.3], [0.3, 0.5]])


def member(s):
    return float(s @ Q @ s) <= 1.0 + 1e-12


def separator(s):
    return 2.0 * (Q @ s)  # gradient of the quadratic at an outside point


ellipse = SeparationOracleSet(member, separator, dim=2)

s = np.array([3.0, -2.0])
cut = separation_cut(s, ellipse)
print(f"\ncut at {s}: normal {np.round(cut.normal, 3)}, offset {cut.offset:.3f}")

# a probe point sits on the boundary of its own cut, so oracle cuts are
# taken at random probes around the iterate; the shallow cuts near the
# boundary make progress sublinear, which is the expected behaviour for
# pure cutting schemes on smooth bodies
problem = FeasibilityProblem(
    generator=lambda x, rng_: separation_cut(x + 0.3 * rng_.standard_normal(2), ellipse),
    dim=2,
    member=member,
    x_star=np.zeros(2),
)
print("\noracle-driven run (quadratic value must approach 1):")
x0 = np.array([4.0, 4.0])
for budget in (30, 300, 3000):
    cfg = SolverConfig(N=1, policy=StepsizePolicy.constant(1.0), max_iters=budget,
                       tol_F=0.0, seed=0, trace_every=10**9, trace_iterates=False)
    trace = run_sap(problem, cfg, x0=x0)
    x = trace.x_final
    print(f"  {budget:>5} cuts: point {np.round(x, 4)}, value {x @ Q @ x:.6f}")
