"""Tour of the projection oracles.

Every set family exposes the same tiny surface: an exact Euclidean
projection, a scale-relative membership test, and a point-to-set
distance.  This script projects one point onto each family and checks the
two properties every oracle guarantees: idempotence and the projection
optimality inequality.
"""

import numpy as np

from randproj import (
    AbsPowerEpigraph,
    Ball,
    Box,
    Halfspace,
    Hyperplane,
    SketchedEqualitySet,
    SketchedHalfspace,
)

rng = np.random.default_rng(0)

A = rng.standard_normal((4, 3))
x_star = rng.standard_normal(3)
b = A @ x_star

families = {
    "hyperplane a^T x = b": Hyperplane(A[0], b[0]),
    "halfspace a^T x <= b": Halfspace(A[1], b[1]),
    "sketched equality S^T A x = S^T b": SketchedEqualitySet(A, b, rng.standard_normal((4, 2))),
    "sketched inequality S^T A x <= S^T b": SketchedHalfspace(np.abs(A), np.abs(A) @ x_star + 0.5,
                                                              np.array([0.3, 0.0, 1.2, 0.5])),
    "euclidean ball": Ball(center=x_star, radius=0.75),
    "box with free sides": Box(np.array([-1.0, 0.0, -np.inf]), np.array([1.0, 2.0, np.inf])),
}

x = rng.standard_normal(3) * 3.0
print(f"projecting x = {np.round(x, 3)}\n")

for name, oracle in families.items():
    y = oracle.project(x)
    twice = oracle.project(y)
    print(f"{name}")
    print(f"  projection      {np.round(y, 4)}")
    print(f"  member now?     {oracle.contains(y)}")
    print(f"  idempotent?     {np.allclose(twice, y, rtol=1e-10)}")
    # optimality: the projection is closer than any other feasible point
    z = oracle.project(x + rng.standard_normal(3))
    lhs = np.linalg.norm(x - y) ** 2
    rhs = np.linalg.norm(x - z) ** 2 - np.linalg.norm(y - z) ** 2
    print(f"  optimality gap  {rhs - lhs:+.2e} (must be >= 0)\n")

# the pathological planar set |t|^p <= s needs a scalar root solve
epi = AbsPowerEpigraph(p=2.0)
pt = np.array([1.0, -0.5])
proj = epi.project(pt)
print(f"parabolic epigraph: {pt} -> {np.round(proj, 6)} "
      f"(on the boundary: {np.isclose(abs(proj[0])**2, proj[1])})")
