"""Conditioning constants of a sketched linear system.

Two numbers govern every convergence rate in this package:

  gamma  -- how aligned the random projection directions are (<= 1),
  kappa  -- the linear-regularity constant of the family (>= 1).

For linear systems under coordinate sketching both have closed spectral
forms; this script computes them exactly, cross-checks the Monte-Carlo
estimators against them, and shows how the minibatch-effective constant
gamma_N interpolates between 1 (single sample) and gamma (full average).
"""

import numpy as np

from randproj import (
    SketchSampler,
    estimate_gamma_empirical,
    estimate_kappa_empirical,
    gamma_N,
    gamma_linear_system,
    kappa_linear_system,
    row_norm_weights,
    uniform_weights,
)
from randproj.harness import generate_linear_equality, linear_equality_problem

m, n = 12, 5
pf = generate_linear_equality(m, n, rng=7)
A, b = pf.payload["A"], pf.payload["b"]

for label, weights in (("row-norm weights", row_norm_weights(A)),
                       ("uniform weights", uniform_weights(m))):
    sampler = SketchSampler.coordinate(m, weights)
    gamma = gamma_linear_system(A, sampler)
    kappa = kappa_linear_system(A, sampler)
    print(f"{label}: gamma = {gamma:.6f}, kappa = {kappa:.3f}, "
          f"condition number kappa*gamma = {kappa * gamma:.3f}")

print()
problem = linear_equality_problem(A, b, weights="rownorm", x_star=pf.x_star)
sampler = SketchSampler.coordinate(m, row_norm_weights(A))
gamma = gamma_linear_system(A, sampler)
kappa = kappa_linear_system(A, sampler)
for probes in (100, 1000, 10_000):
    g_hat = estimate_gamma_empirical(problem, probe_count=probes, rng=1)
    k_hat = estimate_kappa_empirical(problem, probe_count=probes, rng=1)
    print(f"{probes:>6d} probes: gamma estimate {g_hat:.6f} (true {gamma:.6f}), "
          f"kappa estimate {k_hat:.3f} (true {kappa:.3f})")
print("estimates are maxima of the defining ratios, so they approach the")
print("true constants from below as the probe budget grows\n")

print("minibatch-effective constant gamma_N = 1/N + (1 - 1/N) gamma:")
for N in (1, 2, 4, 16, 256):
    gn = gamma_N(gamma, N)
    print(f"  N = {N:>3d}: gamma_N = {gn:.4f}, optimal stepsize 1/gamma_N = {1/gn:.3f}, "
          f"rate factor 1 - 1/(gamma_N kappa) = {1 - 1/(gn*kappa):.4f}")
