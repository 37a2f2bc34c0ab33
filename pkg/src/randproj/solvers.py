"""Minibatch stochastic projection solvers.

One iteration draws N independent samples of the set family, projects the
current iterate onto each sampled set (conceptually in parallel; results
are reduced in fixed index order) and relaxes towards the average:

    x <- x - alpha * (x - mean of projections)

Specializations: N = 1 is stochastic alternating projection, the exact
weighted average over a finite family is the deterministic average
projection method, and alpha = 1 with cyclic/random single projections is
the basic alternating projection baseline.

Problems and configs are immutable during a run; one run owns its random
stream, and all N samples of an iteration are drawn serially before any
projection executes, so traces depend only on (seed, config, problem).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .conditioning import gamma_N
from .errors import InvalidConfigError, InvalidInputError, NumericalFailureError
from .sampling import DiscreteDistribution, as_generator, uniform_weights
from .sets import MEMBERSHIP_TOL

__all__ = [
    "FeasibilityProblem",
    "StepsizePolicy",
    "SolverConfig",
    "IterationTrace",
    "spa_step",
    "compute_adaptive_gamma",
    "stepsize_for",
    "run_spa",
    "run_sap",
    "run_avp",
    "run_bap",
]

_FEASIBLE_EPS = 1e-300


class FeasibilityProblem:
    """A family of projectable sets with a sampling distribution.

    Finite mode: an ordered list of sets plus index weights (uniform by
    default).  Generator mode: a callable ``generator(x, rng) -> set``
    realising a parameterized family (separation cuts, supporting
    halfspaces, ...), with the ambient dimension given explicitly.

    A known feasible point ``x_star`` is validated against every set at
    construction; ``distance_oracle`` optionally maps a point to its exact
    distance from the intersection.
    """

    def __init__(self, sets=None, distribution=None, x_star=None,
                 distance_oracle=None, projection_oracle=None, generator=None,
                 dim=None, member=None, meta=None):
        if (sets is None) == (generator is None):
            raise InvalidInputError("provide either a finite set list or a generator")
        self.generator = generator
        self.meta = meta or {}
        self.distance_oracle = distance_oracle
        self.projection_oracle = projection_oracle
        if sets is not None:
            self.sets = list(sets)
            if not self.sets:
                raise InvalidInputError("need at least one set")
            dims = {s.dim for s in self.sets if getattr(s, "dim", None) is not None}
            if len(dims) > 1:
                raise InvalidInputError(f"sets disagree on dimension: {sorted(dims)}")
            if dim is None:
                if not dims:
                    raise InvalidInputError("cannot infer dimension; pass dim=")
                dim = dims.pop()
            self.dim = int(dim)
            if distribution is None:
                distribution = uniform_weights(len(self.sets))
            elif not isinstance(distribution, DiscreteDistribution):
                distribution = DiscreteDistribution(distribution)
            if len(distribution) != len(self.sets):
                raise InvalidInputError("distribution length must match set count")
            self.distribution = distribution
        else:
            if dim is None:
                raise InvalidInputError("generator problems need an explicit dim")
            self.sets = None
            self.distribution = None
            self.dim = int(dim)
        self._member = member
        self.x_star = None
        if x_star is not None:
            x_star = np.asarray(x_star, dtype=float)
            if x_star.shape != (self.dim,):
                raise InvalidInputError("x_star has the wrong dimension")
            if not self.contains(x_star):
                raise InvalidInputError("x_star is not feasible for every set")
            self.x_star = x_star

    @property
    def is_finite(self) -> bool:
        return self.sets is not None

    @property
    def m(self) -> int:
        return len(self.sets) if self.is_finite else 0

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        if self._member is not None:
            return bool(self._member(np.asarray(x, dtype=float)))
        if not self.is_finite:
            raise InvalidInputError("generator problem without a membership callable")
        return all(s.contains(x, tol=tol) for s in self.sets)

    def sample_sets(self, x, n, rng):
        """Draw n sets; consumes the stream serially before any projection."""
        if self.is_finite:
            idx = self.distribution.sample_minibatch(n, rng)
            return [self.sets[i] for i in idx]
        return [self.generator(x, rng) for _ in range(n)]


@dataclass(frozen=True)
class StepsizePolicy:
    """Stepsize rule: fixed, optimal for known gamma_N, or adaptive.

    ``constant``: a fixed alpha, validated at run start against the window
    (0, 2/gamma_N) when gamma is known (any alpha in (0, 2) is always
    admissible since gamma_N <= 1).
    ``optimal``: alpha = 1/gamma_N, the maximizer of the per-step decrease.
    ``adaptive``: alpha = base / gamma_N^k where gamma_N^k is rebuilt each
    iteration from the minibatch alignment ratio; base must lie in (0, 2).
    Adaptive weights are uniform or proportional to residual norms.
    """

    kind: str
    alpha: float | None = None
    weights: str = "uniform"
    margin: float = 1e-6

    @classmethod
    def constant(cls, alpha, margin=1e-6):
        return cls("constant", alpha=float(alpha), margin=margin)

    @classmethod
    def optimal(cls):
        return cls("optimal")

    @classmethod
    def adaptive(cls, alpha_base=1.0, weights="uniform"):
        if not (0.0 < alpha_base < 2.0):
            raise InvalidConfigError("adaptive base stepsize must lie in (0, 2)")
        if weights not in ("uniform", "residual"):
            raise InvalidConfigError(f"unknown adaptive weight rule {weights!r}")
        return cls("adaptive", alpha=float(alpha_base), weights=weights)

    def validate(self, gamma, N):
        """Run-start validation; needs gamma for overrelaxed constants."""
        gn = None
        if N == 1:
            gn = 1.0
        elif gamma is not None:
            gn = gamma_N(gamma, N)
        if self.kind == "constant":
            if not self.alpha > 0:
                raise InvalidConfigError("constant stepsize must be positive")
            if gn is not None:
                if self.alpha >= 2.0 / gn:
                    raise InvalidConfigError(
                        f"stepsize {self.alpha} outside (0, {2.0 / gn}) for gamma_N={gn}"
                    )
            elif self.alpha >= 2.0:
                raise InvalidConfigError(
                    "stepsize >= 2 requires gamma to validate the window (0, 2/gamma_N)"
                )
        elif self.kind == "optimal":
            if gn is None:
                raise InvalidConfigError("optimal stepsize needs gamma (or N = 1)")
        elif self.kind != "adaptive":
            raise InvalidConfigError(f"unknown stepsize policy {self.kind!r}")

    def effective_margin(self, gn: float) -> float:
        """The margin delta with delta <= alpha <= 2/gamma_N - delta."""
        if self.kind == "optimal":
            return 1.0 / gn
        if self.kind == "constant":
            return max(min(self.alpha, 2.0 / gn - self.alpha), 0.0)
        return self.margin


def stepsize_for(policy: StepsizePolicy, gamma_n: float, k: int = 0) -> float:
    """Stepsize at iteration k given the (possibly per-iteration) gamma_N."""
    if policy.kind == "constant":
        return policy.alpha
    if not (0.0 < gamma_n <= 1.0 + 1e-12):
        raise InvalidInputError(f"gamma_N must lie in (0, 1], got {gamma_n!r}")
    if policy.kind == "optimal":
        return 1.0 / gamma_n
    if policy.kind == "adaptive":
        return policy.alpha / gamma_n
    raise InvalidConfigError(f"unknown stepsize policy {policy.kind!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters: minibatch size, stepsize rule, budget and seed.

    ``gamma`` feeds the optimal stepsize and the window validation; it is
    the alignment constant of the problem, computed externally (closed
    form or estimate).  ``trace_every`` is the recording stride;
    ``trace_iterates=False`` keeps only scalar summaries per record.
    """

    N: int = 1
    policy: StepsizePolicy = field(default_factory=lambda: StepsizePolicy.constant(1.0))
    max_iters: int = 1000
    tol_F: float = 1e-16
    seed: int = 0
    trace_every: int = 1
    gamma: float | None = None
    trace_iterates: bool = True
    check_samples: int = 128

    def __post_init__(self):
        if self.N < 1:
            raise InvalidConfigError("minibatch size must be >= 1")
        if self.max_iters < 1:
            raise InvalidConfigError("max_iters must be >= 1")
        if self.tol_F < 0:
            raise InvalidConfigError("tol_F must be >= 0")
        if self.trace_every < 1:
            raise InvalidConfigError("trace_every must be >= 1")

    def with_seed(self, seed) -> "SolverConfig":
        return replace(self, seed=int(seed))


@dataclass
class IterationTrace:
    """Per-iteration record of a solver run.

    Arrays are aligned on the recorded iteration counters ``k``; the final
    iterate is always recorded.  ``elapsed_ns`` is wall clock and is the
    one field excluded from the bitwise determinism contract.
    """

    k: np.ndarray
    alpha: np.ndarray
    gamma_k: np.ndarray
    F_hat: np.ndarray
    dist: np.ndarray
    err_star: np.ndarray
    elapsed_ns: np.ndarray
    iterates: np.ndarray | None
    x_final: np.ndarray
    status: str
    iterations: int
    algorithm: str
    seed: int

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_csv(self, path):
        """Write the canonical trace CSV: k, alpha, gamma_k, F_hat, dist_exact, elapsed_ns."""

        def cell(v):
            return "" if (isinstance(v, float) and np.isnan(v)) else repr(float(v))

        with open(path, "w") as fh:
            fh.write("k,alpha,gamma_k,F_hat,dist_exact,elapsed_ns\n")
            for i in range(self.k.size):
                row = [
                    str(int(self.k[i])),
                    cell(float(self.alpha[i])),
                    cell(float(self.gamma_k[i])),
                    cell(float(self.F_hat[i])),
                    cell(float(self.dist[i])),
                    str(int(self.elapsed_ns[i])),
                ]
                fh.write(",".join(row) + "\n")


class _TraceBuilder:
    def __init__(self, algorithm, seed, keep_iterates):
        self.rows = {name: [] for name in
                     ("k", "alpha", "gamma_k", "F_hat", "dist", "err_star", "elapsed_ns")}
        self.iterates = [] if keep_iterates else None
        self.algorithm = algorithm
        self.seed = seed
        self.t0 = time.perf_counter_ns()

    def record(self, k, x, alpha, gamma_k, f_hat, problem):
        r = self.rows
        r["k"].append(k)
        r["alpha"].append(alpha)
        r["gamma_k"].append(gamma_k)
        r["F_hat"].append(f_hat)
        oracle = problem.distance_oracle
        r["dist"].append(float(oracle(x)) if oracle is not None else np.nan)
        r["err_star"].append(
            float(np.linalg.norm(x - problem.x_star)) if problem.x_star is not None else np.nan
        )
        r["elapsed_ns"].append(time.perf_counter_ns() - self.t0)
        if self.iterates is not None:
            self.iterates.append(x.copy())

    def build(self, x, status, iterations):
        arrays = {name: np.asarray(vals, dtype=float) for name, vals in self.rows.items()}
        arrays["k"] = arrays["k"].astype(int)
        arrays["elapsed_ns"] = np.asarray(self.rows["elapsed_ns"], dtype=np.int64)
        return IterationTrace(
            k=arrays["k"],
            alpha=arrays["alpha"],
            gamma_k=arrays["gamma_k"],
            F_hat=arrays["F_hat"],
            dist=arrays["dist"],
            err_star=arrays["err_star"],
            elapsed_ns=arrays["elapsed_ns"],
            iterates=np.asarray(self.iterates) if self.iterates is not None else None,
            x_final=x.copy(),
            status=status,
            iterations=iterations,
            algorithm=self.algorithm,
            seed=self.seed,
        )


# ---------------------------------------------------------------------------
# elementary steps

def spa_step(x, sampled_sets, alpha):
    """One relaxation step towards the average of the sampled projections."""
    x = np.asarray(x, dtype=float)
    if not sampled_sets:
        raise InvalidInputError("need at least one sampled set")
    projections = np.stack([s.project(x) for s in sampled_sets])
    return x - alpha * (x - projections.mean(axis=0))


def compute_adaptive_gamma(x, projections, weights):
    """Minibatch alignment ratio ||sum w_i r_i||^2 / sum w_i ||r_i||^2.

    ``r_i = x - projection_i``.  Returns 1.0 when every residual vanishes
    (the iterate is feasible for the whole minibatch).
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise InvalidInputError("adaptive weights must be positive and sum to 1")
    P = np.stack([np.asarray(p, dtype=float) for p in projections])
    if w.size != P.shape[0]:
        raise InvalidInputError("one weight per projection required")
    R = np.asarray(x, dtype=float)[None, :] - P
    den = float(w @ np.einsum("ij,ij->i", R, R))
    if den <= _FEASIBLE_EPS:
        return 1.0
    num = float(np.linalg.norm(w @ R) ** 2)
    return min(max(num / den, 0.0), 1.0)


def _adaptive_weights(policy, sq_norms):
    n = sq_norms.size
    if policy.weights == "residual":
        norms = np.sqrt(sq_norms)
        total = norms.sum()
        if total > 0:
            return norms / total
    return np.full(n, 1.0 / n)


def _confirm_F(problem, x, rng, check_samples):
    """Exact F on finite families, large-sample estimate otherwise."""
    if problem.is_finite:
        p = problem.distribution.weights
        return 0.5 * float(
            sum(w * s.distance(x) ** 2 for w, s in zip(p, problem.sets))
        )
    sets = problem.sample_sets(x, check_samples, rng)
    vals = [float(np.linalg.norm(x - s.project(x)) ** 2) for s in sets]
    return 0.5 * float(np.mean(vals))


# ---------------------------------------------------------------------------
# solver loops

def run_spa(problem, config: SolverConfig, x0=None, rng=None) -> IterationTrace:
    """Minibatch stochastic projection run.

    Terminates when the minibatch estimate of F dips below ``tol_F`` *and*
    an exact (or large-sample) recheck confirms it, or when the iteration
    budget is exhausted.  A lucky all-feasible minibatch leaves the
    iterate unchanged and does not consume a stepsize decision.
    """
    return _run_stochastic(problem, config, x0, rng, algorithm="spa")


def run_sap(problem, config: SolverConfig, x0=None, rng=None) -> IterationTrace:
    """Single-projection (N = 1) stochastic alternating projection run."""
    if config.N != 1:
        config = replace(config, N=1)
    return _run_stochastic(problem, config, x0, rng, algorithm="sap")


def _run_stochastic(problem, config, x0, rng, algorithm):
    gen = as_generator(rng, fallback_seed=config.seed)
    n = problem.dim
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.shape != (n,):
        raise InvalidInputError("x0 has the wrong dimension")
    N = config.N
    policy = config.policy
    policy.validate(config.gamma, N)
    gn_fixed = None
    if policy.kind in ("constant", "optimal"):
        if N == 1:
            gn_fixed = 1.0
        elif config.gamma is not None:
            gn_fixed = gamma_N(config.gamma, N)

    tb = _TraceBuilder(algorithm, config.seed, config.trace_iterates)
    status = "budget-exhausted"
    final_F = None
    k = 0
    while k < config.max_iters:
        sampled = problem.sample_sets(x, N, gen)
        projections = np.stack([s.project(x) for s in sampled])
        residuals = x[None, :] - projections
        sq = np.einsum("ij,ij->i", residuals, residuals)
        f_hat = 0.5 * float(sq.mean())

        if f_hat <= config.tol_F:
            if not problem.is_finite and problem._member is not None:
                # sampled cuts can vanish at the iterate itself; for cut
                # families only the membership oracle is authoritative
                ok = problem.contains(x)
                confirmed = 0.0 if ok else f_hat
            else:
                confirmed = _confirm_F(problem, x, gen, config.check_samples)
                ok = confirmed <= config.tol_F
            if ok:
                status = "converged"
                final_F = confirmed
                break
            if float(sq.max()) <= _FEASIBLE_EPS:
                # lucky minibatch: no update, no stepsize decision
                if k % config.trace_every == 0:
                    tb.record(k, x, np.nan, np.nan, f_hat, problem)
                k += 1
                continue

        if policy.kind == "adaptive":
            w = _adaptive_weights(policy, sq)
            g_k = compute_adaptive_gamma(x, projections, w)
            gn_k = gamma_N(g_k, N)
            alpha = stepsize_for(policy, gn_k, k)
        else:
            g_k = np.nan
            alpha = stepsize_for(policy, gn_fixed if gn_fixed is not None else 1.0, k)

        if k % config.trace_every == 0:
            tb.record(k, x, alpha, g_k, f_hat, problem)

        x = x - alpha * (x - projections.mean(axis=0))
        if not np.all(np.isfinite(x)):
            raise NumericalFailureError(
                f"non-finite iterate at k={k}", trace=tb.build(x, "numerical-failure", k)
            )
        k += 1

    if final_F is None:
        final_F = _confirm_F(problem, x, gen, config.check_samples)
    tb.record(k, x, np.nan, np.nan, final_F, problem)
    return tb.build(x, status, k)


def run_avp(problem, config: SolverConfig, x0=None) -> IterationTrace:
    """Deterministic average projection run (exact expectation gradient).

    The update is ``x <- x - alpha (x - sum_i p_i Pi_i(x))``; the optimal
    stepsize is 1/gamma (the N -> infinity limit of the minibatch rule).
    Uniform weights give the barycentric method.
    """
    if not problem.is_finite:
        raise InvalidInputError("average projection needs a finite family")
    gen = as_generator(None, fallback_seed=config.seed)
    n = problem.dim
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    policy = config.policy
    if policy.kind == "optimal":
        if config.gamma is None:
            raise InvalidConfigError("optimal average-projection stepsize needs gamma")
    elif policy.kind == "constant":
        if not policy.alpha > 0:
            raise InvalidConfigError("constant stepsize must be positive")
        limit = 2.0 / config.gamma if config.gamma is not None else 2.0
        if policy.alpha >= limit:
            raise InvalidConfigError(f"stepsize {policy.alpha} outside (0, {limit})")
    p = problem.distribution.weights
    tb = _TraceBuilder("avp", config.seed, config.trace_iterates)
    status = "budget-exhausted"
    final_F = None
    k = 0
    while k < config.max_iters:
        projections = np.stack([s.project(x) for s in problem.sets])
        residuals = x[None, :] - projections
        sq = np.einsum("ij,ij->i", residuals, residuals)
        f_exact = 0.5 * float(p @ sq)
        if f_exact <= config.tol_F:
            status = "converged"
            final_F = f_exact
            break
        if policy.kind == "adaptive":
            g_k = compute_adaptive_gamma(x, projections, p) if np.all(p > 0) else \
                compute_adaptive_gamma(x, projections, np.full(len(p), 1.0 / len(p)))
            alpha = policy.alpha / max(g_k, 1e-16)
        else:
            g_k = np.nan
            alpha = policy.alpha if policy.kind == "constant" else 1.0 / config.gamma
        if k % config.trace_every == 0:
            tb.record(k, x, alpha, g_k, f_exact, problem)
        x = x - alpha * (x - p @ projections)
        if not np.all(np.isfinite(x)):
            raise NumericalFailureError(
                f"non-finite iterate at k={k}", trace=tb.build(x, "numerical-failure", k)
            )
        k += 1
    if final_F is None:
        final_F = _confirm_F(problem, x, gen, config.check_samples)
    tb.record(k, x, np.nan, np.nan, final_F, problem)
    return tb.build(x, status, k)


def run_bap(problem, order="cyclic", config: SolverConfig | None = None,
            x0=None, rng=None) -> IterationTrace:
    """Basic alternating projection baseline: x <- Pi_{X_k}(x).

    ``order="cyclic"`` walks the finite family in index order;
    ``order="random"`` is exactly the N = 1 stochastic run with alpha = 1
    (same seed, identical trace).
    """
    if config is None:
        config = SolverConfig()
    if order == "random":
        cfg = replace(config, N=1, policy=StepsizePolicy.constant(1.0))
        trace = _run_stochastic(problem, cfg, x0, rng, algorithm="bap")
        return trace
    if order != "cyclic":
        raise InvalidConfigError(f"unknown order {order!r}")
    if not problem.is_finite:
        raise InvalidInputError("cyclic alternating projection needs a finite family")
    gen = as_generator(rng, fallback_seed=config.seed)
    n = problem.dim
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    tb = _TraceBuilder("bap", config.seed, config.trace_iterates)
    status = "budget-exhausted"
    final_F = None
    k = 0
    m = problem.m
    while k < config.max_iters:
        s = problem.sets[k % m]
        proj = s.project(x)
        f_hat = 0.5 * float(np.linalg.norm(x - proj) ** 2)
        if f_hat <= config.tol_F:
            confirmed = _confirm_F(problem, x, gen, config.check_samples)
            if confirmed <= config.tol_F:
                status = "converged"
                final_F = confirmed
                break
        if k % config.trace_every == 0:
            tb.record(k, x, 1.0, np.nan, f_hat, problem)
        x = proj
        if not np.all(np.isfinite(x)):
            raise NumericalFailureError(
                f"non-finite iterate at k={k}", trace=tb.build(x, "numerical-failure", k)
            )
        k += 1
    if final_F is None:
        final_F = _confirm_F(problem, x, gen, config.check_samples)
    tb.record(k, x, np.nan, np.nan, final_F, problem)
    return tb.build(x, status, k)
