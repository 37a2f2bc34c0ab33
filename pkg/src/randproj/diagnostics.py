"""Function evaluators, exact distances, and theorem checks.

``F(x) = 1/2 sum_i p_i dist_{X_i}^2(x)`` is the smooth merit function of a
finite family; its gradient is ``x - sum_i p_i Pi_i(x)``.  The checks
verify, at random probe points, the inequality chains that the
conditioning constants impose on F and on the averaged projection
operator, and ``fit_rates`` compares recorded traces against the
theoretical contraction factors.

Distance oracles come in three flavours with decreasing precision, and
every check result is tagged with the oracle that produced it:
exact affine formula > dual-QP polyhedral projection > long-run average
projection reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditioning import gaussian_probes
from .errors import InconsistentSystemError, InvalidInputError
from .sampling import as_generator

__all__ = [
    "value_F",
    "grad_F",
    "average_projection",
    "affine_projection",
    "exact_distance_affine",
    "polyhedron_projector",
    "project_polyhedron",
    "distance_polyhedron",
    "ReferenceDistance",
    "reference_distance",
    "intersection_projector",
    "TheoremCheckResult",
    "check_sandwich",
    "check_operator_contraction",
    "check_firm_nonexpansive",
    "RateFit",
    "fit_rates",
]

_SLACK_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# F and its gradient

def value_F(x, problem) -> float:
    """Exact F(x) = 1/2 sum_i p_i dist_{X_i}^2(x) on a finite family."""
    if not problem.is_finite:
        raise InvalidInputError("exact F needs a finite family")
    x = np.asarray(x, dtype=float)
    p = problem.distribution.weights
    return 0.5 * float(sum(w * s.distance(x) ** 2 for w, s in zip(p, problem.sets)))


def average_projection(x, problem) -> np.ndarray:
    """The averaged projection sum_i p_i Pi_i(x)."""
    if not problem.is_finite:
        raise InvalidInputError("average projection needs a finite family")
    x = np.asarray(x, dtype=float)
    p = problem.distribution.weights
    return p @ np.stack([s.project(x) for s in problem.sets])


def grad_F(x, problem) -> np.ndarray:
    """Gradient of F: x minus the averaged projection."""
    x = np.asarray(x, dtype=float)
    return x - average_projection(x, problem)


# ---------------------------------------------------------------------------
# distance oracles

def affine_projection(x, A, b, tol=1e-8):
    """Projection of x onto {y : Ay = b}; the system must be consistent."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    r = A @ x - b
    d = np.linalg.lstsq(A, r, rcond=None)[0]
    if np.linalg.norm(A @ d - r) > tol * (1.0 + np.linalg.norm(b) + np.linalg.norm(A @ x)):
        raise InconsistentSystemError("right-hand side is outside the range of A")
    return x - d


def exact_distance_affine(x, A, b) -> float:
    """Exact distance from x to the affine set {y : Ay = b}."""
    return float(np.linalg.norm(np.asarray(x, dtype=float) - affine_projection(x, A, b)))


def polyhedron_projector(A, b, tol=1e-10, max_iters=100000):
    """Factory for projections onto {y : Ay <= b} (dual projected gradient).

    The dual multipliers follow an accelerated projected-gradient loop
    (precomputed Gram matrix and Lipschitz constant).  Periodically the
    active set suggested by the current primal point is polished into an
    exact equality projection, which is accepted only when the full KKT
    system verifies: primal feasibility, multipliers in the span of the
    active normals, and multiplier nonnegativity.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    G = A @ A.T
    L = float(np.linalg.eigvalsh(0.5 * (G + G.T))[-1])
    if L <= 0:
        raise InvalidInputError("zero matrix cannot define a polyhedron oracle")

    def project(x):
        x = np.asarray(x, dtype=float)
        c = A @ x - b
        scale = 1.0 + float(np.linalg.norm(x))
        if np.max(c) <= 0:
            return x
        lam = np.zeros(A.shape[0])
        z = lam
        t = 1.0
        best_y = None
        best_gap = np.inf
        for it in range(1, max_iters + 1):
            lam_new = np.maximum(0.0, z - (G @ z - c) / L)
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = lam_new + ((t - 1.0) / t_new) * (lam_new - lam)
            lam, t = lam_new, t_new
            if it % 25 == 0 or it == max_iters:
                y = x - A.T @ lam
                res = A @ y - b
                feas_err = float(np.max(res))
                gap = float(lam @ np.maximum(b - A @ y, 0.0)) + max(feas_err, 0.0)
                if feas_err <= tol * scale and gap < best_gap:
                    best_gap, best_y = gap, y
                polished = _active_set_polish(x, A, b, res, lam, scale)
                if polished is not None:
                    return polished
                if feas_err <= tol * scale and gap <= (tol * scale) ** 2:
                    return y
        return best_y if best_y is not None else x - A.T @ lam

    return project


def _active_set_polish(x, A, b, res, lam, scale):
    """Exact projection on a candidate active set, KKT-verified or rejected."""
    lam_floor = 1e-8 * max(float(lam.max(initial=0.0)), 1.0)
    candidates = [res >= -thr * scale for thr in (1e-10, 1e-7, 1e-5)]
    candidates.append((lam > lam_floor) | (res >= -1e-9 * scale))
    tried = set()
    for active in candidates:
        key = active.tobytes()
        if key in tried or not np.any(active):
            continue
        tried.add(key)
        AJ = A[active]
        d = np.linalg.lstsq(AJ, AJ @ x - b[active], rcond=None)[0]
        y = x - d
        if np.max(A @ y - b) > 1e-9 * scale:
            continue
        lam_j, *_ = np.linalg.lstsq(AJ.T, x - y, rcond=None)[:1]
        if np.linalg.norm(AJ.T @ lam_j - (x - y)) > 1e-9 * scale:
            continue  # correction not in the active-normal span
        if np.min(lam_j, initial=0.0) < -1e-9 * scale:
            continue
        return y
    return None


def project_polyhedron(x, A, b, tol=1e-11):
    """One-shot projection onto {y : Ay <= b}."""
    return polyhedron_projector(A, b, tol=tol)(x)


def distance_polyhedron(x, A, b, tol=1e-11) -> float:
    """Distance from x to {y : Ay <= b}."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - project_polyhedron(x, A, b, tol=tol)))


@dataclass(frozen=True)
class ReferenceDistance:
    """High-accuracy distance estimate with its residual merit value."""

    distance: float
    residual_F: float
    converged: bool


def reference_distance(x, problem, target_F=1e-24, max_iters=200000,
                       gamma=None) -> ReferenceDistance:
    """Over-approximation of dist_X(x) by a long deterministic run.

    Runs the average projection iteration from x until F falls below
    ``target_F`` and returns the distance to the final point.  When the
    budget runs out first the estimate is returned with
    ``converged=False``.
    """
    from .solvers import SolverConfig, StepsizePolicy, run_avp

    x = np.asarray(x, dtype=float)
    policy = StepsizePolicy.optimal() if gamma is not None else StepsizePolicy.constant(1.0)
    cfg = SolverConfig(N=1, policy=policy, max_iters=max_iters, tol_F=target_F,
                       trace_every=max_iters, trace_iterates=False, gamma=gamma)
    trace = run_avp(problem, cfg, x0=x)
    if not trace.converged:
        import warnings

        warnings.warn(
            f"reference distance budget exhausted at residual F={trace.F_hat[-1]:.3e}; "
            "returning the estimate")
    return ReferenceDistance(
        distance=float(np.linalg.norm(x - trace.x_final)),
        residual_F=float(trace.F_hat[-1]),
        converged=trace.converged,
    )


def intersection_projector(problem):
    """Best available projector onto the intersection, with an oracle tag.

    Precedence: a projector supplied by the problem itself, then the exact
    affine formula for linear-equality families, the dual-QP polyhedral
    projector for inequality families, and finally the long-run average
    projection reference.
    """
    if problem.projection_oracle is not None:
        return problem.projection_oracle, "problem-supplied"
    meta = problem.meta or {}
    kind = meta.get("kind")
    if kind == "linear-equality":
        A, b = meta["A"], meta["b"]
        return (lambda x: affine_projection(x, A, b)), "affine-exact"
    if kind in ("linear-inequality", "halfspace-list"):
        return polyhedron_projector(meta["A"], meta["b"]), "qp-dual"
    gamma = meta.get("gamma")

    def proj(x, _problem=problem, _gamma=gamma):
        from .solvers import SolverConfig, StepsizePolicy, run_avp

        policy = StepsizePolicy.optimal() if _gamma is not None else StepsizePolicy.constant(1.0)
        cfg = SolverConfig(N=1, policy=policy, max_iters=20000, tol_F=1e-24,
                           trace_every=20000, trace_iterates=False, gamma=_gamma)
        return run_avp(_problem, cfg, x0=np.asarray(x, dtype=float)).x_final

    return proj, "avp-reference"


# ---------------------------------------------------------------------------
# theorem checks

@dataclass
class TheoremCheckResult:
    """Outcome of a probe-based inequality check.

    ``worst_slack`` is the most negative normalized slack seen over all
    probes and inequality sides; the check holds iff it stays above the
    negated tolerance.
    """

    name: str
    holds: bool
    worst_slack: float
    probe_count: int
    tolerance: float
    oracle: str | None = None

    def __repr__(self):
        flag = "PASS" if self.holds else "FAIL"
        return (f"TheoremCheckResult({self.name}: {flag}, worst_slack="
                f"{self.worst_slack:.3e}, probes={self.probe_count})")


def _slack(lhs, rhs):
    # normalized slack of "lhs <= rhs"
    return (rhs - lhs) / max(abs(lhs), abs(rhs), _SLACK_FLOOR)


def _resolve_probes(problem, probes, probe_count, rng):
    if probes is not None:
        return np.atleast_2d(np.asarray(probes, dtype=float))
    center = problem.x_star if problem.x_star is not None else np.zeros(problem.dim)
    return gaussian_probes(center, probe_count, as_generator(rng))


def check_sandwich(problem, kappa, gamma, probes=None, probe_count=100,
                   rng=None, tol=1e-8) -> TheoremCheckResult:
    """Two-sided growth/smoothness chains linking F, dist_X and grad F.

    At every probe: ``dist^2/(2 kappa) <= F <= (gamma/2) dist^2`` and the
    dual chain ``||grad F||^2/(2 gamma) <= F <= (kappa/2) ||grad F||^2``.
    """
    projector, tag = intersection_projector(problem)
    pts = _resolve_probes(problem, probes, probe_count, rng)
    worst = np.inf
    for x in pts:
        d2 = float(np.linalg.norm(x - projector(x)) ** 2)
        f = value_F(x, problem)
        g2 = float(np.linalg.norm(grad_F(x, problem)) ** 2)
        slacks = (
            _slack(d2 / (2.0 * kappa), f),
            _slack(f, 0.5 * gamma * d2),
            _slack(g2 / (2.0 * gamma), f),
            _slack(f, 0.5 * kappa * g2),
        )
        worst = min(worst, *slacks)
    return TheoremCheckResult("sandwich", worst >= -tol, float(worst), len(pts), tol, tag)


def check_operator_contraction(problem, kappa, gamma, probes=None,
                               probe_count=100, rng=None, tol=1e-8) -> TheoremCheckResult:
    """Contraction window of the averaged projection along x -> Pi_X(x).

    ``(1 - gamma) ||x - x*||^2 <= <Pi(x) - Pi(x*), x - x*> <=
    (1 - 1/kappa) ||x - x*||^2`` with x* the projection of x onto the
    intersection.
    """
    projector, tag = intersection_projector(problem)
    pts = _resolve_probes(problem, probes, probe_count, rng)
    worst = np.inf
    for x in pts:
        xs = projector(x)
        nrm2 = float(np.linalg.norm(x - xs) ** 2)
        mid = float((average_projection(x, problem) - average_projection(xs, problem))
                    @ (x - xs))
        worst = min(
            worst,
            _slack((1.0 - gamma) * nrm2, mid),
            _slack(mid, (1.0 - 1.0 / kappa) * nrm2),
        )
    return TheoremCheckResult("operator-contraction", worst >= -tol, float(worst),
                              len(pts), tol, tag)


def check_firm_nonexpansive(problem, probes=None, probe_count=100, rng=None,
                            tol=1e-10) -> TheoremCheckResult:
    """Firm nonexpansiveness of the averaged projection on probe pairs."""
    pts = _resolve_probes(problem, probes, 2 * probe_count, rng)
    if len(pts) < 2:
        raise InvalidInputError("need at least two probes")
    worst = np.inf
    pairs = 0
    for i in range(0, len(pts) - 1, 2):
        x, y = pts[i], pts[i + 1]
        px = average_projection(x, problem)
        py = average_projection(y, problem)
        worst = min(worst, _slack(float(np.linalg.norm(px - py) ** 2),
                                  float((px - py) @ (x - y))))
        pairs += 1
    return TheoremCheckResult("firm-nonexpansive", worst >= -tol, float(worst), pairs, tol)


# ---------------------------------------------------------------------------
# rate fitting

@dataclass
class RateFit:
    """Empirical contraction factors of a run against the theoretical bound.

    For a single trace the factors are consecutive-record ratios of
    squared distances; for an ensemble they are per-seed ratios averaged
    at each recorded step, with the bound honoured when the mean stays
    within three standard errors of it.  The sublinear part tracks the
    merit value of the running averaged iterate against its 1/k bound.
    """

    ks: np.ndarray
    step_factors: np.ndarray
    stderr: np.ndarray | None
    geometric_mean: float
    theoretical_factor: float
    bound_respected: bool
    sublinear_ks: np.ndarray | None
    sublinear_values: np.ndarray | None
    sublinear_bound: np.ndarray | None
    sublinear_respected: bool | None
    source: str


def _trace_distances(trace):
    if np.all(np.isnan(trace.dist)):
        return trace.F_hat, "F-converted"
    return trace.dist**2, "distance"


def fit_rates(trace, kappa, gamma_n, delta_step, problem=None) -> RateFit:
    """Fit per-step contraction factors and compare with 1 - delta^2 gamma_N / kappa.

    ``trace`` is a single run or a list of runs on a common recording
    grid.  With the optimal stepsize pass ``delta_step = 1/gamma_N`` so
    the bound reduces to ``1 - 1/(gamma_N kappa)``.  Traces without a
    distance column fall back to merit-value ratios (tagged F-converted).
    When ``problem`` is given and iterates were recorded, the averaged
    iterate is checked against the sublinear merit bound.
    """
    rho = 1.0 - (delta_step**2) * gamma_n / kappa
    traces = trace if isinstance(trace, (list, tuple)) else [trace]
    if not traces:
        raise InvalidInputError("need at least one trace")
    ks = traces[0].k
    gaps = np.diff(ks)
    if np.any(gaps <= 0):
        raise InvalidInputError("trace records must be strictly increasing in k")

    if len(traces) == 1:
        d2, source = _trace_distances(traces[0])
        valid = d2[:-1] > 1e-280
        factors = np.where(valid, d2[1:] / np.where(valid, d2[:-1], 1.0), np.nan)
        stderr = None
        bounds = rho**gaps
        with np.errstate(invalid="ignore"):
            ok = np.all((factors <= bounds * (1 + 1e-10) + 1e-12) | np.isnan(factors))
    else:
        mats = []
        source = "distance"
        for t in traces:
            if not np.array_equal(t.k, ks):
                raise InvalidInputError("ensemble traces must share the record grid")
            d2, source = _trace_distances(t)
            mats.append(d2)
        D = np.stack(mats)  # (seeds, records)
        with np.errstate(invalid="ignore", divide="ignore"):
            R = np.where(D[:, :-1] > 1e-280, D[:, 1:] / D[:, :-1], np.nan)
        factors = np.nanmean(R, axis=0)
        counts = np.sum(~np.isnan(R), axis=0)
        stderr = np.nanstd(R, axis=0, ddof=1) / np.sqrt(np.maximum(counts, 1))
        bounds = rho**gaps
        ok = np.all(factors <= bounds + 3.0 * stderr + 1e-12)

    finite = factors[np.isfinite(factors)]
    if finite.size == 0:
        geo = np.nan
    elif np.any(finite <= 0.0):
        geo = 0.0
    else:
        geo = float(np.exp(np.mean(np.log(finite))))

    sub_ks = sub_vals = sub_bound = None
    sub_ok = None
    first = traces[0]
    if problem is not None and len(traces) == 1 and first.iterates is not None \
            and np.all(gaps == 1):
        # iterations without a stepsize decision (all-feasible minibatch)
        # carry zero weight in the averaged iterate
        alphas = np.where(np.isfinite(first.alpha[:-1]), first.alpha[:-1], 0.0)
        d0 = first.dist[0] ** 2 if np.isfinite(first.dist[0]) else None
        if d0 is not None and alphas.size > 0 and alphas.sum() > 0:
            wsum = np.cumsum(alphas)
            keep = wsum > 0
            avg = np.cumsum(alphas[:, None] * first.iterates[:-1], axis=0)[keep] \
                / wsum[keep, None]
            sub_ks = first.k[1:][keep]
            sub_vals = np.array([value_F(a, problem) for a in avg])
            sub_bound = d0 / (2.0 * delta_step * gamma_n * wsum[keep])
            sub_ok = bool(np.all(sub_vals <= sub_bound * (1 + 1e-10) + 1e-300))

    return RateFit(
        ks=ks[1:],
        step_factors=factors,
        stderr=stderr,
        geometric_mean=geo,
        theoretical_factor=float(rho),
        bound_respected=bool(ok),
        sublinear_ks=sub_ks,
        sublinear_values=sub_vals,
        sublinear_bound=sub_bound,
        sublinear_respected=sub_ok,
        source=source,
    )
