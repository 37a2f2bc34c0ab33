"""Conditioning constants of a feasibility problem.

Two spectral constants drive every rate in the package: ``gamma``, the
smallest constant with ``||E[x - Pi_S x]||^2 <= gamma * E[||x - Pi_S x||^2]``
(always <= 1 by Jensen), and ``kappa``, the linear-regularity constant with
``dist_X^2(x) <= kappa * E[dist_{X_S}^2(x)]`` (always >= 1).  Their product
is the condition number of the problem; the minibatch-effective constant
``gamma_N = 1/N + (1 - 1/N) gamma`` controls stepsizes.

For sketched linear systems both constants are eigenvalues of
``A^T E[S (S^T A A^T S)^+ S^T] A``; the expectation matrix is assembled
exactly by weighted summation over the finite sketch family.  For families
without closed forms, empirical estimators return certified lower bounds
(maxima of the defining ratios over probe points).

A finite family of m sets that is regular in the max sense,
``dist_X^2 <= kappa_max * max_i dist_i^2``, satisfies the expectation
version above with ``kappa <= m * kappa_max`` under uniform weights; only
this relation is recorded here, kappa_max itself is never computed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EstimateUndefinedError,
    InvalidInputError,
    NoRegularityError,
)
from .sampling import SketchSampler, as_generator
from .sets import rank_cutoff

__all__ = [
    "ConditioningReport",
    "HalfspaceKappaBounds",
    "expectation_matrix",
    "gamma_linear_system",
    "gamma_linear_inequalities",
    "kappa_linear_system",
    "kappa_halfspaces",
    "kappa_interior_ball",
    "gamma_N",
    "gaussian_probes",
    "estimate_gamma_empirical",
    "estimate_kappa_empirical",
    "estimate_hoffman",
    "report_for_problem",
]

_EPS = np.finfo(float).eps

#: probe radii relative to problem scale, per the estimator contract
PROBE_RADII = (0.1, 1.0, 10.0)


# ---------------------------------------------------------------------------
# exact spectral constants

def expectation_matrix(A, sampler: SketchSampler) -> np.ndarray:
    """E[S (S^T A A^T S)^+ S^T], assembled exactly over the finite family."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidInputError("A must be a 2-D matrix")
    if len(sampler) == 0:
        raise InvalidInputError("empty sketch family")
    m = A.shape[0]
    G = A @ A.T
    E = np.zeros((m, m))
    for p, S in sampler:
        if p == 0.0:
            continue
        S2 = S[:, None] if S.ndim == 1 else S
        if S2.shape[0] != m:
            raise InvalidInputError("sketch row count must match the system")
        M = S2.T @ G @ S2
        q = M.shape[0]
        E += p * (S2 @ np.linalg.pinv(M, rcond=max(m, q) * _EPS) @ S2.T)
    return E


def _spectrum(A, sampler):
    W = A.T @ expectation_matrix(A, sampler) @ np.asarray(A, dtype=float)
    W = 0.5 * (W + W.T)
    return np.linalg.eigvalsh(W)


def gamma_linear_system(A, sampler: SketchSampler) -> float:
    """gamma = lambda_max(A^T E[S (S^T A A^T S)^+ S^T] A) for {x : Ax = b}."""
    A = np.asarray(A, dtype=float)
    return float(_spectrum(A, sampler)[-1])


def gamma_linear_inequalities(A, sampler: SketchSampler) -> float:
    """Same spectral formula for {x : Ax <= b} with nonnegative vector sketches."""
    A = np.asarray(A, dtype=float)
    for _, S in sampler:
        if S.ndim != 1 and not (S.ndim == 2 and S.shape[1] == 1):
            raise InvalidInputError("inequality sketches must be vectors")
        if np.any(S < 0):
            raise InvalidInputError("inequality sketches must be nonnegative")
    return float(_spectrum(A, sampler)[-1])


def kappa_linear_system(A, sampler: SketchSampler) -> float:
    """kappa = 1 / lambda_min^nz(A^T E[S (S^T A A^T S)^+ S^T] A).

    The nonzero-eigenvalue cutoff is shared with the projection oracles'
    pseudoinverse cutoff so that kappa and the projections agree on rank.
    """
    A = np.asarray(A, dtype=float)
    eigs = _spectrum(A, sampler)
    cut = rank_cutoff(eigs, (A.shape[1], A.shape[1]))
    nz = eigs[eigs > cut]
    if nz.size == 0:
        raise NoRegularityError("expectation matrix has no usable spectrum")
    return float(1.0 / nz[0])


@dataclass(frozen=True)
class HalfspaceKappaBounds:
    """Regularity bounds for halfspace families, scaled by a Hoffman constant.

    ``general`` is valid for any weights; ``norm_weighted`` is the sharper
    value that applies when p_S is proportional to ||A^T S||^2.
    """

    general: float
    norm_weighted: float
    norm_weighting_applies: bool
    hoffman: float

    @property
    def best(self) -> float:
        return self.norm_weighted if self.norm_weighting_applies else self.general


def kappa_halfspaces(A, sampler: SketchSampler, hoffman: float) -> HalfspaceKappaBounds:
    """Both regularity bounds for {x : Ax <= b} under aggregate sketches."""
    A = np.asarray(A, dtype=float)
    if not hoffman > 0:
        raise InvalidInputError("Hoffman constant must be positive")
    norms_sq = np.array([float(np.linalg.norm(A.T @ S) ** 2) for _, S in sampler])
    p = sampler.distribution.weights
    if np.any(p == 0.0):
        warnings.warn("zero-probability sketch: general kappa bound is infinite")
        general = np.inf
    else:
        general = float(norms_sq.max() / p.min() * hoffman)
    norm_weighted = float(hoffman * norms_sq.sum())
    applies = bool(
        norms_sq.sum() > 0 and np.allclose(p, norms_sq / norms_sq.sum(), atol=1e-12)
    )
    return HalfspaceKappaBounds(general, norm_weighted, applies, float(hoffman))


def kappa_interior_ball(anchor, ball_radius, x0, min_p) -> float:
    """Regularity constant ||x0 - anchor||^2 / (radius^2 * min_p).

    Valid over the ball of radius ||x0 - anchor|| around the anchor, which
    contains every iterate of a monotone run started at x0; the constant is
    therefore trajectory-dependent.  A degenerate start x0 = anchor is
    clamped to 1.
    """
    if not ball_radius > 0:
        raise InvalidInputError("interior ball radius must be positive")
    if not min_p > 0:
        return np.inf
    r2 = float(np.linalg.norm(np.asarray(x0, dtype=float) - np.asarray(anchor, dtype=float)) ** 2)
    if r2 == 0.0:
        warnings.warn("x0 coincides with the ball center; returning the trivial constant 1")
        return 1.0
    return r2 / (float(ball_radius) ** 2 * float(min_p))


def gamma_N(gamma: float, N: int) -> float:
    """Minibatch-effective constant 1/N + (1 - 1/N) * gamma."""
    if N < 1:
        raise InvalidInputError("minibatch size must be >= 1")
    if not (0.0 <= gamma <= 1.0 + 1e-10):
        raise InvalidInputError(f"gamma must lie in [0, 1], got {gamma!r}")
    return 1.0 / N + (1.0 - 1.0 / N) * float(gamma)


# ---------------------------------------------------------------------------
# empirical (Monte-Carlo) estimators

def gaussian_probes(center, count, rng, scale=None, radii=PROBE_RADII):
    """Gaussian probe points around a center, cycling through three radii."""
    center = np.asarray(center, dtype=float)
    gen = as_generator(rng)
    if scale is None:
        scale = 1.0 + float(np.linalg.norm(center))
    out = np.empty((count, center.size))
    for j in range(count):
        r = radii[j % len(radii)] * scale
        out[j] = center + r * gen.standard_normal(center.size)
    return out


def _default_probes(problem, count, rng):
    center = problem.x_star if problem.x_star is not None else np.zeros(problem.dim)
    return gaussian_probes(center, count, rng)


def estimate_gamma_empirical(problem, probe_count=300, rng=None, probes=None) -> float:
    """Lower bound on gamma: max over probes of the defining ratio.

    The inner expectations are computed exactly over the finite family;
    probes landing in every sampled set (0/0) are skipped.
    """
    if not problem.is_finite:
        raise InvalidInputError("empirical gamma needs a finite family")
    if probes is None:
        probes = _default_probes(problem, probe_count, rng)
    p = problem.distribution.weights
    best = 0.0
    used = 0
    for x in np.atleast_2d(np.asarray(probes, dtype=float)):
        residuals = np.array([x - s.project(x) for s in problem.sets])
        den = float(p @ np.einsum("ij,ij->i", residuals, residuals))
        if den <= 1e-300:
            continue
        num = float(np.linalg.norm(p @ residuals) ** 2)
        best = max(best, num / den)
        used += 1
    if used == 0:
        raise EstimateUndefinedError("all probes were feasible; gamma ratio undefined")
    return best


def estimate_kappa_empirical(problem, probe_count=300, distance_oracle=None,
                             rng=None, probes=None) -> float:
    """Lower bound on kappa: max over probes of dist_X^2 / E[dist_{X_S}^2]."""
    if not problem.is_finite:
        raise InvalidInputError("empirical kappa needs a finite family")
    dist = distance_oracle if distance_oracle is not None else problem.distance_oracle
    if dist is None:
        raise InvalidInputError("no distance oracle available for this problem")
    if probes is None:
        probes = _default_probes(problem, probe_count, rng)
    p = problem.distribution.weights
    best = 0.0
    used = 0
    for x in np.atleast_2d(np.asarray(probes, dtype=float)):
        den = float(sum(w * s.distance(x) ** 2 for w, s in zip(p, problem.sets)))
        if den <= 1e-300:
            continue  # probe feasible for every sampled set
        best = max(best, float(dist(x)) ** 2 / den)
        used += 1
    if used == 0:
        raise EstimateUndefinedError("all probes were feasible; kappa ratio undefined")
    return best


def estimate_hoffman(A, b, sampler: SketchSampler | None = None, probes=None,
                     probe_count=300, rng=None, distance=None) -> float:
    """Lower bound on the Hoffman constant of {x : Ax <= b}.

    Ratio maximised over infeasible probes:
    ``dist_X^2(x) / max_S max(0, S^T A x - S^T b)^2``.  Feasible probes are
    skipped; if every probe is feasible the estimate is undefined.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m = A.shape[0]
    if sampler is None:
        sampler = SketchSampler.coordinate(m, np.full(m, 1.0 / m))
    if distance is None:
        from .diagnostics import polyhedron_projector

        proj = polyhedron_projector(A, b)
        distance = lambda x: float(np.linalg.norm(x - proj(x)))  # noqa: E731
    if probes is None:
        # center on a feasible point when the origin qualifies, else on a
        # least-squares interior guess
        center = np.zeros(A.shape[1])
        if np.any(A @ center - b > 0):
            center = np.linalg.lstsq(A, b - 1.0, rcond=None)[0]
        probes = gaussian_probes(center, probe_count, rng)
    sketch_mat = np.stack([S if S.ndim == 1 else S[:, 0] for _, S in sampler])
    best = 0.0
    used = 0
    for x in np.atleast_2d(np.asarray(probes, dtype=float)):
        viol = np.maximum(0.0, sketch_mat @ (A @ x - b))
        worst = float(np.max(viol))
        if worst <= 0.0:
            continue
        best = max(best, float(distance(x)) ** 2 / worst**2)
        used += 1
    if used == 0:
        raise EstimateUndefinedError("all probes satisfied the system; no ratio available")
    return best


# ---------------------------------------------------------------------------
# report

@dataclass
class ConditioningReport:
    """gamma, kappa, gamma_N and their product, with provenance.

    ``method`` records how the constants were obtained: ``closed-form``
    (exact spectral formulas), ``monte-carlo-estimate`` (probe maxima,
    certified lower bounds) or ``user-supplied-hoffman``.
    """

    gamma: float
    kappa: float
    gamma_n: float
    condition_number: float
    method: str
    minibatch_size: int = 1
    sample_count: int | None = None
    hoffman: float | None = None
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.gamma > 1.0 + 1e-10:
            raise InvalidInputError(f"gamma exceeds 1: {self.gamma!r}")
        if self.kappa < 1.0 - 1e-10:
            raise InvalidInputError(f"kappa below 1: {self.kappa!r}")
        if self.condition_number < 1.0 - 1e-8:
            raise InvalidInputError(
                f"condition number kappa*gamma below 1: {self.condition_number!r}"
            )

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "kappa": self.kappa,
            "gamma_n": self.gamma_n,
            "condition_number": self.condition_number,
            "method": self.method,
            "minibatch_size": self.minibatch_size,
            "sample_count": self.sample_count,
            "hoffman": self.hoffman,
            "notes": list(self.notes),
        }

    def as_text(self) -> str:
        lines = [f"{k}={v}" for k, v in self.as_dict().items() if k != "notes"]
        lines += [f"note={n}" for n in self.notes]
        return "\n".join(lines)


def report_for_problem(problem, N=1, rng=None, probe_count=300,
                       hoffman=None) -> ConditioningReport:
    """Conditioning report for a finite-family problem.

    Linear kinds get closed forms (coordinate sketches with the problem's
    own weights); inequality kinds additionally need a Hoffman constant,
    estimated when not supplied.  Everything else falls back to the
    empirical estimators over a common probe set.
    """
    if not problem.is_finite:
        raise InvalidInputError("conditioning reports need a finite family")
    meta = problem.meta or {}
    kind = meta.get("kind")
    notes = []
    if kind == "linear-equality":
        A = meta["A"]
        sampler = SketchSampler.coordinate(A.shape[0], problem.distribution)
        gamma = gamma_linear_system(A, sampler)
        kappa = kappa_linear_system(A, sampler)
        method = "closed-form"
        sample_count = None
    elif kind in ("linear-inequality", "halfspace-list"):
        A = meta["A"]
        b = meta["b"]
        sampler = SketchSampler.coordinate(A.shape[0], problem.distribution)
        gamma = gamma_linear_inequalities(A, sampler)
        if hoffman is None:
            hoffman = estimate_hoffman(A, b, sampler, probe_count=probe_count, rng=rng)
            method = "monte-carlo-estimate"
            sample_count = probe_count
            notes.append("hoffman constant estimated from probes (lower bound)")
        else:
            method = "user-supplied-hoffman"
            sample_count = None
        bounds = kappa_halfspaces(A, sampler, hoffman)
        kappa = bounds.best
        notes.append(
            "norm-proportional kappa bound applies"
            if bounds.norm_weighting_applies
            else "general kappa bound used"
        )
    else:
        probes = _default_probes(problem, probe_count, rng)
        gamma = estimate_gamma_empirical(problem, probes=probes)
        dist = problem.distance_oracle
        kappa_probes = probes
        if dist is None:
            # fall back on the reference projector; cap the probe count since
            # each distance evaluation is a solver run
            from .diagnostics import intersection_projector

            projector, _ = intersection_projector(problem)
            dist = lambda x: float(np.linalg.norm(np.asarray(x, float) - projector(x)))  # noqa: E731
            kappa_probes = probes[: min(len(probes), 60)]
            notes.append("kappa estimated with reference-projection distances")
        kappa = estimate_kappa_empirical(problem, probes=kappa_probes,
                                         distance_oracle=dist)
        method = "monte-carlo-estimate"
        sample_count = probe_count
    gn = gamma_N(min(gamma, 1.0), N)
    return ConditioningReport(
        gamma=gamma,
        kappa=kappa,
        gamma_n=gn,
        condition_number=kappa * gamma,
        method=method,
        minibatch_size=N,
        sample_count=sample_count,
        hoffman=hoffman,
        notes=tuple(notes),
    )
