"""Closed-form projection and membership oracles for the supported set families.

Every oracle is immutable after construction and its ``project`` is a pure
function of ``(x, set)``, so instances can be shared freely.  Membership is
scale-relative: a point is accepted when the violation is at most
``tol * (1 + ||x||)``.

The pseudoinverse rank cutoff used by the sketched sets (singular values
below ``max(shape) * eps * sigma_max`` count as zero) is exposed here and
reused by the conditioning module so that projections and the regularity
constants agree on rank.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DegenerateCutError,
    InfeasibleAggregateError,
    InvalidInputError,
    InvalidSetError,
)

__all__ = [
    "MEMBERSHIP_TOL",
    "ZERO_TOL",
    "rank_cutoff",
    "WholeSpace",
    "Hyperplane",
    "Halfspace",
    "SketchedEqualitySet",
    "SketchedHalfspace",
    "Ball",
    "Box",
    "AbsPowerEpigraph",
    "SeparationOracleSet",
    "SplitFeasibilityFamily",
    "NormalConeFamily",
    "project_hyperplane",
    "project_halfspace",
    "project_sketched_equality",
    "project_sketched_halfspace",
    "project_ball",
    "project_box",
    "supporting_halfspace",
    "separation_cut",
]

#: default scale-relative membership tolerance
MEMBERSHIP_TOL = 1e-9

#: vectors with norm below this are treated as zero normals
ZERO_TOL = 1e-14

_EPS = np.finfo(float).eps


def rank_cutoff(values, shape) -> float:
    """Threshold under which spectral values count as zero.

    Standard rank-revealing convention: ``max(shape) * eps * max(values)``.
    ``values`` are singular values or eigenvalues of a PSD matrix.
    """
    values = np.asarray(values, dtype=float)
    top = float(values.max(initial=0.0))
    return max(shape) * _EPS * top


def _vec(x, n=None, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError(f"{name} must be a 1-D vector, got shape {x.shape}")
    if n is not None and x.size != n:
        raise InvalidInputError(f"{name} has length {x.size}, expected {n}")
    return x


def _scale(x) -> float:
    return 1.0 + float(np.linalg.norm(x))


class WholeSpace:
    """The whole space R^n: projection is the identity.

    Returned by the cut families when the probe point already belongs to
    the target set; keeping it as an explicit variant avoids degenerate
    halfspaces with zero normals.
    """

    def __init__(self, dim=None):
        self.dim = dim

    def project(self, x):
        return np.asarray(x, dtype=float)

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        return True

    def distance(self, x) -> float:
        return 0.0

    def __repr__(self):
        return f"WholeSpace(dim={self.dim})"


class Hyperplane:
    """{x : a^T x = b} with a nonzero normal a."""

    def __init__(self, normal, offset):
        a = _vec(normal, name="normal")
        sq = float(a @ a)
        if not np.isfinite(sq) or sq <= ZERO_TOL**2:
            raise InvalidSetError("hyperplane normal is (numerically) zero")
        self.normal = a
        self.normal.setflags(write=False)
        self.offset = float(offset)
        self._sq = sq

    @property
    def dim(self):
        return self.normal.size

    def residual(self, x) -> float:
        return float(self.normal @ np.asarray(x, dtype=float) - self.offset)

    def project(self, x):
        x = _vec(x, self.dim)
        return x - (self.residual(x) / self._sq) * self.normal

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        x = _vec(x, self.dim)
        return abs(self.residual(x)) / np.sqrt(self._sq) <= tol * _scale(x)

    def distance(self, x) -> float:
        return abs(self.residual(x)) / np.sqrt(self._sq)

    def __repr__(self):
        return f"Hyperplane(normal={self.normal}, offset={self.offset})"


class Halfspace:
    """{x : a^T x <= b} with a nonzero normal a."""

    def __init__(self, normal, offset):
        a = _vec(normal, name="normal")
        sq = float(a @ a)
        if not np.isfinite(sq) or sq <= ZERO_TOL**2:
            raise InvalidSetError("halfspace normal is (numerically) zero")
        self.normal = a
        self.normal.setflags(write=False)
        self.offset = float(offset)
        self._sq = sq

    @property
    def dim(self):
        return self.normal.size

    def violation(self, x) -> float:
        """max(0, a^T x - b), the positive part of the residual."""
        return max(0.0, float(self.normal @ np.asarray(x, dtype=float) - self.offset))

    def project(self, x):
        x = _vec(x, self.dim)
        v = self.violation(x)
        if v == 0.0:
            return x
        return x - (v / self._sq) * self.normal

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        x = _vec(x, self.dim)
        return self.violation(x) / np.sqrt(self._sq) <= tol * _scale(x)

    def distance(self, x) -> float:
        return self.violation(x) / np.sqrt(self._sq)

    def __repr__(self):
        return f"Halfspace(normal={self.normal}, offset={self.offset})"


class SketchedEqualitySet:
    """{x : S^T A x = S^T b} for a sketch S of the system Ax = b.

    The projection is ``x - A^T S (S^T A A^T S)^+ S^T (A x - b)``; the
    pseudoinverse is precomputed once with the shared rank cutoff, so
    rank-deficient sketches (duplicated columns etc.) are handled.
    """

    def __init__(self, A, b, sketch):
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 2:
            raise InvalidInputError("system matrix must be 2-D")
        m, n = self.A.shape
        self.b = _vec(b, m, name="b")
        S = np.asarray(sketch, dtype=float)
        if S.ndim == 1:
            S = S[:, None]
        if S.shape[0] != m:
            raise InvalidInputError("sketch row count must match the system")
        self.sketch = S
        self._AtS = self.A.T @ S  # (n, q)
        if np.linalg.norm(self._AtS) <= ZERO_TOL:
            raise InvalidSetError(
                "S^T A is zero: the sketched set is the whole space; use WholeSpace"
            )
        M = S.T @ (self.A @ self.A.T) @ S
        q = M.shape[0]
        self._pinv = np.linalg.pinv(M, rcond=max(m, q) * _EPS)
        self._Stb = S.T @ self.b

    @property
    def dim(self):
        return self.A.shape[1]

    def project(self, x):
        x = _vec(x, self.dim)
        r = self.sketch.T @ (self.A @ x) - self._Stb
        return x - self._AtS @ (self._pinv @ r)

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        x = _vec(x, self.dim)
        r = self.sketch.T @ (self.A @ x) - self._Stb
        colnorms = np.linalg.norm(self._AtS, axis=0)
        return bool(np.all(np.abs(r) <= tol * _scale(x) * (1.0 + colnorms)))

    def distance(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.project(x)))


class SketchedHalfspace:
    """{x : S^T A x <= S^T b} for a nonnegative aggregation vector S.

    A zero aggregate normal A^T S is tolerated at projection time: the set
    is then either the whole space (S^T b >= 0) or empty, in which case an
    :class:`InfeasibleAggregateError` is raised.
    """

    def __init__(self, A, b, sketch):
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 2:
            raise InvalidInputError("system matrix must be 2-D")
        m, n = self.A.shape
        self.b = _vec(b, m, name="b")
        S = _vec(sketch, m, name="sketch")
        if np.any(S < 0):
            raise InvalidSetError("inequality sketch must be nonnegative")
        self.sketch = S
        self._c = self.A.T @ S
        self._sq = float(self._c @ self._c)
        self._Stb = float(S @ self.b)

    @property
    def dim(self):
        return self.A.shape[1]

    def violation(self, x) -> float:
        return max(0.0, float(self.sketch @ (self.A @ np.asarray(x, dtype=float)) - self._Stb))

    def project(self, x):
        x = _vec(x, self.dim)
        if self._sq <= ZERO_TOL**2:
            if self._Stb < 0:
                raise InfeasibleAggregateError(
                    "aggregated inequality reduces to 0 <= negative constant"
                )
            return x  # whole space
        v = self.violation(x)
        if v == 0.0:
            return x
        return x - (v / self._sq) * self._c

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        x = _vec(x, self.dim)
        if self._sq <= ZERO_TOL**2:
            return self._Stb >= 0
        return self.violation(x) / np.sqrt(self._sq) <= tol * _scale(x)

    def distance(self, x) -> float:
        if self._sq <= ZERO_TOL**2:
            return 0.0
        return self.violation(x) / np.sqrt(self._sq)


class Ball:
    """Euclidean ball of positive radius."""

    def __init__(self, center, radius):
        self.center = _vec(center, name="center")
        self.center.setflags(write=False)
        if not radius > 0:
            raise InvalidSetError("ball radius must be positive")
        self.radius = float(radius)

    @property
    def dim(self):
        return self.center.size

    def project(self, x):
        x = _vec(x, self.dim)
        d = x - self.center
        nrm = float(np.linalg.norm(d))
        if nrm <= self.radius:
            return x
        return self.center + (self.radius / nrm) * d

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        x = _vec(x, self.dim)
        return np.linalg.norm(x - self.center) <= self.radius + tol * _scale(x)

    def distance(self, x) -> float:
        return max(0.0, float(np.linalg.norm(np.asarray(x, dtype=float) - self.center)) - self.radius)


class Box:
    """Axis-aligned box with extended-real bounds (use +-inf for free sides)."""

    def __init__(self, lower, upper):
        lo = _vec(lower, name="lower")
        hi = _vec(upper, len(lo), name="upper")
        if np.any(lo > hi):
            raise InvalidSetError("box requires lower <= upper componentwise")
        self.lower, self.upper = lo, hi
        self.lower.setflags(write=False)
        self.upper.setflags(write=False)

    @property
    def dim(self):
        return self.lower.size

    def project(self, x):
        x = _vec(x, self.dim)
        return np.clip(x, self.lower, self.upper)

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        return self.distance(x) <= tol * _scale(np.asarray(x, dtype=float))

    def distance(self, x) -> float:
        x = _vec(x, self.dim)
        return float(np.linalg.norm(x - np.clip(x, self.lower, self.upper)))

    @classmethod
    def nonnegative_orthant(cls, dim):
        return cls(np.zeros(dim), np.full(dim, np.inf))


class AbsPowerEpigraph:
    """{(t, s) in R^2 : |t|^p <= s} with p > 1.

    Pathological fixture: paired with the axis {x_2 = 0} the intersection
    is the origin but no finite regularity constant exists.  Projection of
    an outside point lands on the boundary curve (s, s^p); the boundary
    parameter solves a scalar stationarity equation by bracketed
    root-finding.
    """

    dim = 2

    def __init__(self, p):
        if not p > 1:
            raise InvalidInputError("exponent must satisfy p > 1")
        self.p = float(p)

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        x = _vec(x, 2)
        return abs(x[0]) ** self.p <= x[1] + tol * _scale(x)

    def project(self, x):
        from scipy.optimize import brentq

        x = _vec(x, 2)
        u, v = float(x[0]), float(x[1])
        if abs(u) ** self.p <= v:
            return x
        au, p = abs(u), self.p

        def slope(s):
            # stationarity of (s-|u|)^2 + (s^p - v)^2 on s >= 0
            return (s - au) + p * s ** (p - 1.0) * (s**p - v)

        if au == 0.0:
            s_star = 0.0
        else:
            # slope(0) = -|u| < 0 and slope(|u|) > 0 since |u|^p > v here
            s_star = brentq(slope, 0.0, au, xtol=1e-15, rtol=8.9e-16)
        proj = np.array([np.sign(u) * s_star, s_star**p])
        return proj

    def distance(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.project(x)))


class SeparationOracleSet:
    """A convex set known only through membership + separating vectors.

    ``member(s)`` answers membership; ``separator(s)`` returns g with
    ``<g, z - s> <= 0`` for every z in the set whenever s is outside.
    The set itself has no closed-form projection; it is consumed through
    :func:`separation_cut`, which turns a probe point into a halfspace
    containing the set.
    """

    def __init__(self, member, separator, dim=None):
        self.member = member
        self.separator = separator
        self.dim = dim

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        return bool(self.member(np.asarray(x, dtype=float)))


def separation_cut(s, oracle: SeparationOracleSet):
    """Halfspace {x : <g, x - s> <= 0} from the oracle, or WholeSpace for members."""
    s = np.asarray(s, dtype=float)
    if oracle.member(s):
        return WholeSpace(dim=s.size)
    g = np.asarray(oracle.separator(s), dtype=float)
    if np.linalg.norm(g) <= ZERO_TOL:
        raise DegenerateCutError("separation oracle returned a zero vector on a non-member")
    return Halfspace(g, float(g @ s))


class SplitFeasibilityFamily:
    """X = {x : A x in Z} for a simple projectable set Z.

    Probe points s generate supporting halfspaces of X through the
    residual of projecting A s onto Z; probes with A s already in Z yield
    the whole space.
    """

    def __init__(self, A, Z):
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 2:
            raise InvalidInputError("matrix must be 2-D")
        if not hasattr(Z, "project"):
            raise InvalidInputError("Z must support exact projection")
        self.Z = Z

    @property
    def dim(self):
        return self.A.shape[1]

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        return self.Z.contains(self.A @ np.asarray(x, dtype=float), tol=tol)

    def cut_at(self, s):
        return supporting_halfspace(s, self)


def supporting_halfspace(s, family: SplitFeasibilityFamily):
    """Supporting halfspace of {x : Ax in Z} generated at the probe s.

    With w = A s, z = Pi_Z(w) and r = w - z the cut is
    {x : (A^T r)^T x <= z^T r}; it contains the target set by projection
    optimality, and collapses to WholeSpace when A s is already in Z.
    """
    s = _vec(s, family.dim, name="s")
    w = family.A @ s
    z = family.Z.project(w)
    r = w - z
    if np.linalg.norm(r) <= ZERO_TOL * _scale(w):
        return WholeSpace(dim=family.dim)
    c = family.A.T @ r
    if np.linalg.norm(c) <= ZERO_TOL:
        raise DegenerateCutError(
            "zero cut normal with A s outside Z (infeasible family or tolerance breach)"
        )
    # z^T r equals ||As||^2 - z^T (As) - ||r||^2
    return Halfspace(c, float(z @ r))


class NormalConeFamily:
    """Outer-normal cone of a convex body at an anchor point on it.

    Each sample point S of the body induces the halfspace
    {x : (x - anchor)^T (S - anchor) <= 0}; the cone is the intersection
    over all samples.  Samples coinciding with the anchor contribute the
    whole space.
    """

    def __init__(self, anchor, points):
        self.anchor = _vec(anchor, name="anchor")
        self.anchor.setflags(write=False)
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.anchor.size:
            raise InvalidInputError("points must be (k, dim) with dim matching anchor")
        self.points = pts

    @property
    def dim(self):
        return self.anchor.size

    def halfspace_for(self, point):
        d = _vec(point, self.dim, name="point") - self.anchor
        if np.linalg.norm(d) <= ZERO_TOL:
            return WholeSpace(dim=self.dim)
        return Halfspace(d, float(d @ self.anchor))

    def sets(self):
        return [self.halfspace_for(p) for p in self.points]


# ---------------------------------------------------------------------------
# functional aliases

def project_hyperplane(x, hyperplane: Hyperplane):
    return hyperplane.project(x)


def project_halfspace(x, halfspace: Halfspace):
    return halfspace.project(x)


def project_sketched_equality(x, sketched: SketchedEqualitySet):
    return sketched.project(x)


def project_sketched_halfspace(x, sketched: SketchedHalfspace):
    return sketched.project(x)


def project_ball(x, ball: Ball):
    return ball.project(x)


def project_box(x, box: Box):
    return box.project(x)
