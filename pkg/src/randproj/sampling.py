"""Index and sketch sampling with seeded, reproducible streams.

All randomness in the package flows through ``numpy.random.Generator``
objects (PCG64 underneath).  ``RngStream`` is a thin handle that pins the
seed and can derive independent substreams; a given seed always yields a
bitwise-identical draw sequence.  Distributions are immutable and safe to
share; a stream has a single owner.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidConfigError, InvalidInputError

__all__ = [
    "DiscreteDistribution",
    "RngStream",
    "SketchSampler",
    "as_generator",
    "row_norm_weights",
    "uniform_weights",
    "sample",
    "sample_minibatch",
]

_WEIGHT_SUM_TOL = 1e-12


class RngStream:
    """Seeded random stream with deterministic substream derivation.

    Identical seeds produce bitwise-identical sequences.  ``spawn(i)``
    derives an independent stream from ``(seed, i)``, used e.g. for
    benchmark grid cells.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def spawn(self, index: int) -> "RngStream":
        child = RngStream.__new__(RngStream)
        child.seed = (self.seed, int(index))
        child.generator = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((self.seed, int(index))))
        )
        return child

    def __repr__(self):
        return f"RngStream(seed={self.seed!r})"


def as_generator(rng, fallback_seed=0) -> np.random.Generator:
    """Coerce an RngStream / Generator / int / None into a Generator."""
    if rng is None:
        return np.random.Generator(np.random.PCG64(int(fallback_seed)))
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return np.random.Generator(np.random.PCG64(int(rng)))
    raise InvalidInputError(f"cannot interpret {rng!r} as a random stream")


class DiscreteDistribution:
    """Probability weights over set indices.

    Weights must be nonnegative and sum to one within 1e-12; they are
    stored as given (no silent renormalisation).  Sampling consumes
    exactly one uniform draw per index, via inverse-CDF lookup, so a
    minibatch of N indices consumes exactly N stream events in order.
    """

    def __init__(self, weights):
        p = np.asarray(weights, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidInputError("weights must be a nonempty 1-D array")
        if np.any(p < 0):
            raise InvalidInputError("weights must be nonnegative")
        if abs(p.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise InvalidInputError(
                f"weights must sum to 1 within {_WEIGHT_SUM_TOL}, got {p.sum()!r}"
            )
        self.weights = p
        self.weights.setflags(write=False)
        self._cum = np.cumsum(p)

    def __len__(self):
        return self.weights.size

    @property
    def min_positive(self) -> float:
        """Smallest strictly positive weight."""
        pos = self.weights[self.weights > 0]
        return float(pos.min())

    def sample(self, rng) -> int:
        u = as_generator(rng).random()
        return int(min(np.searchsorted(self._cum, u, side="right"), len(self) - 1))

    def sample_minibatch(self, n: int, rng) -> np.ndarray:
        if n < 1:
            raise InvalidConfigError("minibatch size must be >= 1")
        u = as_generator(rng).random(n)
        idx = np.searchsorted(self._cum, u, side="right")
        return np.minimum(idx, len(self) - 1)


def uniform_weights(m: int) -> DiscreteDistribution:
    """Uniform distribution over m indices."""
    if m < 1:
        raise InvalidInputError("need at least one index")
    return DiscreteDistribution(np.full(m, 1.0 / m))


def row_norm_weights(A) -> DiscreteDistribution:
    """Row sampling proportional to squared row norms, p_i = ||A_i||^2 / ||A||_F^2."""
    A = np.asarray(A, dtype=float)
    sq = np.einsum("ij,ij->i", A, A)
    if np.any(sq == 0.0):
        raise InvalidInputError("matrix has a zero row; row-norm weights undefined")
    return DiscreteDistribution(sq / sq.sum())


def sample(dist: DiscreteDistribution, rng) -> int:
    """Draw one index from the distribution."""
    return dist.sample(rng)


def sample_minibatch(dist: DiscreteDistribution, n: int, rng) -> np.ndarray:
    """Draw n i.i.d. indices; consumes exactly n stream events in order."""
    return dist.sample_minibatch(n, rng)


class SketchSampler:
    """A finite family of sketch matrices/vectors with sampling weights.

    Each sketch is either an (m,) vector or an (m, q) matrix acting on an
    m-row system.  Coordinate sketches are the columns e_i of the
    identity; selector sketches stack several identity columns.
    Inequality aggregates must be componentwise nonnegative.
    """

    def __init__(self, sketches, weights, kind="custom", require_nonnegative=False):
        self.sketches = [np.asarray(S, dtype=float) for S in sketches]
        if not self.sketches:
            raise InvalidInputError("empty sketch family")
        if isinstance(weights, DiscreteDistribution):
            self.distribution = weights
        else:
            self.distribution = DiscreteDistribution(weights)
        if len(self.distribution) != len(self.sketches):
            raise InvalidInputError("weights length must match sketch count")
        if require_nonnegative:
            for S in self.sketches:
                if np.any(S < 0):
                    raise InvalidInputError("inequality sketches must be nonnegative")
        self.kind = kind

    def __len__(self):
        return len(self.sketches)

    def __iter__(self):
        return zip(self.distribution.weights, self.sketches)

    @classmethod
    def coordinate(cls, m: int, weights) -> "SketchSampler":
        """Sketches e_1..e_m with the given weights."""
        eye = np.eye(m)
        return cls([eye[:, i] for i in range(m)], weights, kind="coordinate")

    @classmethod
    def selectors(cls, m: int, subsets, weights) -> "SketchSampler":
        """Row-subset sketches: columns of I_m listed in each subset."""
        eye = np.eye(m)
        sk = []
        for sub in subsets:
            sub = np.asarray(sub, dtype=int)
            if sub.size == 0 or np.any(sub < 0) or np.any(sub >= m):
                raise InvalidInputError(f"bad row subset {sub!r}")
            sk.append(eye[:, sub])
        return cls(sk, weights, kind="selector")

    @classmethod
    def aggregates(cls, vectors, weights) -> "SketchSampler":
        """Nonnegative aggregation vectors for inequality systems."""
        return cls(vectors, weights, kind="aggregate", require_nonnegative=True)

    def sample(self, rng) -> np.ndarray:
        return self.sketches[self.distribution.sample(rng)]
