"""Problem generation, file formats, manifests, and the benchmark runner.

Problem files are human-readable structured text (explicit dimensions,
row-major dense matrices, shortest round-trip float formatting) so that
desk-scale instances stay diffable.  Run manifests are JSON and carry
everything needed to reproduce a run: problem file hash, full config,
seed, and library versions.  Trace CSVs are the single trace format.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .conditioning import gamma_N, report_for_problem
from .diagnostics import exact_distance_affine, polyhedron_projector
from .errors import InvalidInputError, RandprojError
from .sampling import DiscreteDistribution, RngStream, as_generator, row_norm_weights, uniform_weights
from .sets import (
    AbsPowerEpigraph,
    Ball,
    Box,
    Halfspace,
    Hyperplane,
    NormalConeFamily,
    SplitFeasibilityFamily,
)
from .solvers import FeasibilityProblem, SolverConfig, StepsizePolicy, run_avp, run_bap, run_sap, run_spa

__all__ = [
    "ProblemFile",
    "RunManifest",
    "PROBLEM_KINDS",
    "linear_equality_problem",
    "linear_inequality_problem",
    "ball_intersection_problem",
    "split_feasibility_problem",
    "normal_cone_problem",
    "example1_problem",
    "generate_linear_equality",
    "generate_linear_inequality",
    "generate_halfspace_list",
    "generate_ball_intersection",
    "generate_split_feasibility",
    "generate_normal_cone",
    "generate_example1",
    "generate",
    "save_problem",
    "load_problem",
    "solve_problem",
    "rerun_manifest",
    "run_benchmark",
]

PROBLEM_KINDS = (
    "linear-equality",
    "linear-inequality",
    "halfspace-list",
    "ball-intersection",
    "split-feasibility",
    "normal-cone",
    "pathological-example-1",
)


# ---------------------------------------------------------------------------
# problem builders (payload -> FeasibilityProblem)

def _index_distribution(spec, A=None, m=None):
    if isinstance(spec, DiscreteDistribution):
        return spec
    if isinstance(spec, str):
        if spec == "uniform":
            return uniform_weights(m)
        if spec == "rownorm":
            if A is None:
                raise InvalidInputError("rownorm weights need a system matrix")
            return row_norm_weights(A)
        raise InvalidInputError(f"unknown distribution spec {spec!r}")
    return DiscreteDistribution(spec)


def linear_equality_problem(A, b, weights="rownorm", x_star=None) -> FeasibilityProblem:
    """Row hyperplanes of a consistent system Ax = b, with an exact distance oracle."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    sets = [Hyperplane(A[i], b[i]) for i in range(A.shape[0])]
    pinv = np.linalg.pinv(A)  # min-norm correction; exact for consistent systems
    return FeasibilityProblem(
        sets=sets,
        distribution=_index_distribution(weights, A, A.shape[0]),
        x_star=x_star,
        distance_oracle=lambda x, _A=A, _b=b, _P=pinv:
            float(np.linalg.norm(_P @ (_A @ np.asarray(x, float) - _b))),
        meta={"kind": "linear-equality", "A": A, "b": b},
    )


def linear_inequality_problem(A, b, weights="rownorm", x_star=None,
                              kind="linear-inequality") -> FeasibilityProblem:
    """Row halfspaces of Ax <= b, with a dual-QP distance oracle."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    sets = [Halfspace(A[i], b[i]) for i in range(A.shape[0])]
    projector = polyhedron_projector(A, b)
    return FeasibilityProblem(
        sets=sets,
        distribution=_index_distribution(weights, A, A.shape[0]),
        x_star=x_star,
        distance_oracle=lambda x: float(np.linalg.norm(np.asarray(x, float) - projector(x))),
        meta={"kind": kind, "A": A, "b": b},
    )


def ball_intersection_problem(centers, radii, weights="uniform", x_star=None) -> FeasibilityProblem:
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    sets = [Ball(c, r) for c, r in zip(centers, radii)]
    return FeasibilityProblem(
        sets=sets,
        distribution=_index_distribution(weights, None, len(sets)),
        x_star=x_star,
        meta={"kind": "ball-intersection", "centers": centers, "radii": radii},
    )


def split_feasibility_problem(A, Z, probe_mode="iterate", x_star=None) -> FeasibilityProblem:
    """Generator problem over supporting halfspaces of {x : Ax in Z}.

    ``probe_mode="iterate"`` cuts at the current iterate; ``"gaussian"``
    cuts at standard normal probe points.
    """
    family = SplitFeasibilityFamily(A, Z)
    if probe_mode == "iterate":
        generator = lambda x, rng: family.cut_at(x)  # noqa: E731
    elif probe_mode == "gaussian":
        generator = lambda x, rng: family.cut_at(
            as_generator(rng).standard_normal(family.dim))  # noqa: E731
    else:
        raise InvalidInputError(f"unknown probe mode {probe_mode!r}")
    return FeasibilityProblem(
        generator=generator,
        dim=family.dim,
        x_star=x_star,
        member=family.contains,
        meta={"kind": "split-feasibility", "family": family, "probe_mode": probe_mode},
    )


def normal_cone_problem(anchor, points, weights="uniform") -> FeasibilityProblem:
    """Finite realization of an outer-normal-cone family at an anchor point."""
    family = NormalConeFamily(anchor, points)
    sets = family.sets()
    return FeasibilityProblem(
        sets=sets,
        distribution=_index_distribution(weights, None, len(sets)),
        x_star=family.anchor,
        meta={"kind": "normal-cone", "anchor": family.anchor, "points": family.points},
    )


def example1_problem(p=2.0) -> FeasibilityProblem:
    """Non-regular pair {|x1|^p <= x2} and {x2 = 0}; intersection is the origin."""
    sets = [AbsPowerEpigraph(p), Hyperplane(np.array([0.0, 1.0]), 0.0)]
    return FeasibilityProblem(
        sets=sets,
        distribution=uniform_weights(2),
        x_star=np.zeros(2),
        distance_oracle=lambda x: float(np.linalg.norm(np.asarray(x, dtype=float))),
        projection_oracle=lambda x: np.zeros(2),
        meta={"kind": "pathological-example-1", "p": float(p)},
    )


# ---------------------------------------------------------------------------
# problem files

@dataclass
class ProblemFile:
    """Serializable description of a feasibility problem instance."""

    kind: str
    payload: dict
    distribution: object = "uniform"  # "uniform" | "rownorm" | weight array
    x_star: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise InvalidInputError(f"unknown problem kind {self.kind!r}")

    def build(self) -> FeasibilityProblem:
        k, p = self.kind, self.payload
        if k == "linear-equality":
            return linear_equality_problem(p["A"], p["b"], self.distribution, self.x_star)
        if k in ("linear-inequality", "halfspace-list"):
            return linear_inequality_problem(p["A"], p["b"], self.distribution,
                                             self.x_star, kind=k)
        if k == "ball-intersection":
            return ball_intersection_problem(p["centers"], p["radii"],
                                             self.distribution, self.x_star)
        if k == "split-feasibility":
            Z = _build_simple_set(p)
            return split_feasibility_problem(p["A"], Z, p.get("probe_mode", "iterate"),
                                             self.x_star)
        if k == "normal-cone":
            return normal_cone_problem(p["anchor"], p["points"], self.distribution)
        if k == "pathological-example-1":
            return example1_problem(p["p"])
        raise InvalidInputError(f"unknown problem kind {k!r}")


def _build_simple_set(payload):
    zkind = payload.get("zkind", "orthant")
    if zkind == "ball":
        return Ball(payload["z_center"], payload["z_radius"])
    if zkind == "box":
        return Box(payload["z_lower"], payload["z_upper"])
    if zkind == "orthant":
        m = np.asarray(payload["A"], dtype=float).shape[0]
        return Box.nonnegative_orthant(m)
    raise InvalidInputError(f"unknown simple set kind {zkind!r}")


def _fmt(v) -> str:
    return repr(float(v))


def save_problem(path, pf: ProblemFile):
    """Write a problem file in the structured text format."""
    lines = ["randproj-problem v1", f"kind {pf.kind}"]
    if isinstance(pf.distribution, str):
        lines.append(f"distribution {pf.distribution}")
    else:
        w = np.asarray(pf.distribution, dtype=float)
        lines.append("distribution explicit")
        lines.append(f"vector weights {w.size}")
        lines.append(" ".join(_fmt(v) for v in w))
    for key, value in pf.payload.items():
        arr = np.asarray(value)
        if isinstance(value, str):
            lines.append(f"str {key} {value}")
        elif arr.ndim == 0:
            lines.append(f"scalar {key} {_fmt(arr)}")
        elif arr.ndim == 1:
            lines.append(f"vector {key} {arr.size}")
            lines.append(" ".join(_fmt(v) for v in arr))
        elif arr.ndim == 2:
            lines.append(f"matrix {key} {arr.shape[0]} {arr.shape[1]}")
            for row in arr:
                lines.append(" ".join(_fmt(v) for v in row))
        else:
            raise InvalidInputError(f"cannot serialize payload entry {key!r}")
    if pf.x_star is not None:
        lines.append(f"vector x_star {pf.x_star.size}")
        lines.append(" ".join(_fmt(v) for v in pf.x_star))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_problem(path) -> ProblemFile:
    """Parse a problem file written by :func:`save_problem`."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("randproj-problem"):
        raise InvalidInputError(f"{path}: not a randproj problem file")
    kind = None
    distribution = "uniform"
    payload = {}
    x_star = None
    i = 1
    explicit_weights = None
    while i < len(lines):
        parts = lines[i].split()
        tag = parts[0]
        if tag == "kind":
            kind = parts[1]
            i += 1
        elif tag == "distribution":
            distribution = parts[1]
            i += 1
        elif tag == "str":
            payload[parts[1]] = " ".join(parts[2:])
            i += 1
        elif tag == "scalar":
            payload[parts[1]] = float(parts[2])
            i += 1
        elif tag == "vector":
            name, size = parts[1], int(parts[2])
            vec = np.array([float(v) for v in lines[i + 1].split()])
            if vec.size != size:
                raise InvalidInputError(f"{path}: vector {name} has wrong length")
            if name == "x_star":
                x_star = vec
            elif name == "weights":
                explicit_weights = vec
            else:
                payload[name] = vec
            i += 2
        elif tag == "matrix":
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            mat = np.array([[float(v) for v in lines[i + 1 + r].split()]
                            for r in range(rows)])
            if mat.shape != (rows, cols):
                raise InvalidInputError(f"{path}: matrix {name} has wrong shape")
            payload[name] = mat
            i += 1 + rows
        else:
            raise InvalidInputError(f"{path}: unknown tag {tag!r}")
    if kind is None:
        raise InvalidInputError(f"{path}: missing kind")
    if distribution == "explicit":
        if explicit_weights is None:
            raise InvalidInputError(f"{path}: explicit distribution without weights")
        distribution = explicit_weights
    return ProblemFile(kind=kind, payload=payload, distribution=distribution, x_star=x_star)


# ---------------------------------------------------------------------------
# generators (feasible by construction; x_star embedded)

def generate_linear_equality(m, n, rng, weights="rownorm") -> ProblemFile:
    """Gaussian consistent system: b = A x_star for a planted x_star."""
    if m < 1 or n < 1:
        raise InvalidInputError("need m, n >= 1")
    gen = as_generator(rng)
    A = gen.standard_normal((m, n))
    x_star = gen.standard_normal(n)
    return ProblemFile("linear-equality", {"A": A, "b": A @ x_star},
                       distribution=weights, x_star=x_star)


def generate_linear_inequality(m, n, slack_scale, rng, weights="rownorm") -> ProblemFile:
    """Gaussian feasible system: b = A x_star + s with s >= 0.

    ``slack_scale = 0`` puts the planted point on every boundary;
    positive values make it strictly interior.
    """
    if m < 1 or n < 1:
        raise InvalidInputError("need m, n >= 1")
    gen = as_generator(rng)
    A = gen.standard_normal((m, n))
    x_star = gen.standard_normal(n)
    slack = float(slack_scale) * np.abs(gen.standard_normal(m))
    return ProblemFile("linear-inequality", {"A": A, "b": A @ x_star + slack},
                       distribution=weights, x_star=x_star)


def generate_halfspace_list(m, n, slack_scale, rng, weights="uniform") -> ProblemFile:
    pf = generate_linear_inequality(m, n, slack_scale, rng, weights)
    return ProblemFile("halfspace-list", pf.payload, pf.distribution, pf.x_star)


def generate_ball_intersection(k, n, rng, radius_margin=0.5) -> ProblemFile:
    gen = as_generator(rng)
    x_star = gen.standard_normal(n)
    centers = x_star[None, :] + gen.standard_normal((k, n))
    radii = np.linalg.norm(centers - x_star[None, :], axis=1) + radius_margin
    return ProblemFile("ball-intersection", {"centers": centers, "radii": radii},
                       x_star=x_star)


def generate_split_feasibility(m, n, rng, zkind="ball", probe_mode="iterate") -> ProblemFile:
    gen = as_generator(rng)
    A = gen.standard_normal((m, n))
    x_star = gen.standard_normal(n)
    payload = {"A": A, "zkind": zkind, "probe_mode": probe_mode}
    if zkind == "ball":
        payload["z_center"] = A @ x_star
        payload["z_radius"] = 1.0
    elif zkind == "box":
        w = A @ x_star
        payload["z_lower"] = w - 1.0
        payload["z_upper"] = w + 1.0
    elif zkind == "orthant":
        # shift so the planted point maps into the orthant
        x_star = np.abs(x_star)
        A = np.abs(A)
        payload["A"] = A
    else:
        raise InvalidInputError(f"unknown simple set kind {zkind!r}")
    return ProblemFile("split-feasibility", payload, x_star=x_star)


def generate_normal_cone(k, n, rng) -> ProblemFile:
    gen = as_generator(rng)
    anchor = gen.standard_normal(n)
    points = anchor[None, :] + np.abs(gen.standard_normal((k, n)))
    return ProblemFile("normal-cone", {"anchor": anchor, "points": points},
                       x_star=anchor)


def generate_example1(p=2.0) -> ProblemFile:
    """The non-regular pathological pair with exponent p > 1."""
    if not p > 1:
        raise InvalidInputError("exponent must satisfy p > 1")
    return ProblemFile("pathological-example-1", {"p": float(p)},
                       x_star=np.zeros(2))


def generate(kind, rng, m=10, n=5, slack=1.0, p=2.0, zkind="ball",
             probe_mode="iterate") -> ProblemFile:
    """Dispatch table used by the command-line ``generate``."""
    if kind == "linear-equality":
        return generate_linear_equality(m, n, rng)
    if kind == "linear-inequality":
        return generate_linear_inequality(m, n, slack, rng)
    if kind == "halfspace-list":
        return generate_halfspace_list(m, n, slack, rng)
    if kind == "ball-intersection":
        return generate_ball_intersection(m, n, rng)
    if kind == "split-feasibility":
        return generate_split_feasibility(m, n, rng, zkind=zkind, probe_mode=probe_mode)
    if kind == "normal-cone":
        return generate_normal_cone(m, n, rng)
    if kind == "pathological-example-1":
        return generate_example1(p)
    raise InvalidInputError(f"unknown problem kind {kind!r}")


# ---------------------------------------------------------------------------
# manifests and runs

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _policy_dict(policy: StepsizePolicy) -> dict:
    return {"kind": policy.kind, "alpha": policy.alpha,
            "weights": policy.weights, "margin": policy.margin}


def _policy_from_dict(d) -> StepsizePolicy:
    return StepsizePolicy(kind=d["kind"], alpha=d["alpha"],
                          weights=d.get("weights", "uniform"),
                          margin=d.get("margin", 1e-6))


def _config_dict(config: SolverConfig) -> dict:
    return {
        "N": config.N,
        "policy": _policy_dict(config.policy),
        "max_iters": config.max_iters,
        "tol_F": config.tol_F,
        "seed": config.seed,
        "trace_every": config.trace_every,
        "gamma": config.gamma,
        "trace_iterates": config.trace_iterates,
        "check_samples": config.check_samples,
    }


def _config_from_dict(d) -> SolverConfig:
    return SolverConfig(
        N=d["N"],
        policy=_policy_from_dict(d["policy"]),
        max_iters=d["max_iters"],
        tol_F=d["tol_F"],
        seed=d["seed"],
        trace_every=d["trace_every"],
        gamma=d.get("gamma"),
        trace_iterates=d.get("trace_iterates", True),
        check_samples=d.get("check_samples", 128),
    )


@dataclass
class RunManifest:
    """Everything needed to reproduce one solver run."""

    algorithm: str
    problem_path: str
    problem_sha256: str
    config: dict
    order: str | None = None
    conditioning: dict | None = None
    outputs: list = field(default_factory=list)
    wall_clock_s: float = 0.0
    versions: dict = field(default_factory=dict)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path) as fh:
            return cls(**json.load(fh))


def _gamma_for(problem, N, rng=None):
    """Best-effort gamma for stepsize selection; None when unavailable."""
    try:
        return report_for_problem(problem, N=N, rng=rng).gamma
    except RandprojError:
        return None


def solve_problem(problem_path, algorithm, config: SolverConfig, order="cyclic",
                  trace_path=None, manifest_path=None, x0=None):
    """Load, solve, and optionally persist trace + manifest for one run."""
    pf = load_problem(problem_path)
    problem = pf.build()
    cfg = config
    if cfg.gamma is None and cfg.policy.kind == "optimal" and problem.is_finite:
        gamma = _gamma_for(problem, cfg.N, rng=cfg.seed)
        if gamma is not None:
            cfg = SolverConfig(**{**_config_dict(cfg), "gamma": gamma,
                                  "policy": cfg.policy})
    t0 = time.perf_counter()
    if algorithm == "spa":
        trace = run_spa(problem, cfg, x0=x0)
    elif algorithm == "sap":
        trace = run_sap(problem, cfg, x0=x0)
    elif algorithm == "avp":
        trace = run_avp(problem, cfg, x0=x0)
    elif algorithm == "bap":
        trace = run_bap(problem, order=order, config=cfg, x0=x0)
    else:
        raise InvalidInputError(f"unknown algorithm {algorithm!r}")
    wall = time.perf_counter() - t0
    outputs = []
    if trace_path is not None:
        trace.to_csv(trace_path)
        outputs.append(str(trace_path))
    if manifest_path is not None:
        cond = None
        if problem.is_finite:
            try:
                cond = report_for_problem(problem, N=cfg.N, rng=cfg.seed).as_dict()
            except RandprojError:
                cond = None
        manifest = RunManifest(
            algorithm=algorithm,
            problem_path=str(problem_path),
            problem_sha256=_sha256(problem_path),
            config=_config_dict(cfg),
            order=order if algorithm == "bap" else None,
            conditioning=cond,
            outputs=outputs,
            wall_clock_s=wall,
            versions={"randproj": __version__, "numpy": np.__version__},
        )
        manifest.save(manifest_path)
        outputs.append(str(manifest_path))
    return trace


def rerun_manifest(manifest_path, trace_path):
    """Re-execute the run described by a manifest, writing a fresh trace CSV."""
    man = RunManifest.load(manifest_path)
    if _sha256(man.problem_path) != man.problem_sha256:
        raise InvalidInputError("problem file changed since the manifest was written")
    cfg = _config_from_dict(man.config)
    return solve_problem(man.problem_path, man.algorithm, cfg,
                         order=man.order or "cyclic", trace_path=trace_path)


# ---------------------------------------------------------------------------
# benchmark grid

def _parse_algorithm(spec):
    """'sap' | 'spa:4' | 'avp' | 'bap:cyclic' -> (name, N, order)."""
    parts = str(spec).split(":")
    name = parts[0]
    if name not in ("spa", "sap", "avp", "bap"):
        raise InvalidInputError(f"unknown algorithm {name!r}")
    n = 1
    order = "cyclic"
    if len(parts) > 1 and parts[1]:
        if name == "bap":
            order = parts[1]
        else:
            n = int(parts[1])
    return name, n, order


def run_benchmark(problem_paths, algorithms, seeds, out_dir, master_seed=0,
                  max_iters=2000, tol_F=1e-18):
    """Run an algorithm grid over problem files; one trace + manifest per cell.

    Every cell derives its seed from (master seed, cell index), so the
    grid is reproducible regardless of execution order.  Failures are
    recorded in the summary and the sweep continues.
    """
    problem_paths = list(problem_paths)
    algorithms = list(algorithms)
    seeds = list(seeds)
    if not problem_paths or not algorithms or not seeds:
        raise InvalidInputError("benchmark grid must not be empty")
    os.makedirs(out_dir, exist_ok=True)
    master = RngStream(master_seed)
    rows = []
    cell = 0
    for prob_path in problem_paths:
        pname = os.path.splitext(os.path.basename(prob_path))[0]
        problem = load_problem(prob_path).build()
        cond = None
        if problem.is_finite:
            try:
                cond = report_for_problem(problem, rng=master.spawn(10_000 + cell).generator)
            except RandprojError:
                cond = None
        for algo_spec in algorithms:
            name, n_batch, order = _parse_algorithm(algo_spec)
            theo = ""
            if cond is not None:
                gn = gamma_N(min(cond.gamma, 1.0), n_batch)
                theo = 1.0 - 1.0 / (gn * cond.kappa)
            for seed_idx, _ in enumerate(seeds):
                cell_seed = int(np.random.SeedSequence((int(master_seed), cell)).generate_state(1)[0])
                tag = f"{pname}__{name}{n_batch if name in ('spa',) else ''}__s{seed_idx}"
                trace_path = os.path.join(out_dir, f"{tag}.csv")
                man_path = os.path.join(out_dir, f"{tag}.manifest.json")
                policy = StepsizePolicy.optimal() if cond is not None and name != "bap" \
                    else StepsizePolicy.constant(1.0)
                cfg = SolverConfig(N=n_batch, policy=policy, max_iters=max_iters,
                                   tol_F=tol_F, seed=cell_seed,
                                   gamma=cond.gamma if cond is not None else None,
                                   trace_iterates=False)
                try:
                    trace = solve_problem(prob_path, name, cfg, order=order,
                                          trace_path=trace_path, manifest_path=man_path)
                    d2 = trace.dist**2
                    good = d2[:-1] > 1e-280
                    if np.any(good) and not np.all(np.isnan(d2)):
                        f = d2[1:][good] / d2[:-1][good]
                        f = f[np.isfinite(f)]
                        emp = float(np.exp(np.mean(np.log(f[f > 0])))) if f.size and np.all(f > 0) else ""
                    else:
                        emp = ""
                    rows.append({
                        "problem": pname, "algorithm": name, "N": n_batch,
                        "seed": cell_seed, "status": trace.status,
                        "iterations": trace.iterations,
                        "final_F": float(trace.F_hat[-1]),
                        "empirical_rate": emp, "theoretical_rate": theo,
                    })
                except RandprojError as exc:
                    rows.append({
                        "problem": pname, "algorithm": name, "N": n_batch,
                        "seed": cell_seed, "status": f"error: {exc}",
                        "iterations": "", "final_F": "",
                        "empirical_rate": "", "theoretical_rate": theo,
                    })
                cell += 1
    _write_summary(rows, out_dir)
    return rows


_SUMMARY_COLS = ("problem", "algorithm", "N", "seed", "status", "iterations",
                 "final_F", "empirical_rate", "theoretical_rate")


def _write_summary(rows, out_dir):
    csv_path = os.path.join(out_dir, "summary.csv")
    with open(csv_path, "w") as fh:
        fh.write(",".join(_SUMMARY_COLS) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in _SUMMARY_COLS) + "\n")
    cells = [[str(row[c]) for c in _SUMMARY_COLS] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) if cells else len(c)
              for i, c in enumerate(_SUMMARY_COLS)]
    txt_path = os.path.join(out_dir, "summary.txt")
    with open(txt_path, "w") as fh:
        fh.write("  ".join(c.ljust(w) for c, w in zip(_SUMMARY_COLS, widths)) + "\n")
        for r in cells:
            fh.write("  ".join(v.ljust(w) for v, w in zip(r, widths)) + "\n")
