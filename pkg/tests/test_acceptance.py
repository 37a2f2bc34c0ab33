"""End-to-end acceptance suite.

Each test implements one acceptance criterion at its stated tolerance and
prints a one-line verdict with its runtime (run with ``pytest -s`` to see
the lines as they pass).  Budgets are wall-clock upper bounds.
"""

import time

import numpy as np
import pytest

from randproj.conditioning import (
    estimate_hoffman,
    estimate_kappa_empirical,
    gamma_N,
    gamma_linear_inequalities,
    gamma_linear_system,
    kappa_linear_system,
)
from randproj.diagnostics import check_sandwich, grad_F, value_F
from randproj.harness import (
    example1_problem,
    generate_linear_equality,
    generate_linear_inequality,
    linear_equality_problem,
    linear_inequality_problem,
)
from randproj.sampling import SketchSampler, row_norm_weights, uniform_weights
from randproj.solvers import SolverConfig, StepsizePolicy, run_avp, run_sap, run_spa


class _Budget:
    def __init__(self, number, name, seconds):
        self.number, self.name, self.seconds = number, name, seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        verdict = "PASS" if exc_type is None else "FAIL"
        print(f"ACCEPTANCE {self.number:02d} {self.name}: {verdict} "
              f"({elapsed:.2f}s / budget {self.seconds:.0f}s)")
        if exc_type is None:
            assert elapsed < self.seconds, \
                f"criterion {self.number} exceeded its {self.seconds}s budget"
        return False


def test_criterion_01_conditioning_closed_forms():
    with _Budget(1, "conditioning closed forms", 10):
        rng = np.random.default_rng(101)
        for trial in range(100):
            m = int(rng.integers(2, 51))
            n = int(rng.integers(2, 31))
            A = rng.standard_normal((m, n))
            if trial % 10 == 0:
                A = np.outer(rng.standard_normal(m), rng.standard_normal(n))
            rank = np.linalg.matrix_rank(A)
            frob2 = float(np.sum(A * A))
            D = np.diag(1.0 / np.einsum("ij,ij->i", A, A))
            closed = {
                "rownorm": np.linalg.eigvalsh(A.T @ A)[-1] / frob2,
                "uniform": np.linalg.eigvalsh(A.T @ D @ A)[-1] / m,
            }
            weights = {
                "rownorm": row_norm_weights(A),
                "uniform": uniform_weights(m),
            }
            for key in ("rownorm", "uniform"):
                sampler = SketchSampler.coordinate(m, weights[key])
                gamma = gamma_linear_system(A, sampler)
                kappa = kappa_linear_system(A, sampler)
                assert abs(gamma - closed[key]) <= 1e-10 * max(closed[key], 1e-30)
                assert gamma <= 1.0 + 1e-10
                if rank >= 2:
                    assert gamma < 1.0 - 1e-8
                assert kappa * gamma >= 1.0 - 1e-8


def test_criterion_02_kaczmarz_equivalence():
    with _Budget(2, "randomized Kaczmarz equivalence", 5):
        pf = generate_linear_equality(100, 50, rng=7)
        A, b = pf.payload["A"], pf.payload["b"]
        prob = linear_equality_problem(A, b, weights="rownorm", x_star=pf.x_star)
        prob.distance_oracle = None  # not needed; keeps per-record cost flat
        cfg = SolverConfig(N=1, policy=StepsizePolicy.constant(1.0), max_iters=10_000,
                           tol_F=0.0, seed=42, trace_every=1, trace_iterates=True)
        trace = run_sap(prob, cfg, x0=np.zeros(50))

        gen = np.random.Generator(np.random.PCG64(42))
        cum = np.cumsum(row_norm_weights(A).weights)
        rowsq = np.einsum("ij,ij->i", A, A)
        x = np.zeros(50)
        worst = 0.0
        for k in range(10_000):
            worst = max(worst, float(np.max(np.abs(trace.iterates[k] - x))))
            i = min(int(np.searchsorted(cum, gen.random(), side="right")), 99)
            x = x + ((b[i] - A[i] @ x) / rowsq[i]) * A[i]
        assert worst <= 1e-12, f"iterate drift {worst}"


def test_criterion_03_minibatch_linear_rate():
    with _Budget(3, "minibatch linear rate vs bound", 60):
        pf = generate_linear_equality(50, 20, rng=11)
        A, b = pf.payload["A"], pf.payload["b"]
        prob = linear_equality_problem(A, b, weights="uniform", x_star=pf.x_star)
        sk = SketchSampler.coordinate(50, uniform_weights(50))
        gamma = gamma_linear_system(A, sk)
        kappa = kappa_linear_system(A, sk)
        x0 = pf.x_star + np.random.default_rng(0).standard_normal(20)
        K, seeds = 30, 1000
        theoretical = []
        for N in (1, 4, 16):
            gn = gamma_N(gamma, N)
            rho = 1.0 - 1.0 / (gn * kappa)
            theoretical.append(rho)
            cfg = SolverConfig(N=N, policy=StepsizePolicy.optimal(), gamma=gamma,
                               max_iters=K, tol_F=0.0, trace_every=1,
                               trace_iterates=False)
            ratios = np.empty((seeds, K))
            for s in range(seeds):
                tr = run_spa(prob, cfg.with_seed(s), x0=x0)
                d2 = tr.dist**2
                ratios[s] = d2[1:] / d2[:-1]
            mean = ratios.mean(axis=0)
            se = ratios.std(axis=0, ddof=1) / np.sqrt(seeds)
            assert np.all(mean <= rho + 3.0 * se), \
                f"N={N}: worst excess {np.max(mean - (rho + 3 * se))}"
        assert theoretical[0] > theoretical[1] > theoretical[2]


def test_criterion_04_deterministic_average_projection_rate():
    with _Budget(4, "deterministic averaged-projection rate", 10):
        # identity toy: exact convergence in one step
        toy = linear_equality_problem(np.eye(2), np.ones(2), weights="uniform",
                                      x_star=np.ones(2))
        cfg = SolverConfig(policy=StepsizePolicy.optimal(), gamma=0.5, max_iters=10,
                          tol_F=1e-28)
        tr = run_avp(toy, cfg, x0=np.zeros(2))
        assert tr.converged and tr.iterations == 1

        rng = np.random.default_rng(404)
        for trial in range(20):
            m = int(rng.integers(4, 21))
            n = int(rng.integers(2, max(3, m // 2 + 1)))
            pf = generate_linear_equality(m, n, rng=500 + trial)
            A, b = pf.payload["A"], pf.payload["b"]
            prob = linear_equality_problem(A, b, weights="rownorm", x_star=pf.x_star)
            sk = SketchSampler.coordinate(m, row_norm_weights(A))
            gamma = gamma_linear_system(A, sk)
            kappa = kappa_linear_system(A, sk)
            rho = 1.0 - 1.0 / (gamma * kappa)
            cfg = SolverConfig(policy=StepsizePolicy.optimal(), gamma=gamma,
                               max_iters=60, tol_F=0.0, trace_every=1)
            tr = run_avp(prob, cfg, x0=pf.x_star + rng.standard_normal(n))
            d2 = tr.dist**2
            live = d2[:-1] > 1e-24 * d2[0]
            assert np.all(d2[1:][live] <= rho * d2[:-1][live] * (1 + 1e-10) + 1e-300)


def test_criterion_05_sandwich_inequalities():
    with _Budget(5, "two-sided growth/smoothness chains", 30):
        # tight case: both chains evaluate to 0.5 on each side at the origin
        toy = linear_equality_problem(np.eye(2), np.ones(2), weights="uniform",
                                      x_star=np.ones(2))
        x = np.zeros(2)
        d2, f, g2 = 2.0, value_F(x, toy), float(np.linalg.norm(grad_F(x, toy)) ** 2)
        assert f == pytest.approx(0.5, abs=1e-15)
        assert d2 / (2 * 2.0) == pytest.approx(0.5, abs=1e-15)
        assert 0.5 * 0.5 * d2 == pytest.approx(0.5, abs=1e-15)
        assert g2 / (2 * 0.5) == pytest.approx(0.5, abs=1e-15)
        assert 0.5 * 2.0 * g2 == pytest.approx(0.5, abs=1e-15)

        worst = np.inf
        for trial in range(20):
            pf = generate_linear_equality(20, 10, rng=900 + trial)
            A, b = pf.payload["A"], pf.payload["b"]
            prob = linear_equality_problem(A, b, weights="rownorm", x_star=pf.x_star)
            sk = SketchSampler.coordinate(20, row_norm_weights(A))
            res = check_sandwich(prob, kappa_linear_system(A, sk),
                                 gamma_linear_system(A, sk),
                                 probe_count=50, rng=trial, tol=1e-8)
            assert res.holds, res
            worst = min(worst, res.worst_slack)
        assert worst >= -1e-8


def test_criterion_06_error_monotonicity():
    with _Budget(6, "per-run error monotonicity", 30):
        pf = generate_linear_equality(12, 6, rng=61)
        prob = linear_equality_problem(pf.payload["A"], pf.payload["b"],
                                       weights="rownorm", x_star=pf.x_star)
        prob.distance_oracle = None
        x0 = pf.x_star + np.random.default_rng(1).standard_normal(6)

        def assert_monotone(N, alpha, seeds=100, iters=150):
            for s in range(seeds):
                cfg = SolverConfig(N=N, policy=StepsizePolicy.constant(alpha),
                                   gamma=1.0, max_iters=iters, tol_F=0.0, seed=s,
                                   trace_every=1, trace_iterates=False)
                tr = run_spa(prob, cfg, x0=x0)
                err = tr.err_star
                assert np.all(err[1:] <= err[:-1] * (1 + 1e-12) + 1e-15), \
                    f"N={N} alpha={alpha} seed={s}"

        for alpha in (0.5, 1.0, 1.9):
            assert_monotone(1, alpha)
        for N in (2, 8):
            for alpha in (0.5, 1.0):
                assert_monotone(N, alpha)


def test_criterion_07_sublinear_averaged_bound():
    with _Budget(7, "sublinear bound on the averaged iterate", 60):
        rng = np.random.default_rng(2024)
        for trial in range(10):
            equality = trial % 2 == 0
            m, n = (30, 10) if trial % 3 == 0 else (40, 15)
            N = 1 if trial % 2 == 0 else 4
            if equality:
                pf = generate_linear_equality(m, n, rng=1000 + trial)
            else:
                pf = generate_linear_inequality(m, n, 0.5, rng=1000 + trial)
            A, b = pf.payload["A"], pf.payload["b"]
            builder = linear_equality_problem if equality else linear_inequality_problem
            prob = builder(A, b, weights="rownorm", x_star=pf.x_star)
            sk = SketchSampler.coordinate(m, row_norm_weights(A))
            gamma = (gamma_linear_system if equality else gamma_linear_inequalities)(A, sk)
            gn = gamma_N(gamma, N)
            K = 10_000
            cfg = SolverConfig(N=N, policy=StepsizePolicy.optimal(), gamma=gamma,
                               max_iters=K, tol_F=0.0, trace_every=1,
                               trace_iterates=True, seed=trial)
            x0 = pf.x_star + rng.standard_normal(n)
            d0sq = prob.distance_oracle(x0) ** 2
            tr = run_spa(prob, cfg, x0=x0)

            # averaged iterates, then F evaluated by an independent
            # vectorized formula anchored to value_F at sampled steps
            X = tr.iterates[:-1]
            kk = np.arange(1, X.shape[0] + 1)
            avg = np.cumsum(X, axis=0) / kk[:, None]
            p = prob.distribution.weights
            rowsq = np.einsum("ij,ij->i", A, A)
            R = avg @ A.T - b
            if not equality:
                R = np.maximum(R, 0.0)
            F_avg = 0.5 * (R**2 / rowsq) @ p
            for idx in (0, len(avg) // 2, len(avg) - 1):
                assert F_avg[idx] == pytest.approx(value_F(avg[idx], prob), rel=1e-9,
                                                   abs=1e-18)
            bound = gn * d0sq / (2.0 * kk)
            assert np.all(F_avg <= bound), \
                f"trial {trial}: worst ratio {np.max(F_avg / bound)}"


def test_criterion_08_non_regular_fixture():
    with _Budget(8, "non-regular fixture has no finite kappa", 5):
        prob = example1_problem(2.0)
        estimates = []
        for t in (1e-1, 1e-2, 1e-3, 1e-4):
            est = estimate_kappa_empirical(prob, probes=np.array([[t, t * t]]))
            estimates.append(est)
        assert estimates[1] > 1e3
        assert all(a < b for a, b in zip(estimates, estimates[1:]))


def test_criterion_09_gradient_correctness():
    with _Budget(9, "gradient vs central differences", 10):
        rng = np.random.default_rng(77)
        h = 6e-6
        for trial in range(10):
            equality = trial < 5
            m, n = 20, 8
            if equality:
                pf = generate_linear_equality(m, n, rng=3000 + trial)
                prob = linear_equality_problem(pf.payload["A"], pf.payload["b"],
                                               weights="rownorm", x_star=pf.x_star)
            else:
                pf = generate_linear_inequality(m, n, 0.5, rng=3000 + trial)
                prob = linear_inequality_problem(pf.payload["A"], pf.payload["b"],
                                                 weights="rownorm", x_star=pf.x_star)
            for _ in range(10):
                x = pf.x_star + rng.standard_normal(n)
                g = grad_F(x, prob)
                fd = np.empty(n)
                for j in range(n):
                    e = np.zeros(n)
                    e[j] = h
                    fd[j] = (value_F(x + e, prob) - value_F(x - e, prob)) / (2 * h)
                assert np.linalg.norm(fd - g) <= 1e-6 * max(np.linalg.norm(g), 1e-8)
            # gradient of F is 1-Lipschitz along probe pairs
            for _ in range(20):
                x = pf.x_star + rng.standard_normal(n)
                y = pf.x_star + rng.standard_normal(n)
                lhs = np.linalg.norm(grad_F(x, prob) - grad_F(y, prob))
                assert lhs <= (1 + 1e-8) * np.linalg.norm(x - y)


def test_criterion_10_inequality_system_rate():
    with _Budget(10, "inequality rate with estimated Hoffman constant", 60):
        pf = generate_linear_inequality(50, 20, 1.0, rng=5)
        A, b = pf.payload["A"], pf.payload["b"]
        prob = linear_inequality_problem(A, b, weights="rownorm", x_star=pf.x_star)
        hoffman = estimate_hoffman(A, b, probe_count=200, rng=1)
        rho = 1.0 - 1.0 / (hoffman * float(np.sum(A * A)))
        x0 = pf.x_star + 2 * np.random.default_rng(3).standard_normal(20)

        cfg = SolverConfig(N=1, policy=StepsizePolicy.constant(1.0), max_iters=60_000,
                           tol_F=0.0, seed=0, trace_every=10**9, trace_iterates=False)
        tr = run_sap(prob, cfg, x0=x0)
        assert all(s.contains(tr.x_final, tol=1e-8) for s in prob.sets)

        K = 60
        factors = []
        for s in range(100):
            cfg = SolverConfig(N=1, policy=StepsizePolicy.constant(1.0), max_iters=K,
                               tol_F=0.0, seed=s, trace_every=K, trace_iterates=False)
            t = run_sap(prob, cfg, x0=x0)
            d2_0, d2_K = t.dist[0] ** 2, t.dist[-1] ** 2
            factors.append(0.0 if d2_K <= 1e-280 else (d2_K / d2_0) ** (1.0 / t.k[-1]))
        f = np.asarray(factors)
        se = f.std(ddof=1) / np.sqrt(f.size)
        assert f.mean() <= rho + 3 * se
