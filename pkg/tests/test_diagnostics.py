import numpy as np
import pytest

from randproj.conditioning import gamma_linear_system, kappa_linear_system
from randproj.diagnostics import (
    check_firm_nonexpansive,
    check_operator_contraction,
    check_sandwich,
    distance_polyhedron,
    exact_distance_affine,
    fit_rates,
    grad_F,
    intersection_projector,
    reference_distance,
    value_F,
)
from randproj.errors import InconsistentSystemError, InvalidInputError
from randproj.harness import (
    ball_intersection_problem,
    generate_linear_equality,
    generate_linear_inequality,
    linear_equality_problem,
    linear_inequality_problem,
)
from randproj.sampling import SketchSampler, row_norm_weights, uniform_weights
from randproj.solvers import SolverConfig, StepsizePolicy, run_avp, run_sap


def identity_toy():
    return linear_equality_problem(np.eye(2), np.ones(2), weights="uniform",
                                   x_star=np.ones(2))


class TestValueGrad:
    def test_feasible_zero(self):
        prob = identity_toy()
        assert value_F(np.ones(2), prob) == 0.0
        np.testing.assert_array_equal(grad_F(np.ones(2), prob), np.zeros(2))

    def test_toy_value_and_grad_at_origin(self):
        prob = identity_toy()
        assert value_F(np.zeros(2), prob) == pytest.approx(0.5)
        np.testing.assert_allclose(grad_F(np.zeros(2), prob), [-0.5, -0.5])

    def test_single_hyperplane_half_distance_squared(self):
        prob = linear_equality_problem(np.array([[1.0, 0.0]]), np.array([1.0]),
                                       weights="uniform")
        x = np.array([3.0, 4.0])
        assert value_F(x, prob) == pytest.approx(0.5 * 2.0**2)

    def test_gradient_matches_central_differences(self):
        pf = generate_linear_equality(8, 4, rng=13)
        prob = linear_equality_problem(pf.payload["A"], pf.payload["b"],
                                       weights="rownorm", x_star=pf.x_star)
        rng = np.random.default_rng(0)
        h = 6e-6
        for _ in range(20):
            x = pf.x_star + rng.standard_normal(4)
            g = grad_F(x, prob)
            fd = np.empty(4)
            for j in range(4):
                e = np.zeros(4)
                e[j] = h
                fd[j] = (value_F(x + e, prob) - value_F(x - e, prob)) / (2 * h)
            assert np.linalg.norm(fd - g) <= 1e-6 * max(np.linalg.norm(g), 1e-8)

    def test_jensen_chain_at_probes(self):
        # ||grad F||^2 <= 2 gamma F <= 2 F everywhere
        pf = generate_linear_equality(10, 5, rng=19)
        A, b = pf.payload["A"], pf.payload["b"]
        prob = linear_equality_problem(A, b, weights="rownorm", x_star=pf.x_star)
        gamma = gamma_linear_system(A, SketchSampler.coordinate(10, row_norm_weights(A)))
        rng = np.random.default_rng(2)
        for _ in range(50):
            x = pf.x_star + rng.standard_normal(5)
            g2 = np.linalg.norm(grad_F(x, prob)) ** 2
            f = value_F(x, prob)
            assert g2 <= 2 * gamma * f * (1 + 1e-10)
            assert 2 * gamma * f <= 2 * f * (1 + 1e-10)

    def test_reference_distance_budget_warning(self):
        prob = ball_intersection_problem(
            np.array([[0.0, 0.0], [3.0, 0.0]]), np.array([2.0, 2.0]),
            x_star=np.array([1.5, 0.0]))
        with pytest.warns(UserWarning):
            ref = reference_distance(np.array([10.0, 10.0]), prob,
                                     target_F=1e-30, max_iters=3)
        assert not ref.converged
        assert ref.residual_F > 0

    def test_half_expected_square_identity(self):
        # F equals half the weighted sum of squared residual norms by definition
        pf = generate_linear_equality(6, 3, rng=14)
        prob = linear_equality_problem(pf.payload["A"], pf.payload["b"],
                                       weights="rownorm", x_star=pf.x_star)
        x = np.array([0.3, -0.2, 1.1])
        p = prob.distribution.weights
        direct = 0.5 * sum(
            w * np.linalg.norm(x - s.project(x)) ** 2 for w, s in zip(p, prob.sets))
        assert value_F(x, prob) == pytest.approx(direct, rel=1e-12)


class TestDistances:
    def test_affine_feasible_zero(self):
        A, b = np.array([[1.0, 0.0]]), np.array([1.0])
        assert exact_distance_affine(np.array([1.0, 7.0]), A, b) == pytest.approx(0.0, abs=1e-12)

    def test_affine_coordinate_geometry(self):
        A, b = np.array([[1.0, 0.0]]), np.array([1.0])
        assert exact_distance_affine(np.array([3.0, 4.0]), A, b) == pytest.approx(2.0)

    def test_affine_inconsistent_rejected(self):
        A = np.array([[1.0, 0.0], [1.0, 0.0]])
        b = np.array([0.0, 1.0])
        with pytest.raises(InconsistentSystemError):
            exact_distance_affine(np.zeros(2), A, b)

    def test_reference_matches_affine(self):
        pf = generate_linear_equality(6, 4, rng=15)
        A, b = pf.payload["A"], pf.payload["b"]
        prob = linear_equality_problem(A, b, weights="uniform", x_star=pf.x_star)
        x = pf.x_star + 0.5 * np.random.default_rng(1).standard_normal(4)
        ref = reference_distance(x, prob, target_F=1e-26)
        assert ref.converged
        assert ref.distance == pytest.approx(exact_distance_affine(x, A, b), abs=1e-6)

    def test_reference_single_ball_closed_form(self):
        prob = ball_intersection_problem(np.zeros((1, 2)), np.array([1.0]),
                                         x_star=np.zeros(2))
        x = np.array([3.0, 4.0])
        ref = reference_distance(x, prob, target_F=1e-26)
        assert ref.distance == pytest.approx(4.0, abs=1e-6)

    def test_polyhedron_distance_matches_2d_enumeration(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            m = int(rng.integers(3, 8))
            A = rng.standard_normal((m, 2))
            xs = rng.standard_normal(2)
            b = A @ xs + np.abs(rng.standard_normal(m))
            x = xs + 3 * rng.standard_normal(2)
            cands = [x] if np.all(A @ x <= b) else []
            for i in range(m):
                cands.append(x - max(0.0, A[i] @ x - b[i]) / (A[i] @ A[i]) * A[i])
                for j in range(i + 1, m):
                    M = A[[i, j]]
                    if abs(np.linalg.det(M)) > 1e-12:
                        cands.append(np.linalg.solve(M, b[[i, j]]))
            feas = [c for c in cands if np.all(A @ c <= b + 1e-9)]
            expected = min(np.linalg.norm(c - x) for c in feas)
            assert distance_polyhedron(x, A, b) == pytest.approx(expected, abs=1e-6)

    def test_reference_matches_polyhedron_oracle_in_2d(self):
        pf = generate_linear_inequality(5, 2, 0.5, rng=16)
        A, b = pf.payload["A"], pf.payload["b"]
        prob = linear_inequality_problem(A, b, weights="uniform", x_star=pf.x_star)
        x = pf.x_star + np.array([4.0, -3.0])
        ref = reference_distance(x, prob, target_F=1e-26, max_iters=400000)
        assert ref.distance >= distance_polyhedron(x, A, b) - 1e-9
        assert ref.distance == pytest.approx(distance_polyhedron(x, A, b), abs=1e-5)

    def test_projector_tags(self):
        assert intersection_projector(identity_toy())[1] == "affine-exact"
        pf = generate_linear_inequality(4, 2, 0.5, rng=17)
        ineq = linear_inequality_problem(pf.payload["A"], pf.payload["b"])
        assert intersection_projector(ineq)[1] == "qp-dual"
        balls = ball_intersection_problem(np.zeros((1, 2)), np.array([1.0]))
        assert intersection_projector(balls)[1] == "avp-reference"


class TestTheoremChecks:
    def test_sandwich_tight_on_identity_toy(self):
        prob = identity_toy()
        res = check_sandwich(prob, kappa=2.0, gamma=0.5, probes=np.zeros((1, 2)))
        assert res.holds
        # both chains are tight at the origin: every side equals 0.5
        d2 = 2.0
        f = value_F(np.zeros(2), prob)
        assert d2 / (2 * 2.0) == pytest.approx(f) == pytest.approx(0.5 * 0.5 * d2)

    def test_sandwich_feasible_probe(self):
        prob = identity_toy()
        res = check_sandwich(prob, kappa=2.0, gamma=0.5, probes=np.ones((1, 2)))
        assert res.holds

    def test_sandwich_random_systems(self):
        rng = np.random.default_rng(3)
        for trial in range(3):
            pf = generate_linear_equality(20, 10, rng=200 + trial)
            A, b = pf.payload["A"], pf.payload["b"]
            prob = linear_equality_problem(A, b, weights="rownorm", x_star=pf.x_star)
            sk = SketchSampler.coordinate(20, row_norm_weights(A))
            res = check_sandwich(prob, kappa_linear_system(A, sk),
                                 gamma_linear_system(A, sk),
                                 probe_count=100, rng=int(rng.integers(1 << 30)))
            assert res.holds, res

    def test_sandwich_detects_wrong_constants(self):
        prob = identity_toy()
        res = check_sandwich(prob, kappa=1.01, gamma=0.1,
                             probes=np.array([[0.0, 0.7]]))
        assert not res.holds

    def test_contraction_tight_on_identity_toy(self):
        prob = identity_toy()
        res = check_operator_contraction(prob, kappa=2.0, gamma=0.5,
                                         probes=np.zeros((1, 2)))
        assert res.holds and res.worst_slack == pytest.approx(0.0, abs=1e-12)

    def test_contraction_random_systems(self):
        pf = generate_linear_equality(20, 10, rng=210)
        A, b = pf.payload["A"], pf.payload["b"]
        prob = linear_equality_problem(A, b, weights="uniform", x_star=pf.x_star)
        sk = SketchSampler.coordinate(20, uniform_weights(20))
        res = check_operator_contraction(prob, kappa_linear_system(A, sk),
                                         gamma_linear_system(A, sk),
                                         probe_count=100, rng=4)
        assert res.holds, res

    def test_firm_nonexpansive(self):
        prob = identity_toy()
        same = np.zeros((2, 2))
        assert check_firm_nonexpansive(prob, probes=same).holds
        pf = generate_linear_equality(10, 5, rng=220)
        prob2 = linear_equality_problem(pf.payload["A"], pf.payload["b"],
                                        weights="rownorm", x_star=pf.x_star)
        assert check_firm_nonexpansive(prob2, probe_count=100, rng=5).holds


class TestFitRates:
    def test_avp_identity_toy_zero_factor(self):
        prob = identity_toy()
        cfg = SolverConfig(policy=StepsizePolicy.optimal(), gamma=0.5, max_iters=4,
                           tol_F=0.0, trace_every=1)
        trace = run_avp(prob, cfg, x0=np.array([0.4, -0.3]))
        fit = fit_rates(trace, kappa=2.0, gamma_n=0.5, delta_step=2.0)
        assert fit.theoretical_factor == pytest.approx(0.0)
        assert fit.geometric_mean == 0.0
        assert fit.bound_respected

    def test_sap_ensemble_identity_toy(self):
        # one-step ratios from a common start: the mean matches the bound 0.5
        prob = identity_toy()
        x0 = np.array([0.3, -0.5])
        traces = []
        for s in range(400):
            cfg = SolverConfig(N=1, policy=StepsizePolicy.constant(1.0), max_iters=1,
                               tol_F=0.0, seed=s, trace_every=1, trace_iterates=False)
            traces.append(run_sap(prob, cfg, x0=x0))
        fit = fit_rates(traces, kappa=2.0, gamma_n=1.0, delta_step=1.0)
        assert fit.theoretical_factor == pytest.approx(0.5)
        assert fit.bound_respected
        assert abs(fit.step_factors[0] - 0.5) <= 4 * fit.stderr[0]

    def test_sublinear_bound_per_run(self):
        pf = generate_linear_equality(10, 5, rng=230)
        A, b = pf.payload["A"], pf.payload["b"]
        prob = linear_equality_problem(A, b, weights="rownorm", x_star=pf.x_star)
        sk = SketchSampler.coordinate(10, row_norm_weights(A))
        gamma = gamma_linear_system(A, sk)
        kappa = kappa_linear_system(A, sk)
        cfg = SolverConfig(N=1, policy=StepsizePolicy.optimal(), gamma=gamma,
                           max_iters=300, tol_F=0.0, seed=2, trace_every=1,
                           trace_iterates=True)
        trace = run_sap(prob, cfg, x0=pf.x_star + np.ones(5))
        fit = fit_rates(trace, kappa=kappa, gamma_n=1.0, delta_step=1.0, problem=prob)
        assert fit.sublinear_respected
        assert fit.bound_respected is not None

    def test_f_converted_fallback(self):
        prob = ball_intersection_problem(np.zeros((2, 2)), np.array([1.0, 2.0]),
                                         x_star=np.zeros(2))
        cfg = SolverConfig(N=1, policy=StepsizePolicy.constant(1.0), max_iters=10,
                           tol_F=0.0, seed=1, trace_every=1)
        trace = run_sap(prob, cfg, x0=np.array([5.0, 5.0]))
        fit = fit_rates(trace, kappa=4.0, gamma_n=1.0, delta_step=1.0)
        assert fit.source == "F-converted"

    def test_mismatched_grids_rejected(self):
        prob = identity_toy()
        cfg = SolverConfig(N=1, max_iters=3, tol_F=0.0, seed=0, trace_every=1)
        t1 = run_sap(prob, cfg, x0=np.array([0.2, 0.9]))
        cfg2 = SolverConfig(N=1, max_iters=5, tol_F=0.0, seed=0, trace_every=1)
        t2 = run_sap(prob, cfg2, x0=np.array([0.2, 0.9]))
        if t1.k.size != t2.k.size:
            with pytest.raises(InvalidInputError):
                fit_rates([t1, t2], kappa=2.0, gamma_n=1.0, delta_step=1.0)
