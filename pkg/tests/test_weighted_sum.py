import itertools
import warnings
from types import SimpleNamespace

import numpy as np
import pytest

from sprayopt.glm import GammaLogLinearModel, ModelTerm
from sprayopt.pareto import pareto_mask
from sprayopt.problems import builtin, grid_optima
from sprayopt.weighted_sum import (
    SqpConfig,
    bfgs_update,
    scalarize,
    solve_box_qp,
    sqp_minimize,
    weight_lattice,
    weighted_sum_sweep,
)


def random_spd(rng, n=5, cond=100.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(np.geomspace(1, cond, n)) @ Q.T


def qp_oracle(H, g, lo, hi):
    """Enumerate every lower/free/upper pattern and keep the best feasible stationary point."""
    n = len(g)
    best, best_val = None, np.inf
    for pattern in itertools.product((-1, 0, 1), repeat=n):
        state = np.array(pattern)
        d = np.where(state < 0, lo, np.where(state > 0, hi, 0.0))
        free = state == 0
        if free.any():
            rhs = -(g[free] + H[np.ix_(free, ~free)] @ d[~free])
            d[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
        if np.any(d < lo - 1e-12) or np.any(d > hi + 1e-12):
            continue
        val = g @ d + 0.5 * d @ H @ d
        if val < best_val - 1e-15:
            best, best_val = d, val
    return best


def kkt_residual(H, g, lo, hi, d):
    grad = H @ d + g
    # projected gradient is zero at a box-QP minimizer
    proj = np.clip(d - grad, lo, hi) - d
    return np.max(np.abs(proj))


class TestLattice:
    def test_two_objectives(self):
        W = weight_lattice(2, 0.01)
        assert W.shape == (101, 2)
        assert W[0].tolist() == [0.0, 1.0] and W[-1].tolist() == [1.0, 0.0]

    def test_three_objectives_half_step(self):
        W = weight_lattice(3, 0.5)
        got = {tuple(r) for r in W}
        assert got == {(0, 0, 1), (0, .5, .5), (0, 1, 0), (.5, 0, .5), (.5, .5, 0), (1, 0, 0)}

    @pytest.mark.parametrize("k, step", [(2, 0.01), (3, 0.01), (3, 0.1), (2, 0.25)])
    def test_rows_sum_to_one(self, k, step):
        W = weight_lattice(k, step)
        assert np.all(np.abs(W.sum(axis=1) - 1) <= 1e-12)
        assert np.all(W >= 0)

    def test_three_objective_count(self):
        assert len(weight_lattice(3, 0.01)) == 101 * 102 // 2

    @pytest.mark.parametrize("k", [1, 4])
    def test_bad_k(self, k):
        with pytest.raises(ValueError):
            weight_lattice(k, 0.1)

    def test_step_must_divide_one(self):
        with pytest.raises(ValueError):
            weight_lattice(2, 0.3)


class TestScalarize:
    def test_unit_weight_is_single_objective(self):
        p = builtin("I")
        z = np.full(5, 0.2)
        val, _ = scalarize(p, [1, 0], z)
        assert val == pytest.approx(p.canonical_coded(z)[0])

    def test_equal_weights_average(self):
        consts = [GammaLogLinearModel(f"c{v}", (ModelTerm("intercept", (), np.log(v)),)) for v in (2.0, 4.0)]
        p = SimpleNamespace(models=consts, signs=np.ones(2))
        val, grad = scalarize(p, [0.5, 0.5], np.zeros(5))
        assert val == pytest.approx(3.0)
        np.testing.assert_array_equal(grad, 0)

    def test_gradient_matches_fd(self, rng):
        p = builtin("III")
        for _ in range(20):
            z = rng.uniform(-1, 1, 5)
            w = rng.dirichlet(np.ones(3))
            w[-1] = 1 - w[:-1].sum()
            _, g = scalarize(p, w, z)
            fd = np.array([(scalarize(p, w, z + h)[0] - scalarize(p, w, z - h)[0]) / 2e-6
                           for h in np.eye(5) * 1e-6])
            assert np.max(np.abs(g - fd)) / np.max(np.abs(fd)) < 1e-5

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            scalarize(builtin("I"), [0.7, 0.7], np.zeros(5))
        with pytest.raises(ValueError):
            scalarize(builtin("I"), [1.5, -0.5], np.zeros(5))


class TestBfgs:
    def test_identity_fixed_point(self):
        s = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
        np.testing.assert_allclose(bfgs_update(np.eye(5), s, s), np.eye(5), atol=1e-14)

    def test_secant_condition(self, rng):
        A = random_spd(rng)
        s = rng.standard_normal(5)
        H = bfgs_update(np.eye(5), s, A @ s)
        np.testing.assert_allclose(H @ s, A @ s, rtol=1e-10)

    def test_zero_step_rejected(self):
        with pytest.raises(ValueError):
            bfgs_update(np.eye(3), np.zeros(3), np.ones(3))

    def test_converges_to_newton_on_quadratic(self, rng):
        A = random_spd(rng, cond=50)
        b = rng.standard_normal(5)
        x = rng.standard_normal(5)
        H = np.eye(5)
        for _ in range(10):
            g = A @ x - b
            if np.linalg.norm(g) < 1e-13:
                break
            d = -np.linalg.solve(H, g)
            t = -(g @ d) / (d @ A @ d)  # exact line search
            x_new = x + t * d
            newton = -np.linalg.solve(A, g)
            H = bfgs_update(H, x_new - x, A @ x_new - A @ x)
            x = x_new
        g = A @ x - b
        newton = -np.linalg.solve(A, g)
        assert np.linalg.norm(-np.linalg.solve(H, g) - newton) < 1e-8
        np.testing.assert_allclose(x, np.linalg.solve(A, b), atol=1e-8)

    def test_damping_preserves_positive_definiteness(self, rng):
        H = np.eye(5)
        for _ in range(1000):
            s = rng.standard_normal(5)
            y = rng.standard_normal(5)  # often s'y < 0
            H = bfgs_update(H, s, y)
            assert np.linalg.eigvalsh(H)[0] > 0
            np.testing.assert_array_equal(H, H.T)


class TestBoxQp:
    def test_interior_newton_step(self, rng):
        H = random_spd(rng)
        g = 1e-3 * rng.standard_normal(5)
        d = solve_box_qp(H, g, -np.ones(5), np.ones(5))
        np.testing.assert_allclose(d, -np.linalg.solve(H, g), rtol=1e-12)

    def test_projection_case(self):
        d = solve_box_qp(np.eye(5), [2, 0, 0, 0, 0], -np.ones(5), np.ones(5))
        np.testing.assert_array_equal(d, [-1, 0, 0, 0, 0])

    def test_matches_active_set_enumeration(self, rng):
        for _ in range(100):
            H = random_spd(rng, cond=rng.uniform(1, 1e3))
            g = rng.standard_normal(5) * 5
            lo = -rng.uniform(0, 1.5, 5)
            hi = rng.uniform(0, 1.5, 5)
            d = solve_box_qp(H, g, lo, hi)
            assert kkt_residual(H, g, lo, hi, d) < 1e-10
            np.testing.assert_allclose(d, qp_oracle(H, g, lo, hi), atol=1e-10)

    def test_non_pd_rejected(self):
        with pytest.raises(ValueError):
            solve_box_qp(np.diag([1, -1, 1, 1, 1.0]), np.zeros(5), -np.ones(5), np.ones(5))

    def test_zero_width_bounds(self):
        lo = np.array([0.0, -1, -1, -1, -1])
        d = solve_box_qp(np.eye(5), np.array([5.0, 1, 0, 0, 0]), lo, np.ones(5))
        assert d[0] == 0.0 and d[1] == pytest.approx(-1)


class TestSqp:
    def test_sphere(self):
        res = sqp_minimize(lambda x: (float(x @ x), 2 * x), np.ones(5), -2 * np.ones(5), 2 * np.ones(5))
        assert res.converged
        assert np.max(np.abs(res.x)) < 1e-7

    def test_start_outside_box_rejected(self):
        with pytest.raises(ValueError):
            sqp_minimize(lambda x: (float(x @ x), 2 * x), 3 * np.ones(2), -np.ones(2), np.ones(2))

    def test_iteration_cap_flagged(self):
        rosen = lambda x: (float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2),
                           np.array([-400 * x[0] * (x[1] - x[0] ** 2) - 2 * (1 - x[0]), 200 * (x[1] - x[0] ** 2)]))
        res = sqp_minimize(rosen, np.array([-1.5, 2.0]), -3 * np.ones(2), 3 * np.ones(2), SqpConfig(max_iterations=2))
        assert not res.converged
        assert res.iterations == 2
        full = sqp_minimize(rosen, np.array([-1.5, 2.0]), -3 * np.ones(2), 3 * np.ones(2))
        assert full.converged
        np.testing.assert_allclose(full.x, [1, 1], atol=1e-5)

    def test_bound_constrained_solution(self):
        c = np.array([3.0, -0.5])
        res = sqp_minimize(lambda x: (float((x - c) @ (x - c)), 2 * (x - c)), np.zeros(2), -np.ones(2), np.ones(2))
        np.testing.assert_allclose(res.x, [1.0, -0.5], atol=1e-8)

    def test_max_hardness_corner(self):
        p = builtin("I")
        res = sqp_minimize(lambda z: scalarize(p, [1, 0], z), np.zeros(5), p.lower, p.upper)
        assert -res.fun >= 720

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SqpConfig(xtol=0)
        with pytest.raises(ValueError):
            SqpConfig(multistart=0)


@pytest.fixture(scope="module")
def grid_i():
    return grid_optima(builtin("I"))


@pytest.fixture(scope="module")
def sweep_i():
    return weighted_sum_sweep(builtin("I"))


class TestSweep:
    def test_unit_weights_reach_grid_optima(self, grid_i):
        p = builtin("I")
        _, best = grid_i
        for j, w in enumerate(([1.0, 0.0], [0.0, 1.0])):
            res = weighted_sum_sweep(p, lattice=[w], config=SqpConfig(multistart=8))
            assert len(res.solutions) == 1
            got = res.solutions.raw[0, j]
            assert abs(got - best[j, j]) / best[j, j] < 0.01
            assert got >= best[j, j] - 1e-9  # the continuous optimum is at least as good as the grid

    def test_solutions_non_dominated(self, sweep_i):
        s = sweep_i.solutions
        assert len(s) <= 101
        assert pareto_mask(s.canonical).all()
        assert np.all(s.rank == 1)

    def test_records(self, sweep_i):
        assert len(sweep_i.records) == 101
        summary = sweep_i.summary()
        assert summary["n_weights"] == 101
        assert summary["n_nondominated"] == len(sweep_i.solutions)

    def test_clusters_at_extremes(self, sweep_i, grid_i):
        _, best = grid_i
        raw = sweep_i.deduplicated.raw
        near = [min(np.max(np.abs(r - best[j]) / np.abs(best[j])) for j in range(2)) < 0.01 for r in raw]
        assert np.mean(near) >= 0.95

    def test_three_objective_lattice(self):
        res = weighted_sum_sweep(builtin("III"), lattice=weight_lattice(3, 0.5), config=SqpConfig(multistart=4))
        assert len(res.records) == 6
        assert pareto_mask(res.solutions.canonical).all()

    def test_non_convergence_warns_and_skips(self):
        p = builtin("I")
        cfg = SqpConfig(max_iterations=1, multistart=2)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                res = weighted_sum_sweep(p, lattice=[[0.5, 0.5], [1.0, 0.0]], config=cfg)
            except RuntimeError:
                res = None
        if res is None or not all(r["converged"] for r in res.records):
            assert any("no start converged" in str(w.message) for w in caught)

    def test_deterministic(self):
        p = builtin("I")
        cfg = SqpConfig(multistart=4)
        a = weighted_sum_sweep(p, lattice=weight_lattice(2, 0.25), config=cfg, seed=3)
        b = weighted_sum_sweep(p, lattice=weight_lattice(2, 0.25), config=cfg, seed=3)
        assert a.solutions.to_csv() == b.solutions.to_csv()
