import numpy as np
import pytest
from scipy.optimize import linprog

from calibr.lp import solve_lp

rng = np.random.default_rng(3)


class TestBasics:
    def test_tiny_equality(self):
        # min x1 + x2 s.t. x1 + 2 x2 = 4, x >= 0  -> x = (0, 2)
        res = solve_lp([1.0, 1.0], [[1.0, 2.0]], [4.0])
        assert res.status == 'optimal'
        assert abs(res.obj - 2.0) < 1e-9
        assert np.allclose(res.x, [0.0, 2.0], atol=1e-9)

    def test_infeasible_gives_farkas(self):
        # x1 + x2 = -1, x >= 0 is infeasible
        res = solve_lp([0.0, 0.0], [[1.0, 1.0]], [-1.0])
        assert res.status == 'infeasible'
        y = res.y
        # Farkas: y.A <= 0 and y.b > 0
        assert (y @ np.array([[1.0, 1.0]])).max() <= 1e-9
        assert y @ np.array([-1.0]) > 1e-9

    def test_unbounded(self):
        # min -x1 s.t. x1 - x2 = 0, x >= 0
        res = solve_lp([-1.0, 0.0], [[1.0, -1.0]], [0.0])
        assert res.status == 'unbounded'

    def test_upper_bounds(self):
        # min -x1 - x2 s.t. x1 + x2 = 1.5, 0 <= x <= 1
        res = solve_lp([-1.0, -1.0], [[1.0, 1.0]], [1.5], upper=[1.0, 1.0])
        assert res.status == 'optimal'
        assert abs(res.obj + 1.5) < 1e-9

    def test_free_variable_via_box(self):
        # min a s.t. a = -3, -5 <= a <= 5
        res = solve_lp([1.0], [[1.0]], [-3.0], lower=[-5.0], upper=[5.0])
        assert res.status == 'optimal'
        assert abs(res.x[0] + 3.0) < 1e-9

    def test_duals_match_objective(self):
        A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 2.0]])
        b = np.array([2.0, 3.0])
        c = np.array([1.0, 2.0, 0.5])
        res = solve_lp(c, A, b)
        assert res.status == 'optimal'
        # strong duality at optimum with x >= 0: obj = y.b
        assert abs(res.obj - res.y @ b) < 1e-8


class TestAgainstScipy:
    @pytest.mark.parametrize("seed", range(30))
    def test_random_equality_lps(self, seed):
        r = np.random.default_rng(seed)
        m, n = r.integers(1, 5), r.integers(2, 9)
        A = r.standard_normal((m, n))
        c = r.standard_normal(n)
        # build b from a random nonnegative point so some are feasible
        if seed % 3 == 0:
            b = r.standard_normal(m)          # possibly infeasible
        else:
            b = A @ np.abs(r.standard_normal(n))
        upper = None
        if seed % 2 == 0:
            upper = np.full(n, 10.0)          # keeps things bounded
        ours = solve_lp(c, A, b, upper=upper)
        bounds = [(0, None if upper is None else upper[j]) for j in range(n)]
        ref = linprog(c, A_eq=A, b_eq=b, bounds=bounds, method="highs")
        if ref.status == 2:
            assert ours.status == 'infeasible'
        elif ref.status == 3:
            assert ours.status == 'unbounded'
        else:
            assert ours.status == 'optimal'
            assert abs(ours.obj - ref.fun) < 1e-6 * max(1.0, abs(ref.fun))
            assert np.abs(A @ ours.x - b).max() < 1e-7

    def test_degenerate_cycling_guard(self):
        # classic Beale-style degeneracy; Bland must terminate
        A = np.array([
            [0.25, -8.0, -1.0, 9.0, 1.0, 0.0, 0.0],
            [0.5, -12.0, -0.5, 3.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        ])
        b = np.array([0.0, 0.0, 1.0])
        c = np.array([-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0])
        ours = solve_lp(c, A, b)
        ref = linprog(c, A_eq=A, b_eq=b, bounds=[(0, None)] * 7, method="highs")
        assert ours.status == 'optimal'
        assert abs(ours.obj - ref.fun) < 1e-8
