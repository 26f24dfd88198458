import numpy as np
import pytest

from calibr.calibrations import catalogue
from calibr.exterior import (ExteriorElement, SimplePlane, angular_distance,
                             interior_product, pairing, simple_from_frame,
                             wedge)
from calibr.grassmann import (FormEvaluator, comass, constrained_extremum,
                              hyperplane_basis, polish_plane, pullback,
                              random_frame, random_plane_set,
                              reduce_calibration, rng_stream,
                              sample_grassmannian)


def dx(n, *idx):
    return ExteriorElement.basis(n, idx)


class TestFormEvaluator:
    def test_matches_exterior_pairing(self):
        rng = np.random.default_rng(0)
        for name, params in [("kaehler", (2, 1)), ("associative", ())]:
            cal = catalogue(name, *params)
            ev = FormEvaluator(cal.form)
            for _ in range(10):
                U = random_frame(cal.n, cal.p, rng)
                _, xi = simple_from_frame(U.T)
                assert abs(ev.value(U) - pairing(cal.form, xi)) < 1e-12

    def test_gradient_against_differences(self):
        rng = np.random.default_rng(1)
        cal = catalogue("special_lagrangian", 3)
        ev = FormEvaluator(cal.form)
        U = random_frame(6, 3, rng)
        _, G = ev.value_and_grad(U)
        h = 1e-6
        for _ in range(8):
            i, k = rng.integers(0, 6), rng.integers(0, 3)
            Up, Um = U.copy(), U.copy()
            Up[i, k] += h
            Um[i, k] -= h
            fd = (ev.value(Up) - ev.value(Um)) / (2 * h)
            assert abs(fd - G[i, k]) < 1e-6


class TestComass:
    def test_single_plane(self):
        res = comass(dx(4, 1, 2), multistarts=20, seed=0)
        assert abs(res.value - 1.0) < 1e-12
        theta, oriented = angular_distance(res.plane, SimplePlane(np.eye(4)[:2]))
        assert theta < 1e-6 and oriented

    def test_omega(self):
        res = comass(catalogue("kaehler", 2, 1).form, multistarts=30, seed=0)
        assert abs(res.value - 1.0) < 1e-10
        assert res.saturated

    def test_split_volume_frozen_oracle(self):
        # brute-force principal-angle grid put the maximum at exactly 1.0
        phi = dx(6, 1, 2, 3) + dx(6, 4, 5, 6)
        res = comass(phi, multistarts=60, seed=0)
        assert abs(res.value - 1.0) < 1e-9

    def test_homogeneity(self):
        rng = np.random.default_rng(2)
        phi = catalogue("kaehler", 2, 1).form
        for c in rng.uniform(-3, 3, size=4):
            if abs(c) < 0.1:
                continue
            res = comass(c * phi, multistarts=20, seed=1)
            assert abs(res.value - abs(c)) < 1e-8

    def test_lower_bound_consistency(self):
        rng = np.random.default_rng(3)
        phi = catalogue("special_lagrangian", 2).form
        res = comass(phi, multistarts=30, seed=2)
        for _ in range(20):
            U = random_frame(4, 2, rng)
            ev = FormEvaluator(phi)
            assert res.value >= abs(ev.value(U)) - 1e-9

    def test_determinism(self):
        phi = catalogue("associative").form
        a = comass(phi, multistarts=15, seed=42)
        b = comass(phi, multistarts=15, seed=42)
        assert a.value == b.value
        assert np.array_equal(a.plane.frame, b.plane.frame)
        assert np.array_equal(a.values, b.values)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            comass(ExteriorElement.zero(4, 2))


class TestSampling:
    def test_lambda_singleton(self):
        cal = catalogue("lambda_example", 0.5)
        ss = sample_grassmannian(cal, tol=1e-6, count=20, seed=7)
        assert len(ss) == 1
        assert ss.exhausted
        theta, oriented = angular_distance(ss.planes[0],
                                           SimplePlane(np.eye(4)[:2]))
        assert theta < 1e-6 and oriented

    def test_volume_singleton(self):
        ss = sample_grassmannian(catalogue("volume", 3), count=5, seed=1)
        assert len(ss) == 1

    def test_sample_values_within_band(self):
        cal = catalogue("cayley")
        ss = sample_grassmannian(cal, tol=1e-6, count=25, seed=5)
        assert len(ss) == 25
        assert min(ss.values) >= 1.0 - 1e-6
        # planes pass the invariant: wedge of frame is unit simple
        for pl in ss.planes:
            assert abs(pl.pvector().norm() - 1.0) < 1e-10

    def test_dedup_distinct(self):
        cal = catalogue("kaehler", 2, 1)
        ss = sample_grassmannian(cal, count=15, seed=9, dedup_angle=1e-3)
        for i in range(len(ss)):
            for j in range(i + 1, len(ss)):
                theta, oriented = angular_distance(ss.planes[i], ss.planes[j])
                assert not (oriented and theta <= 1e-3)

    def test_comass_confirmation_failure(self):
        from calibr.calibrations import Calibration
        bogus = Calibration(2.0 * catalogue("kaehler", 2, 1).form, "bogus")
        with pytest.raises(ValueError, match="comass confirmation"):
            sample_grassmannian(bogus, count=5, seed=0)


class TestConstrainedExtremum:
    def test_phi_on_itself(self):
        cal = catalogue("kaehler", 2, 1)
        ss = sample_grassmannian(cal, count=20, seed=4)
        res = constrained_extremum(cal.form, cal, ss, "min", starts_limit=8)
        assert abs(res.value - 1.0) < 1e-9

    def test_complex_line_minimum_frozen_oracle(self):
        # explicit complex-line parametrization gives min dx2^dy2 = 0 at the
        # x1y1 line (pre-build oracle)
        cal = catalogue("kaehler", 2, 1)
        ss = sample_grassmannian(cal, count=30, seed=4)
        alpha = ExteriorElement(4, 2, {(3, 4): 1.0})
        res = constrained_extremum(alpha, cal, ss, "min", starts_limit=10)
        assert abs(res.value) < 1e-9
        # witness should be (close to) the x1y1 complex line
        proj = np.linalg.norm(res.plane.frame[:, 2:])
        assert proj < 1e-4

    def test_negated_form(self):
        cal = catalogue("kaehler", 2, 1)
        ss = sample_grassmannian(cal, count=20, seed=4)
        res = constrained_extremum(-1.0 * cal.form, cal, ss, "min",
                                   starts_limit=8)
        assert abs(res.value + 1.0) < 1e-9

    def test_volume_reversed_component_excluded(self):
        # on O(n) the ascent cannot leave the reversed component, so the
        # feasibility filter must discard those starts
        cal = catalogue("volume", 3)
        ss = sample_grassmannian(cal, count=4, seed=2)
        res = constrained_extremum(cal.form, cal, ss, "min", extra_starts=6)
        assert abs(res.value - 1.0) < 1e-9

    def test_empty_samples_rejected(self):
        from calibr.grassmann import PlaneSampleSet
        cal = catalogue("kaehler", 2, 1)
        empty = PlaneSampleSet([], [], 1e-6, 0, 0)
        with pytest.raises(ValueError):
            constrained_extremum(cal.form, cal, empty, "min")


class TestFirstCousinPrinciple:
    @pytest.mark.parametrize("name,params", [
        ("kaehler", (2, 1)), ("kaehler", (3, 2)), ("special_lagrangian", (3,)),
        ("associative", ()), ("coassociative", ()), ("cayley", ()),
        ("quaternionic", (2,)), ("lambda_example", (0.5,))])
    def test_on_catalogue(self, name, params):
        # phi(b ^ (a -| xi)) = 0 for xi in G(phi), a in span, b orthogonal
        cal = catalogue(name, *params)
        ss = sample_grassmannian(cal, count=6, seed=13)
        rng = np.random.default_rng(17)
        P = None
        for pl in ss.planes:
            xi = pl.pvector()
            proj = pl.span_projector()
            for _ in range(10):
                a = proj @ rng.standard_normal(cal.n)
                b = (np.eye(cal.n) - proj) @ rng.standard_normal(cal.n)
                if np.linalg.norm(b) < 1e-12:
                    continue
                val = pairing(cal.form,
                              wedge(ExteriorElement.from_vector(b),
                                    interior_product(a, xi)))
                assert abs(val) < 1e-9


class TestPullbackAndReduce:
    def test_pullback_identity(self):
        cal = catalogue("kaehler", 2, 1)
        assert pullback(cal.form, np.eye(4)).allclose(cal.form)

    def test_pullback_to_plane(self):
        # restricting omega to the x1y1-plane gives the area form
        Q = np.eye(4)[:, :2]
        psi = pullback(catalogue("kaehler", 2, 1).form, Q)
        assert psi.coeffs == {(1, 2): 1.0}

    def test_hyperplane_basis(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            u = rng.standard_normal(6)
            u /= np.linalg.norm(u)
            Q = hyperplane_basis(u)
            assert np.allclose(Q.T @ Q, np.eye(5), atol=1e-12)
            assert np.abs(Q.T @ u).max() < 1e-12

    def test_lambda_reduction(self):
        cal = catalogue("lambda_example", 0.5)
        ss = sample_grassmannian(cal, count=8, seed=3)
        red = reduce_calibration(cal, ss)
        assert red.W.shape[0] == 2
        assert np.abs(red.W[:, 2:]).max() < 1e-9
        assert not red.elliptic
        assert red.witness is not None
        assert np.abs(red.witness[:2]).max() < 1e-9
        assert red.witness_residual < 1e-9
        psi_vec = red.psi.to_coeff_vector()
        assert abs(abs(psi_vec[0]) - 1.0) < 1e-9

    def test_volume_elliptic(self):
        cal = catalogue("volume", 4)
        ss = sample_grassmannian(cal, count=3, seed=3)
        red = reduce_calibration(cal, ss)
        assert red.elliptic and red.W.shape[0] == 4

    def test_kaehler_elliptic_frozen_oracle(self):
        # every unit vector lies in the complex line span(u, Ju)
        cal = catalogue("kaehler", 2, 1)
        ss = sample_grassmannian(cal, count=30, seed=3)
        red = reduce_calibration(cal, ss)
        assert red.elliptic


class TestSymbolIdentity:
    def test_projection_identity_random(self):
        # Eq-style identity: pairing(e ^ (e -| phi), xi) = |P_xi e|^2
        cal = catalogue("kaehler", 3, 2)
        ss = sample_grassmannian(cal, count=10, seed=19)
        rng = np.random.default_rng(23)
        for pl in ss.planes:
            for _ in range(20):
                e = rng.standard_normal(6)
                e /= np.linalg.norm(e)
                sym = wedge(ExteriorElement.from_vector(e),
                            interior_product(e, cal.form))
                lhs = pairing(sym, pl.pvector())
                rhs = float(np.linalg.norm(pl.frame @ e) ** 2)
                assert abs(lhs - rhs) < 1e-9
