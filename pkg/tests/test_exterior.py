import numpy as np
import pytest

from calibr.exterior import (
    ExteriorElement, SimplePlane, angular_distance, derivation_extend,
    form_from_json, form_to_json, hodge_star, interior_product, is_simple,
    pairing, simple_from_frame, wedge,
)

rng = np.random.default_rng(7)


def dx(n, *idx):
    return ExteriorElement.basis(n, idx)


def random_element(n, p, rng):
    from calibr.exterior import lex_indices
    basis = lex_indices(n, p)
    coeffs = {i: rng.standard_normal() for i in basis}
    return ExteriorElement(n, p, coeffs)


class TestWedge:
    def test_disjoint_indices(self):
        out = wedge(dx(4, 1, 2), dx(4, 3, 4))
        assert out.coeffs == {(1, 2, 3, 4): 1.0}

    def test_alternation(self):
        assert wedge(dx(4, 1), dx(4, 1)).is_zero()

    def test_omega_squared(self):
        omega = dx(4, 1, 2) + dx(4, 3, 4)
        out = wedge(omega, omega)
        assert out.allclose(2.0 * dx(4, 1, 2, 3, 4))

    def test_graded_anticommutativity(self):
        for pa, pb in [(1, 1), (1, 2), (2, 2), (2, 3)]:
            a = random_element(5, pa, rng)
            b = random_element(5, pb, rng)
            lhs = wedge(a, b)
            rhs = (-1.0) ** (pa * pb) * wedge(b, a)
            assert lhs.allclose(rhs, tol=1e-12)

    def test_degree_overflow(self):
        with pytest.raises(ValueError):
            wedge(dx(4, 1, 2, 3), dx(4, 2, 3, 4))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            wedge(dx(4, 1), dx(5, 2))


class TestInteriorProduct:
    def test_leading_index(self):
        out = interior_product([1, 0, 0, 0], dx(4, 1, 2))
        assert out.coeffs == {(2,): 1.0}

    def test_sign_from_position(self):
        out = interior_product([0, 1, 0, 0], dx(4, 1, 2))
        assert out.coeffs == {(1,): -1.0}

    def test_absent_index(self):
        assert interior_product([0, 0, 1, 0], dx(4, 1, 2)).is_zero()

    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            interior_product([1.0], ExteriorElement(1, 0, {(): 1.0}))

    def test_antiderivation(self):
        # v -| (a^b) = (v-|a)^b + (-1)^deg(a) a^(v-|b)
        for _ in range(20):
            a = random_element(6, 2, rng)
            b = random_element(6, 3, rng)
            v = rng.standard_normal(6)
            lhs = interior_product(v, wedge(a, b))
            rhs = wedge(interior_product(v, a), b) + \
                wedge(a, interior_product(v, b))
            assert lhs.allclose(rhs, tol=1e-12)


class TestDerivationExtend:
    def test_identity_gives_degree(self):
        for p in (1, 2, 3):
            phi = random_element(5, p, rng)
            out = derivation_extend(np.eye(5), phi)
            assert out.allclose(float(p) * phi, tol=1e-12)

    def test_single_slot(self):
        A = np.diag([1.0, 0, 0, 0])
        out = derivation_extend(A, dx(4, 1, 2))
        assert out.allclose(dx(4, 1, 2))

    def test_trace_cancellation(self):
        omega = dx(4, 1, 2) + dx(4, 3, 4)
        A = np.diag([2.0, -2.0, 0, 0])
        out = derivation_extend(A, omega)
        assert abs(pairing(out, dx(4, 1, 2))) < 1e-14

    def test_trace_identity_on_phi_planes(self):
        # pairing(D_A phi, xi) = trace of A restricted to the plane, for
        # xi in G(phi); here phi = omega and xi a coordinate complex line
        omega = dx(4, 1, 2) + dx(4, 3, 4)
        frame = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]])
        plane, xi = simple_from_frame(frame)
        for _ in range(50):
            A = rng.standard_normal((4, 4))
            A = (A + A.T) / 2
            lhs = pairing(derivation_extend(A, omega), xi)
            rhs = sum(f @ A @ f for f in plane.frame)
            assert abs(lhs - rhs) < 1e-12


class TestPairing:
    def test_matching(self):
        assert pairing(dx(4, 1, 2), dx(4, 1, 2)) == 1.0

    def test_orthogonal(self):
        assert pairing(dx(4, 1, 2), dx(4, 1, 3)) == 0.0

    def test_kaehler_angle(self):
        omega = dx(4, 1, 2) + dx(4, 3, 4)
        for theta in (0.0, 0.3, 1.2):
            v = np.array([0, np.cos(theta), np.sin(theta), 0.0])
            _, xi = simple_from_frame(np.array([[1.0, 0, 0, 0], v]))
            assert abs(pairing(omega, xi) - np.cos(theta)) < 1e-12

    def test_positive_definite(self):
        for _ in range(10):
            a = random_element(5, 2, rng)
            assert pairing(a, a) >= 0.0
            assert abs(pairing(a, a) - a.norm() ** 2) < 1e-12


class TestSimpleFromFrame:
    def test_coordinate_plane(self):
        _, xi = simple_from_frame(np.eye(4)[:2])
        assert xi.allclose(dx(4, 1, 2))

    def test_mixed_frame(self):
        frame = np.array([[1.0, 0, 0, 0], [0, 1.0, 1.0, 0]])
        _, xi = simple_from_frame(frame)
        s = 1 / np.sqrt(2)
        assert abs(xi.coeffs[(1, 2)] - s) < 1e-12
        assert abs(xi.coeffs[(1, 3)] - s) < 1e-12

    def test_inplane_rotation_invariance(self):
        base = np.eye(4)[:2]
        for theta in (0.4, 1.0, 2.5):
            c, s = np.cos(theta), np.sin(theta)
            rot = np.array([[c, s, 0, 0], [-s, c, 0, 0]])
            _, xi = simple_from_frame(rot)
            assert xi.allclose(dx(4, 1, 2), tol=1e-12)

    def test_rank_deficient(self):
        with pytest.raises(ValueError):
            simple_from_frame(np.array([[1.0, 0, 0, 0], [2.0, 0, 0, 0]]))

    def test_output_is_simple(self):
        for _ in range(10):
            frame = rng.standard_normal((3, 6))
            _, xi = simple_from_frame(frame)
            assert is_simple(xi, tol=1e-10)
            assert abs(xi.norm() - 1.0) < 1e-10


class TestIsSimple:
    def test_coordinate_plane(self):
        assert is_simple(dx(4, 1, 2))

    def test_nondecomposable(self):
        assert not is_simple(dx(4, 1, 2) + dx(4, 3, 4))

    def test_factorable(self):
        assert is_simple(dx(4, 1, 2) + dx(4, 1, 3))

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            is_simple(ExteriorElement.zero(4, 2))


class TestHodgeStar:
    def test_basic(self):
        assert hodge_star(dx(4, 1, 2)).allclose(dx(4, 3, 4))

    def test_volume(self):
        one = ExteriorElement(3, 0, {(): 1.0})
        assert hodge_star(one).allclose(dx(3, 1, 2, 3))

    def test_double_dual_sign(self):
        for n, p in [(4, 2), (5, 2), (6, 3), (7, 3)]:
            a = random_element(n, p, rng)
            ss = hodge_star(hodge_star(a))
            assert ss.allclose((-1.0) ** (p * (n - p)) * a, tol=1e-12)

    def test_inner_product_identity(self):
        # a ^ *b = <a,b> vol
        for _ in range(10):
            a = random_element(5, 2, rng)
            b = random_element(5, 2, rng)
            prod = wedge(a, hodge_star(b))
            vol = prod.coeffs.get((1, 2, 3, 4, 5), 0.0)
            assert abs(vol - pairing(a, b)) < 1e-12


class TestAngularDistance:
    def test_same_plane(self):
        a = SimplePlane(np.eye(4)[:2])
        theta, oriented = angular_distance(a, a)
        assert theta < 1e-12 and oriented

    def test_reversed_orientation(self):
        a = SimplePlane(np.eye(4)[:2])
        b = SimplePlane(np.eye(4)[[1, 0]])
        theta, oriented = angular_distance(a, b)
        assert theta < 1e-12 and not oriented


class TestJson:
    def test_round_trip(self):
        a = random_element(5, 2, rng)
        assert form_from_json(form_to_json(a)).allclose(a)

    def test_rejects_bad_indices(self):
        with pytest.raises(ValueError):
            form_from_json({"n": 4, "p": 2,
                            "terms": [{"indices": [2, 1], "coeff": 1.0}]})
        with pytest.raises(ValueError):
            form_from_json({"n": 4, "p": 2,
                            "terms": [{"indices": [1, 5], "coeff": 1.0}]})
        with pytest.raises(ValueError):
            form_from_json({"n": 4, "p": 2, "bogus": 1, "terms": []})
