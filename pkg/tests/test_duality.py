import numpy as np
import pytest

from calibr.calibrations import catalogue
from calibr.duality import (active_site_hull_check, assemble_boundary_model,
                            assemble_jensen_model, atom_boundary_values,
                            boundary_alternative, build_boundary_model,
                            build_jensen_model, form_test_family,
                            jensen_alternative, scalar_test_family)
from calibr.exterior import SimplePlane
from calibr.grassmann import rng_stream, sample_grassmannian
from calibr.polynomial import integrate_over_box


@pytest.fixture(scope="module")
def omega():
    return catalogue("kaehler", 2, 1)


@pytest.fixture(scope="module")
def lam():
    return catalogue("lambda_example", 0.5)


@pytest.fixture(scope="module")
def ss(omega):
    return sample_grassmannian(omega, tol=1e-8, count=8, seed=5)


@pytest.fixture(scope="module")
def ss_lam(lam):
    return sample_grassmannian(lam, tol=1e-8, count=4, seed=5)


class TestFamilies:
    def test_scalar_family_orthonormal(self):
        lo, hi = np.array([-1.0] * 2), np.array([1.0] * 2)
        fam = scalar_test_family(2, 2, lo, hi)
        assert len(fam) == 5            # nonconstant monomials up to deg 2
        for i, p in enumerate(fam):
            for j, q in enumerate(fam):
                ip = integrate_over_box(p * q, lo, hi)
                assert abs(ip - (1.0 if i == j else 0.0)) < 1e-10

    def test_form_family_size(self):
        lo, hi = np.array([-1.0] * 4), np.array([1.0] * 4)
        fam = form_test_family(4, 2, 1, lo, hi)
        assert len(fam) == 4 * 5        # C(4,1) x monomials deg <= 1

    def test_rank_check_fires(self, omega, ss):
        from calibr.duality import FiniteDualityModel, _check_family_rank
        from calibr.polynomial import Polynomial
        fam = [Polynomial.coordinate(4, 1), Polynomial.coordinate(4, 1)]
        model = FiniteDualityModel(omega, np.zeros((1, 4)),
                                   [list(ss.planes[:2])], fam, "jensen", 1)
        with pytest.raises(ValueError, match="rank"):
            _check_family_rank(model)


class TestBoundaryAlternative:
    def test_zero_boundary_feasible(self, omega, ss):
        model = build_boundary_model(omega, np.zeros((2, 4)), ss, degree=1,
                                     planes_per_site=3)
        res = boundary_alternative(model, np.zeros(len(model.test_family)))
        assert res.primal == 'Feasible' and res.dual is None
        assert res.consistent

    def test_atom_boundary_feasible(self, omega, ss):
        rng = rng_stream(1, 0)
        sites = rng.uniform(-1, 1, size=(4, 4))
        model = build_boundary_model(omega, sites, ss, degree=2,
                                     planes_per_site=4)
        S = atom_boundary_values(model, 0, model.dictionary[0][0])
        res = boundary_alternative(model, S)
        assert res.primal == 'Feasible'
        assert res.consistent
        A, s = assemble_boundary_model(model, S)
        assert np.abs(A @ res.weights - s).max() < 1e-7

    def test_negated_atom_infeasible_lambda(self, lam, ss_lam):
        rng = rng_stream(1, 1)
        sites = rng.uniform(-1, 1, size=(4, 4))
        model = build_boundary_model(lam, sites, ss_lam, degree=2,
                                     planes_per_site=1)
        S = atom_boundary_values(model, 0, model.dictionary[0][0])
        res = boundary_alternative(model, -S)
        assert res.primal == 'Infeasible'
        assert res.dual == 'Certificate'
        assert res.margin > 1e-6
        assert res.consistent
        # certificate verifies: A^T a >= 0 and s.a < 0
        A, s = assemble_boundary_model(model, -S)
        assert (A.T @ res.certificate).min() > -1e-8
        assert s @ res.certificate < 0

    def test_mass_bound_threshold(self, omega, ss):
        rng = rng_stream(1, 2)
        sites = rng.uniform(-1, 1, size=(3, 4))
        model = build_boundary_model(omega, sites, ss, degree=1,
                                     planes_per_site=3)
        S = atom_boundary_values(model, 1, model.dictionary[1][2])
        base = boundary_alternative(model, S, lam=1e9)
        lam_star = base.meta["lambda_threshold"]
        assert abs(lam_star - 1.0) < 1e-7    # a unit atom costs mass one
        below = boundary_alternative(model, S, lam=0.5)
        above = boundary_alternative(model, S, lam=1.5)
        assert below.primal == 'Infeasible' and below.dual == 'Certificate'
        assert above.primal == 'Feasible'
        assert below.consistent and above.consistent

    def test_monotone_in_family_degree(self, omega, ss):
        # more constraints can only shrink the feasible set
        rng = rng_stream(1, 3)
        sites = rng.uniform(-1, 1, size=(3, 4))
        flips = None
        feasible = {}
        for deg in (1, 2, 3):
            model = build_boundary_model(omega, sites, ss, degree=deg,
                                         planes_per_site=3)
            A, _ = assemble_boundary_model(
                model, np.zeros(len(model.test_family)))
            rng2 = rng_stream(2, 7)
            c = np.abs(rng2.standard_normal(A.shape[1]))
            S = A @ c                   # always feasible by construction
            res = boundary_alternative(model, S)
            feasible[deg] = res.primal == 'Feasible'
        assert all(feasible.values())

    def test_random_instances_consistent(self, omega, ss):
        ties = consistent = 0
        N = 40
        for inst in range(N):
            rng = rng_stream(3, inst)
            sites = rng.uniform(-1, 1, size=(4, 4))
            model = build_boundary_model(omega, sites, ss, degree=1,
                                         planes_per_site=3)
            A, _ = assemble_boundary_model(
                model, np.zeros(len(model.test_family)))
            S = A @ np.abs(rng.standard_normal(A.shape[1]))
            if inst % 2 == 1:
                S = S * rng.choice([-1.0, 1.0], size=len(S))
            res = boundary_alternative(model, S)
            if res.boundary_tie:
                ties += 1
            elif res.consistent:
                consistent += 1
        assert consistent == N - ties


class TestJensenAlternative:
    def test_square_centroid_feasible(self, omega, ss):
        e12 = SimplePlane(np.eye(4)[:2])
        sq = np.array([[1, 1, 0, 0], [-1, 1, 0, 0], [-1, -1, 0, 0],
                       [1, -1, 0, 0], [0.0, 0, 0, 0]])
        model = build_jensen_model(omega, sq, ss, degree=2,
                                   planes_per_site=6, extra_planes=[e12])
        res = jensen_alternative(model, [0, 1, 2, 3], 4)
        assert res.primal == 'Feasible'
        assert res.consistent
        A, b = assemble_jensen_model(model, [0, 1, 2, 3], 4)
        assert np.abs(A @ res.weights - b).max() < 1e-7
        chk = active_site_hull_check(model, [0, 1, 2, 3], 4, res)
        assert chk["applicable"] and chk["ok"]

    def test_far_point_linear_separation(self, omega, ss):
        pts = np.array([[1, 1, 0, 0], [-1, 1, 0, 0], [-1, -1, 0, 0],
                        [1, -1, 0, 0], [5.0, 0, 0, 0]])
        model = build_jensen_model(omega, pts, ss, degree=2,
                                   planes_per_site=4)
        res = jensen_alternative(model, [0, 1, 2, 3], 4)
        assert res.dual == 'Certificate'
        assert res.margin > 0.1          # comfortably above the margin floor
        assert res.consistent

    def test_singleton_K(self, omega, ss):
        pts = np.array([[0.0, 0, 0, 0], [1.0, 1, 1, 1]])
        model = build_jensen_model(omega, pts, ss, degree=1,
                                   planes_per_site=4)
        res = jensen_alternative(model, [0], 1)
        assert res.dual == 'Certificate'
        assert res.consistent

    def test_empty_K_rejected(self, omega, ss):
        pts = np.array([[0.0, 0, 0, 0], [1.0, 1, 1, 1]])
        model = build_jensen_model(omega, pts, ss, degree=1,
                                   planes_per_site=2)
        with pytest.raises(ValueError, match="nonempty"):
            jensen_alternative(model, [], 1)

    def test_x_in_K_rejected(self, omega, ss):
        pts = np.array([[0.0, 0, 0, 0], [1.0, 1, 1, 1]])
        model = build_jensen_model(omega, pts, ss, degree=1,
                                   planes_per_site=2)
        with pytest.raises(ValueError, match="K site"):
            jensen_alternative(model, [0, 1], 1)

    def test_random_instances_consistent(self, omega, ss):
        ties = consistent = 0
        N = 30
        for inst in range(N):
            rng = rng_stream(4, inst)
            pts = rng.uniform(-1, 1, size=(5, 4))
            model = build_jensen_model(omega, pts, ss, degree=2,
                                       planes_per_site=4)
            res = jensen_alternative(model, [0, 1, 2, 3], 4)
            if res.boundary_tie:
                ties += 1
            elif res.consistent:
                consistent += 1
        assert consistent == N - ties

    def test_family_monotone_shrinks_primal(self, omega, ss):
        # enlarging the family adds equations: a degree-d feasible instance
        # can only stay feasible or flip to infeasible at degree d+1
        flips_wrong_way = 0
        for inst in range(10):
            rng = rng_stream(5, inst)
            pts = rng.uniform(-1, 1, size=(5, 4))
            feas = {}
            for deg in (1, 2, 3):
                model = build_jensen_model(omega, pts, ss, degree=deg,
                                           planes_per_site=4)
                res = jensen_alternative(model, [0, 1, 2, 3], 4)
                feas[deg] = res.primal == 'Feasible'
            if (not feas[1] and feas[2]) or (not feas[2] and feas[3]):
                flips_wrong_way += 1
        assert flips_wrong_way == 0
