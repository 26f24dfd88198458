import numpy as np
import pytest

from calibr.calibrations import catalogue
from calibr.cones import (cone_membership, contraction_boundary,
                          lambda_span, lemma_2_5_check, mass_norm_estimate,
                          positive_basis, positivity_classify)
from calibr.exterior import ExteriorElement, pairing, simple_from_frame
from calibr.grassmann import random_plane_set, rng_stream, sample_grassmannian


@pytest.fixture(scope="module")
def omega():
    return catalogue("kaehler", 2, 1)


@pytest.fixture(scope="module")
def lam():
    return catalogue("lambda_example", 0.5)


@pytest.fixture(scope="module")
def ss_omega(omega):
    return sample_grassmannian(omega, tol=1e-6, count=40, seed=5)


@pytest.fixture(scope="module")
def ss_lam(lam):
    return sample_grassmannian(lam, tol=1e-6, count=10, seed=5)


@pytest.fixture(scope="module")
def gens():
    return random_plane_set(4, 2, count=40, seed=9)


def e_form(*idx):
    return ExteriorElement.basis(4, idx)


class TestLambdaSpan:
    def test_dimensions_frozen_oracle(self, ss_omega, ss_lam):
        # explicit complex-line family has rank 4 (pre-build oracle)
        assert lambda_span(ss_omega).dim == 4
        assert lambda_span(ss_lam).dim == 1

    def test_volume_dimension(self):
        ss = sample_grassmannian(catalogue("volume", 3), count=3, seed=1)
        assert lambda_span(ss).dim == 1

    def test_projection_idempotent(self, ss_omega):
        span = lambda_span(ss_omega)
        rng = np.random.default_rng(0)
        from calibr.exterior import lex_indices
        el = ExteriorElement(4, 2, {i: rng.standard_normal()
                                    for i in lex_indices(4, 2)})
        once = span.project(el)
        twice = span.project(once)
        assert once.allclose(twice, tol=1e-12)


class TestConeMembership:
    def test_grassmannian_atom(self, omega, ss_omega):
        rep = cone_membership(e_form(1, 2), omega, ss_omega)
        assert rep.status in ("Interior", "Boundary")
        assert rep.meta["residual"] <= 1e-8
        assert rep.certificate is not None
        # certificate reproduces the element within 1e-8
        recon = ExteriorElement.zero(4, 2)
        for w, pl in zip(rep.certificate["weights"],
                         rep.certificate["planes"]):
            recon = recon + w * pl.pvector()
        assert (recon - e_form(1, 2)).norm() < 1e-8

    def test_midpoint_member(self, omega, ss_omega):
        xi = 0.5 * ss_omega.planes[0].pvector() + \
            0.5 * ss_omega.planes[1].pvector()
        rep = cone_membership(xi, omega, ss_omega)
        assert rep.status in ("Interior", "Boundary")
        assert rep.certificate is not None

    def test_outside_by_low_pairing(self, lam, ss_lam):
        # phi(e34) = 1/2 < 1 at unit mass: membership is impossible
        rep = cone_membership(e_form(3, 4), lam, ss_lam)
        assert rep.status == "Outside"
        assert rep.margin < -0.5

    def test_eq_2_4_random_simple(self, omega, ss_omega):
        # a unit simple 2-vector is a member iff phi(xi) is 1
        rng = np.random.default_rng(31)
        members = outsiders = 0
        for _ in range(10):
            _, xi = simple_from_frame(rng.standard_normal((2, 4)))
            val = pairing(omega.form, xi)
            rep = cone_membership(xi, omega, ss_omega, tol=1e-6)
            if abs(val - 1.0) <= 1e-6:
                assert rep.status != "Outside"
                members += 1
            else:
                assert rep.status == "Outside"
                outsiders += 1
        assert outsiders >= 5  # random planes are generically not calibrated

    def test_mismatch_rejected(self, omega, ss_omega):
        with pytest.raises(ValueError):
            cone_membership(ExteriorElement.basis(6, (1, 2)), omega, ss_omega)


class TestMassNorm:
    def test_simple_unit(self, gens):
        up, lo, _ = mass_norm_estimate(e_form(1, 2), gens)
        assert abs(up - 1.0) < 1e-8 and abs(lo - 1.0) < 1e-8

    def test_pair_frozen_oracle(self, gens):
        # LP + dual-certificate oracle both gave exactly 2 (pre-build)
        up, lo, meta = mass_norm_estimate(e_form(1, 2) + e_form(3, 4), gens)
        assert abs(up - 2.0) < 2e-6 and abs(lo - 2.0) < 2e-6
        assert up >= lo

    def test_homogeneity(self, gens):
        rng = np.random.default_rng(3)
        _, xi = simple_from_frame(rng.standard_normal((2, 4)))
        for c in (-2.5, 0.7, 4.0):
            up, lo, _ = mass_norm_estimate(c * xi, gens)
            assert abs(up - abs(c)) < 1e-7 * max(1, abs(c))
            assert abs(lo - abs(c)) < 1e-7 * max(1, abs(c))

    def test_upper_at_least_lower_random(self, gens):
        rng = np.random.default_rng(4)
        from calibr.exterior import lex_indices
        for _ in range(5):
            el = ExteriorElement(4, 2, {i: rng.standard_normal()
                                        for i in lex_indices(4, 2)})
            up, lo, _ = mass_norm_estimate(el, gens)
            assert up >= lo - 1e-12

    def test_zero_rejected(self, gens):
        with pytest.raises(ValueError):
            mass_norm_estimate(ExteriorElement.zero(4, 2), gens)


class TestPositivity:
    def test_phi_interior(self, omega, ss_omega):
        rep = positivity_classify(omega.form, omega, ss_omega,
                                  starts_limit=10)
        assert rep.status == "Interior"
        assert abs(rep.margin - 1.0) < 1e-9

    def test_boundary_form_oracle(self, omega, ss_omega):
        # min of dx2^dy2 over complex lines is 0 (pre-build oracle)
        rep = positivity_classify(e_form(3, 4), omega, ss_omega,
                                  starts_limit=10)
        assert rep.status == "Boundary"
        assert abs(rep.margin) < 1e-6
        # witness is the x1y1 line
        assert np.linalg.norm(rep.witness.frame[:, 2:]) < 1e-3

    def test_outside(self, omega, ss_omega):
        rep = positivity_classify(-1.0 * e_form(1, 2), omega, ss_omega,
                                  starts_limit=10)
        assert rep.status == "Outside"
        assert abs(rep.margin + 1.0) < 1e-8

    def test_scaling_invariance(self, omega, ss_omega):
        alpha = omega.form + 0.3 * e_form(1, 3)
        rep1 = positivity_classify(alpha, omega, ss_omega, starts_limit=10)
        rep2 = positivity_classify(4.0 * alpha, omega, ss_omega,
                                   starts_limit=10)
        assert rep1.status == rep2.status
        assert abs(rep2.margin - 4.0 * rep1.margin) < 1e-6

    def test_polar_consistency(self, omega, ss_omega):
        # Interior form with margin m pairs >= m * sum(weights) with members
        alpha = omega.form
        rep_a = positivity_classify(alpha, omega, ss_omega, starts_limit=10)
        xi = 0.5 * ss_omega.planes[2].pvector() + \
            1.5 * ss_omega.planes[3].pvector()
        rep_x = cone_membership(xi, omega, ss_omega)
        assert rep_x.certificate is not None
        total = sum(rep_x.certificate["weights"])
        assert pairing(alpha, xi) >= rep_a.margin * total - 1e-6


class TestContractionBoundary:
    def test_kaehler_direction_in_line(self, omega, ss_omega):
        e = np.zeros(4)
        e[0] = 1.0
        rep = contraction_boundary(e, omega, ss_omega, starts_limit=10)
        assert rep.status == "Boundary"
        assert rep.meta["span_says_boundary"]
        assert rep.meta["consistent"]
        assert rep.meta["phi_e"].coeffs == {(3, 4): 1.0}

    def test_lambda_direction_outside_spans(self, lam, ss_lam):
        e = np.zeros(4)
        e[2] = 1.0
        rep = contraction_boundary(e, lam, ss_lam)
        assert rep.status == "Interior"
        assert abs(rep.margin - 1.0) < 1e-9
        assert not rep.meta["span_says_boundary"]
        assert rep.meta["consistent"]
        assert rep.meta["phi_e"].coeffs == {(1, 2): 1.0}

    def test_volume_contraction_vanishes(self):
        vol = catalogue("volume", 3)
        ss = sample_grassmannian(vol, count=3, seed=1)
        e = np.zeros(3)
        e[0] = 1.0
        rep = contraction_boundary(e, vol, ss)
        assert rep.status == "Boundary"
        assert rep.margin == 0.0

    def test_non_unit_rejected(self, omega, ss_omega):
        with pytest.raises(ValueError):
            contraction_boundary(np.array([2.0, 0, 0, 0]), omega, ss_omega)


class TestLemma25:
    def test_grassmannian_atom_all_hold(self, omega, ss_omega, gens):
        rep = lemma_2_5_check(e_form(1, 2), omega, ss_omega, gens)
        assert all(v[0] for v in rep.conditions.values())
        assert rep.agree

    def test_midpoint_all_hold(self, omega, ss_omega, gens):
        xi = 0.5 * ss_omega.planes[0].pvector() + \
            0.5 * ss_omega.planes[1].pvector()
        rep = lemma_2_5_check(xi, omega, ss_omega, gens)
        assert all(v[0] for v in rep.conditions.values())
        assert rep.agree
        lo, up = rep.mass_bracket
        assert lo <= 1.0 + 2e-5 and up >= 1.0 - 2e-5

    def test_low_pairing_all_fail(self, lam, ss_lam, gens):
        rep = lemma_2_5_check(e_form(3, 4), lam, ss_lam, gens)
        assert not any(v[0] for v in rep.conditions.values())
        assert rep.agree  # consistent failure

    def test_mass_precondition(self, omega, ss_omega, gens):
        with pytest.raises(ValueError, match="mass-normalization"):
            lemma_2_5_check(3.0 * e_form(1, 2), omega, ss_omega, gens)


class TestPositiveBasis:
    def test_volume(self):
        vol = catalogue("volume", 3)
        ss = sample_grassmannian(vol, count=3, seed=1)
        members, eps, margins = positive_basis(vol, ss)
        assert len(members) == 1
        assert margins[0] > 0

    def test_omega_rank_and_interior(self, omega, ss_omega):
        members, eps, margins = positive_basis(omega, ss_omega,
                                               starts_limit=8)
        assert len(members) == 6
        assert min(margins) > 1e-6
        mat = np.array([m.to_coeff_vector() for m in members])
        assert np.linalg.matrix_rank(mat, tol=1e-10) == 6

    def test_lambda_margin_bound(self, lam, ss_lam):
        members, eps, margins = positive_basis(lam, ss_lam)
        assert len(members) == 6
        # on the unique plane the margin is 1 + eps * b(plane) >= 1 - eps
        assert min(margins) >= 1.0 - eps - 1e-9
