"""Convex geometry of the positivity cones attached to a calibration.

All cone queries run against a finite sample of the phi-Grassmannian with
local augmentation; every report carries the sample count and tolerances,
because the exact cones are only approximated from below by their sampled
surrogates.  Linear programs go through the in-repo bounded-variable simplex
(`calibr.lp`); the nonnegative least-squares subproblems use scipy's NNLS.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .calibrations import Calibration
from .exterior import (ExteriorElement, SimplePlane, interior_product,
                       lex_indices, pairing, wedge)
from .grassmann import (FormEvaluator, PlaneSampleSet, comass,
                        constrained_extremum, polish_plane, rng_stream)
from .lp import solve_lp

BOUNDARY_TOL = 1e-6


@dataclass
class ConeReport:
    status: str                      # Interior | Boundary | Outside
    margin: float
    certificate: dict | None = None
    tolerances: dict = field(default_factory=dict)
    witness: SimplePlane | None = None
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# the span of the sampled Grassmannian
# ---------------------------------------------------------------------------

@dataclass
class LambdaSpan:
    basis: np.ndarray        # (dim, C(n,p)) orthonormal rows
    perp: np.ndarray         # complement rows
    n: int
    p: int

    @property
    def dim(self):
        return self.basis.shape[0]

    def project_vec(self, vec):
        return self.basis.T @ (self.basis @ vec)

    def project(self, el: ExteriorElement) -> ExteriorElement:
        return ExteriorElement.from_coeff_vector(
            self.n, self.p, self.project_vec(el.to_coeff_vector()),
            drop_tol=0.0)


def lambda_span(samples: PlaneSampleSet, sv_cutoff=1e-8) -> LambdaSpan:
    """Orthonormal basis of span{sampled p-vectors} and its complement."""
    if len(samples) == 0:
        raise ValueError("empty sample set")
    rows = samples.pvectors()
    _, s, vt = np.linalg.svd(rows, full_matrices=True)
    d = int((s > sv_cutoff * s[0]).sum())
    pl = samples.planes[0]
    return LambdaSpan(vt[:d], vt[d:], pl.n, pl.p)


# ---------------------------------------------------------------------------
# membership in the positivity cone of p-vectors
# ---------------------------------------------------------------------------

def _dominant_simple_frame(vec, n, p):
    """For p = 2: the plane of the simple component closest to vec, via the
    associated skew matrix's top singular plane.  Returns a SimplePlane with
    the orientation matching vec, or None."""
    if p != 2:
        return None
    R = np.zeros((n, n))
    for (i, j), v in zip(lex_indices(n, 2), vec):
        R[i - 1, j - 1] = v
        R[j - 1, i - 1] = -v
    u, s, vt = np.linalg.svd(R)
    if s[0] < 1e-14:
        return None
    q, r = np.linalg.qr(np.column_stack([vt[0], u[:, 0]]))
    q = q * np.sign(np.diag(r))[None, :]
    plane = SimplePlane(q.T)
    if plane.pvector().to_coeff_vector() @ vec < 0:
        plane = SimplePlane(q.T[::-1].copy())
    return plane


def _augment_with_alignment(cal, planes, residual_vec, seed, round_idx,
                            target_vec=None):
    """Find a phi-plane best aligned with the residual direction."""
    n, p = cal.n, cal.p
    r = ExteriorElement.from_coeff_vector(n, p, residual_vec, drop_tol=0.0)
    nrm = r.norm()
    if nrm == 0.0:
        return None
    r = (1.0 / nrm) * r
    ev_r = FormEvaluator(r)
    scored = sorted(planes, key=lambda pl: -ev_r.value(pl.frame.T))[:4]
    extra = _dominant_simple_frame(residual_vec, n, p)
    if extra is not None:
        scored = scored + [extra]
    if target_vec is not None:
        tgt = _dominant_simple_frame(target_vec, n, p)
        if tgt is not None:
            scored = scored + [tgt]
    seed_set = PlaneSampleSet(scored, [1.0] * len(scored),
                              tolerance=1e-6, seed=seed, multistart_count=0)
    res = constrained_extremum(r, cal, seed_set, "max", extra_starts=2,
                               rho_schedule=(1e3, 1e6), max_iter=150,
                               seed=seed + round_idx)
    return res.plane


def _member_margin(xi_vec, atom_matrix, span: LambdaSpan, seed=0):
    """Relative-interior radius proxy: minimize <a, xi> over unit forms a in
    the span that are nonnegative on every sampled plane (penalty scheme)."""
    k = span.dim
    c0 = span.basis @ xi_vec
    C = span.basis @ atom_matrix          # (k, num_atoms)
    if k == 1:
        vals = [s * c0[0] for s in (1.0, -1.0) if np.all(s * C[0] >= -1e-12)]
        return max(0.0, min(vals)) if vals else 0.0
    best = np.inf
    for trial in range(6):
        rng = rng_stream(seed, 7000 + trial)
        w = rng.standard_normal(k)
        w /= np.linalg.norm(w)
        for rho in (1e2, 1e3, 1e4, 1e5, 1e6):
            step = 0.2
            for _ in range(300):
                viol = np.minimum(w @ C, 0.0)
                g = c0 + 2.0 * rho * (C @ viol)
                g -= (g @ w) * w
                gn = np.linalg.norm(g)
                if gn < 1e-12:
                    break
                w_new = w - step * g
                w_new /= np.linalg.norm(w_new)
                f_old = w @ c0 + rho * (viol @ viol)
                viol_new = np.minimum(w_new @ C, 0.0)
                f_new = w_new @ c0 + rho * (viol_new @ viol_new)
                if f_new < f_old:
                    w = w_new
                    step = min(step * 1.5, 1.0)
                else:
                    step *= 0.5
                    if step < 1e-10:
                        break
        if np.all(w @ C >= -1e-8):
            best = min(best, float(w @ c0))
    if not np.isfinite(best):
        return 0.0
    return max(best, 0.0)


def cone_membership(xi: ExteriorElement, cal: Calibration,
                    samples: PlaneSampleSet, tol=1e-6,
                    boundary_tol=BOUNDARY_TOL, max_rounds=20,
                    seed=0) -> ConeReport:
    """Nonnegative decomposition of xi over sampled phi-planes.

    Outside when the augmented least-squares residual stays above tol;
    members are split Interior/Boundary by a dual relative-interior probe.
    """
    if xi.n != cal.n or xi.p != cal.p:
        raise ValueError("degree/dimension mismatch between xi and calibration")
    if len(samples) == 0:
        raise ValueError("empty sample set")
    xi_vec = xi.to_coeff_vector()
    scale = max(np.linalg.norm(xi_vec), 1e-300)
    planes = list(samples.planes)
    # when the target is close to a single phi-plane, that plane (found by
    # aligning with xi and polishing onto the Grassmannian) is the one atom
    # that matters; add it up front
    cm_xi = comass((1.0 / scale) * xi, multistarts=8, seed=seed)
    polished, val = polish_plane(cal.form, cm_xi.plane)
    if val >= 1.0 - max(tol, samples.tolerance):
        planes.append(polished)
    A = np.column_stack([pl.pvector().to_coeff_vector() for pl in planes])
    coeffs, res = nnls(A, xi_vec)
    stagnant = 0
    for round_k in range(max_rounds):
        if res <= 1e-10 * scale:
            break
        r = xi_vec - A @ coeffs
        new_plane = _augment_with_alignment(cal, planes, r, seed, round_k,
                                            target_vec=xi_vec if round_k == 0 else None)
        if new_plane is None:
            break
        col = new_plane.pvector().to_coeff_vector()
        if col @ r <= 1e-12 * scale * np.linalg.norm(r):
            break  # residual points away from the whole sampled cone
        planes.append(new_plane)
        A = np.column_stack([A, col])
        res_prev = res
        coeffs, res = nnls(A, xi_vec)
        stagnant = stagnant + 1 if res > 0.995 * res_prev else 0
        if stagnant >= 3:
            break
    residual = res / scale
    tolerances = {"membership_tol": tol, "boundary_tol": boundary_tol}
    meta = {"sample_count": len(samples), "atom_count": len(planes),
            "residual": residual, "planes": planes,
            "weights": coeffs}
    if residual > tol:
        return ConeReport("Outside", -residual, None, tolerances, None, meta)
    certificate = None
    if residual <= 1e-8:
        active = [(float(c), pl) for c, pl in zip(coeffs, planes) if c > 1e-12]
        certificate = {"weights": [c for c, _ in active],
                       "planes": [pl for _, pl in active]}
    span = lambda_span(PlaneSampleSet(planes, [1.0] * len(planes),
                                      tolerance=1e-6, seed=seed,
                                      multistart_count=0))
    margin = _member_margin(xi_vec, A, span, seed=seed)
    status = "Boundary" if abs(margin) <= boundary_tol else "Interior"
    return ConeReport(status, margin, certificate, tolerances, None, meta)


# ---------------------------------------------------------------------------
# mass norm bracketing
# ---------------------------------------------------------------------------

def _coordinate_planes(n, p):
    out = []
    for idx in lex_indices(n, p):
        frame = np.zeros((p, n))
        for r, i in enumerate(idx):
            frame[r, i - 1] = 1.0
        out.append(SimplePlane(frame))
    return out


def mass_norm_estimate(xi: ExteriorElement, generator_samples: PlaneSampleSet,
                       max_rounds=25, comass_multistarts=40, seed=0,
                       dual_gap_tol=1e-9, bracket_gap_tol=1e-9):
    """Bracket the mass norm of xi.

    Upper: min sum |c| over signed decompositions into sampled simple unit
    p-vectors (in-repo simplex), with cutting-plane augmentation driven by
    the LP dual.  Lower: best pairing against a dictionary of forms whose
    comass estimate is confirmed <= 1 + 1e-6.  Always upper >= lower.
    """
    if xi.norm() == 0.0:
        raise ValueError("mass norm of the zero element")
    n, p = xi.n, xi.p
    planes = _coordinate_planes(n, p) + list(generator_samples.planes)
    # the plane best aligned with xi is the decisive atom when xi is simple
    xi_unit = (1.0 / xi.norm()) * xi
    cm_xi = comass(xi_unit, multistarts=24, seed=seed)
    planes.append(cm_xi.plane)
    xi_vec = xi.to_coeff_vector()
    cols = [pl.pvector().to_coeff_vector() for pl in planes]
    # dictionary seeds: the normalized target form (rescaled by its own
    # comass estimate) and the dominant coordinate form (comass exactly one)
    lower = 0.0
    if cm_xi.value > 1e-12:
        lower = pairing(xi_unit, xi) / cm_xi.value
    best_idx = max(xi.coeffs, key=lambda k: abs(xi.coeffs[k]))
    sgn = 1.0 if xi.coeffs[best_idx] >= 0 else -1.0
    coord = ExteriorElement(n, p, {best_idx: sgn})
    cmc = comass(coord, multistarts=8, seed=seed)
    if cmc.value <= 1.0 + 1e-6:
        lower = max(lower, pairing(coord, xi) / max(cmc.value, 1.0))
    dual_comass = None
    saturated = True
    upper = np.inf
    for round_k in range(max_rounds):
        A = np.column_stack(cols)
        m = A.shape[1]
        res = solve_lp(np.ones(2 * m), np.hstack([A, -A]), xi_vec)
        if res.status != 'optimal':
            raise RuntimeError(f"mass LP failed with status {res.status}")
        upper = res.obj
        if upper - lower <= bracket_gap_tol * max(1.0, upper):
            break
        dual_form = ExteriorElement.from_coeff_vector(n, p, res.y,
                                                      drop_tol=0.0)
        if dual_form.norm() == 0.0:
            break
        cm = comass(dual_form, multistarts=comass_multistarts,
                    seed=seed + round_k)
        dual_comass = cm.value
        saturated = cm.saturated
        if dual_comass > 1e-12 and dual_comass <= 1.0 + 1e-6:
            lower = max(lower, pairing(dual_form, xi) / max(dual_comass, 1.0))
        if dual_comass <= 1.0 + dual_gap_tol:
            break
        lower = max(lower, pairing(dual_form, xi) / dual_comass)
        cols.append(cm.plane.pvector().to_coeff_vector())
        planes.append(cm.plane)
    lower = min(lower, upper)
    return upper, lower, {"rounds": round_k + 1, "dual_comass": dual_comass,
                          "saturated": saturated, "atoms": len(planes)}


# ---------------------------------------------------------------------------
# form-side positivity
# ---------------------------------------------------------------------------

def positivity_classify(alpha: ExteriorElement, cal: Calibration,
                        samples: PlaneSampleSet, tol=BOUNDARY_TOL,
                        **extremum_opts) -> ConeReport:
    """Classify alpha against the polar cone: margin is min alpha over the
    sampled (and refined) phi-Grassmannian."""
    if alpha.n != cal.n or alpha.p != cal.p:
        raise ValueError("degree/dimension mismatch between alpha and calibration")
    if alpha.norm() == 0.0:
        return ConeReport("Boundary", 0.0, None, {"tol": tol}, None,
                          {"sample_count": len(samples)})
    res = constrained_extremum(alpha, cal, samples, "min", **extremum_opts)
    margin = res.value
    tolerances = {"tol": tol}
    meta = {"sample_count": len(samples), "witness_phi": res.phi_value}
    if margin > tol:
        return ConeReport("Interior", margin, None, tolerances, res.plane, meta)
    if margin < -tol:
        return ConeReport("Outside", margin, None, tolerances, res.plane, meta)
    return ConeReport("Boundary", margin, None, tolerances, res.plane, meta)


def contraction_boundary(e, cal: Calibration, samples: PlaneSampleSet,
                         tol=BOUNDARY_TOL, span_tol=1e-6,
                         **extremum_opts):
    """Classify phi_e = e -| (e ^ phi) and cross-check the span criterion:
    phi_e sits on the cone boundary exactly when e lies in a phi-plane."""
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-8:
        raise ValueError("e must be a unit vector")
    e_form = ExteriorElement.from_vector(e)
    if cal.p == cal.n:
        phi_e = ExteriorElement.zero(cal.n, cal.p)  # e ^ phi vanishes
    else:
        phi_e = interior_product(e, wedge(e_form, cal.form))
    if phi_e.norm() == 0.0:
        report = ConeReport("Boundary", 0.0, None, {"tol": tol}, None,
                            {"sample_count": len(samples)})
        max_proj = 1.0  # zero contraction only happens when e is tangential
    else:
        report = positivity_classify(phi_e, cal, samples, tol=tol,
                                     **extremum_opts)
        sym = wedge(e_form, interior_product(e, cal.form))
        res = constrained_extremum(sym, cal, samples, "max", **extremum_opts)
        max_proj = float(np.linalg.norm(res.plane.frame @ e) ** 2)
    span_boundary = bool(max_proj >= 1.0 - span_tol)
    classified_boundary = report.status == "Boundary"
    report.meta.update({
        "phi_e": phi_e,
        "span_max_projection": max_proj,
        "span_says_boundary": span_boundary,
        "consistent": span_boundary == classified_boundary,
    })
    return report


# ---------------------------------------------------------------------------
# the three equivalent membership conditions for unit-mass p-vectors
# ---------------------------------------------------------------------------

@dataclass
class Lemma25Report:
    conditions: dict
    agree: bool
    mass_bracket: tuple
    meta: dict = field(default_factory=dict)


def lemma_2_5_check(xi: ExteriorElement, cal: Calibration,
                    samples: PlaneSampleSet,
                    generator_samples: PlaneSampleSet,
                    tol=1e-6, bracket_tol=2e-5, seed=0) -> Lemma25Report:
    """Evaluate the three equivalent conditions for a mass-normalized xi:
    cone membership, convex-hull membership, and pairing with phi equal 1."""
    upper, lower, mass_meta = mass_norm_estimate(xi, generator_samples,
                                                 seed=seed)
    if not (lower <= 1.0 + bracket_tol and upper >= 1.0 - bracket_tol):
        raise ValueError(
            f"mass-normalization failure: bracket [{lower:.8f}, {upper:.8f}] "
            "does not contain 1")
    rep1 = cone_membership(xi, cal, samples, tol=tol, seed=seed)
    cond1 = rep1.status != "Outside"

    # convex-hull version: weights must also sum to one (weighted row trick)
    # over the augmented atom dictionary found during the membership solve
    xi_vec = xi.to_coeff_vector()
    planes = rep1.meta["planes"]
    A = np.column_stack([pl.pvector().to_coeff_vector() for pl in planes])
    w = 1e6
    A_aug = np.vstack([A, w * np.ones(A.shape[1])])
    b_aug = np.concatenate([xi_vec, [w]])
    _, res2 = nnls(A_aug, b_aug)
    cond2 = bool(res2 <= tol * max(1.0, np.linalg.norm(xi_vec)))

    val = pairing(cal.form, xi)
    cond3 = bool(abs(val - 1.0) <= tol)

    conditions = {
        "cone_membership": (bool(cond1), rep1.margin),
        "hull_membership": (cond2, float(res2)),
        "pairing_equals_one": (cond3, val - 1.0),
    }
    agree = cond1 == cond2 == cond3
    return Lemma25Report(conditions, agree, (lower, upper),
                         {"mass": mass_meta, "membership": rep1.meta})


# ---------------------------------------------------------------------------
# a basis of strictly positive forms
# ---------------------------------------------------------------------------

def positive_basis(cal: Calibration, samples: PlaneSampleSet, eps=0.1,
                   tol=BOUNDARY_TOL, min_eps=1e-6, **extremum_opts):
    """Basis {phi + eps b_k} of strictly positive p-forms, shrinking eps by
    halving until every member classifies Interior."""
    base = positivity_classify(cal.form, cal, samples, tol=tol,
                               **extremum_opts)
    if base.status != "Interior":
        raise ValueError(
            f"phi itself did not classify Interior (margin {base.margin:.3e})")
    basis_idx = lex_indices(cal.n, cal.p)
    while eps >= min_eps:
        members = []
        margins = []
        good = True
        for idx in basis_idx:
            cand = cal.form + ExteriorElement(cal.n, cal.p, {idx: eps})
            rep = positivity_classify(cand, cal, samples, tol=tol,
                                      **extremum_opts)
            members.append(cand)
            margins.append(rep.margin)
            if rep.status != "Interior":
                good = False
                break
        if good:
            mat = np.array([m.to_coeff_vector() for m in members])
            rank = np.linalg.matrix_rank(mat, tol=1e-10)
            if rank != len(basis_idx):
                raise RuntimeError("positive basis candidates are rank-deficient")
            return members, eps, margins
        eps /= 2.0
    raise RuntimeError(
        "eps underflow before positivity achieved; sampling likely failed")
