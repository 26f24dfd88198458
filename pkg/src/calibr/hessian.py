"""The differential-operator layer for constant calibrations on flat R^n:
the first-order contraction operator, the second-order form-valued Hessian,
plurisubharmonicity classification, pluriharmonic-mod-d residuals, level-set
flatness, normality of a calibration, the operator symbol, and the reduced
Hessian.

Everything is pointwise: smooth fields enter through gradient/Hessian
suppliers and all Grassmannian quantifiers run over (refined) plane samples,
so results are certified relative to the sampled surrogate of G(phi).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .calibrations import Calibration
from .cones import LambdaSpan, lambda_span
from .exterior import (ExteriorElement, derivation_extend, interior_product,
                       lex_indices, pairing, wedge)
from .fields import ScalarField
from .grassmann import (FormEvaluator, PlaneSampleSet, _ascend, comass,
                        hyperplane_basis, pullback, random_frame, rng_stream,
                        sample_grassmannian)


def d_phi(f: ScalarField, x, cal: Calibration) -> ExteriorElement:
    """First-order operator: contraction of the gradient into phi."""
    return interior_product(f.gradient(x), cal.form)


def hessian_form(f: ScalarField, x, cal: Calibration, cross_check=True,
                 check_tol=1e-3) -> ExteriorElement:
    """Second-order operator: the Hessian extended into phi as a derivation.

    For constant phi this factors through the exterior derivative of the
    first-order operator; a finite-difference version of that factorization
    is checked when cross_check is set and a warning raised on disagreement
    (which indicates step-size trouble in the field's suppliers).
    """
    x = np.asarray(x, dtype=float)
    H = f.hessian(x)
    out = derivation_extend(H, cal.form)
    if cross_check:
        h = f.h * max(1.0, float(np.abs(x).max()))
        fd = ExteriorElement.zero(cal.n, cal.p)
        for i in range(cal.n):
            e = np.zeros(cal.n)
            e[i] = h
            diff = d_phi(f, x + e, cal) - d_phi(f, x - e, cal)
            ei_form = ExteriorElement.from_vector(np.eye(cal.n)[i])
            fd = fd + wedge(ei_form, (1.0 / (2 * h)) * diff)
        gap = (out - fd).norm()
        scale = 1.0 + float(np.linalg.norm(H))
        if gap > check_tol * scale:
            warnings.warn(
                f"factorization cross-check gap {gap:.2e} exceeds "
                f"{check_tol:.0e}*(1+|Hess|); finite-difference step h={f.h} "
                "may be poorly scaled")
    return out


def trace_check(f: ScalarField, x, plane, cal: Calibration):
    """Both sides of the plane-trace identity: the form-valued Hessian paired
    with the plane versus the sum of second directional derivatives along an
    orthonormal frame.  Returns (lhs, rhs, gap)."""
    xi = plane.pvector()
    lhs = pairing(hessian_form(f, x, cal, cross_check=False), xi)
    rhs = sum(f.second_directional(x, u) for u in plane.frame)
    return lhs, rhs, abs(lhs - rhs)


def symbol(u, cal: Calibration) -> ExteriorElement:
    """The operator symbol at the covector u: u ^ (u -| phi)."""
    u = np.asarray(u, dtype=float)
    if cal.p == cal.n:
        return ExteriorElement.zero(cal.n, cal.p)
    return wedge(ExteriorElement.from_vector(u),
                 interior_product(u, cal.form))


# ---------------------------------------------------------------------------
# plurisubharmonicity
# ---------------------------------------------------------------------------

@dataclass
class PshPoint:
    status: str                   # StrictlyPsh | Psh | NotPsh
    margin: float
    witness: object = None


def psh_classify(f: ScalarField, points, cal: Calibration,
                 samples: PlaneSampleSet, tol=1e-8,
                 **extremum_opts) -> list:
    """Per point: minimum of the form-valued Hessian over refined samples."""
    from .grassmann import constrained_extremum
    if len(samples) == 0:
        raise ValueError("empty sample set")
    out = []
    for x in points:
        H = hessian_form(f, x, cal, cross_check=False)
        if H.norm() == 0.0:
            out.append(PshPoint("Psh", 0.0))
            continue
        res = constrained_extremum(H, cal, samples, "min", **extremum_opts)
        if res.value > tol:
            out.append(PshPoint("StrictlyPsh", res.value))
        elif res.value >= -tol:
            out.append(PshPoint("Psh", res.value))
        else:
            out.append(PshPoint("NotPsh", res.value, res.plane))
    return out


# ---------------------------------------------------------------------------
# pluriharmonic mod d
# ---------------------------------------------------------------------------

@dataclass
class ModDResidual:
    residual: float
    alpha_fit: ExteriorElement      # degree p-1
    sigma_fit: ExteriorElement      # degree p, annihilating the sampled span
    gradient_norm: float


def pluriharmonic_mod_d_residual(f: ScalarField, x, cal: Calibration,
                                 samples: PlaneSampleSet = None,
                                 span: LambdaSpan = None) -> ModDResidual:
    """Least-squares decomposition of the form-valued Hessian over
    df ^ Lambda^{p-1} plus the annihilator of the sampled plane span.

    With a vanishing gradient the fit degenerates to the pure annihilator
    projection (documented; the caller sees gradient_norm).
    """
    if span is None:
        if samples is None:
            raise ValueError("need either samples or a precomputed span")
        span = lambda_span(samples)
    x = np.asarray(x, dtype=float)
    H = hessian_form(f, x, cal, cross_check=False)
    H_vec = H.to_coeff_vector()
    g = f.gradient(x)
    df = ExteriorElement.from_vector(g)
    pm1 = lex_indices(cal.n, cal.p - 1)
    cols = []
    for idx in pm1:
        beta = ExteriorElement(cal.n, cal.p - 1, {idx: 1.0})
        cols.append(wedge(df, beta).to_coeff_vector())
    A = np.column_stack(cols + [row for row in span.perp]) \
        if span.perp.size else np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, H_vec, rcond=None)
    fit = A @ coef
    residual = float(np.linalg.norm(H_vec - fit))
    alpha = ExteriorElement(cal.n, cal.p - 1,
                            {idx: coef[k] for k, idx in enumerate(pm1)})
    sigma_vec = np.zeros_like(H_vec)
    for j in range(span.perp.shape[0]):
        sigma_vec += coef[len(pm1) + j] * span.perp[j]
    sigma = ExteriorElement.from_coeff_vector(cal.n, cal.p, sigma_vec,
                                              drop_tol=0.0)
    return ModDResidual(residual, alpha, sigma, float(np.linalg.norm(g)))


# ---------------------------------------------------------------------------
# level-set flatness
# ---------------------------------------------------------------------------

@dataclass
class FlatReport:
    flat: bool
    worst_value: float
    worst_plane: object
    vacuous: bool
    tangency: float


def phi_flat_check(f: ScalarField, x, cal: Calibration,
                   samples: PlaneSampleSet, tol=1e-8, tangency_tol=1e-6,
                   seed=0, max_iter=300) -> FlatReport:
    """Extremize the form-valued Hessian over phi-planes tangential to the
    level set of f through x.

    Reports vacuous flatness when no tangential phi-plane exists.
    """
    x = np.asarray(x, dtype=float)
    g = f.gradient(x)
    gn = float(np.linalg.norm(g))
    if gn < 1e-12:
        raise ValueError("vanishing gradient: level set undefined at x")
    ghat = g / gn
    H = hessian_form(f, x, cal, cross_check=False)
    ev_phi = FormEvaluator(cal.form)
    ev_H = FormEvaluator(H) if H.norm() > 0 else None
    n, p = cal.n, cal.p

    def tangency(U):
        v = U.T @ ghat
        return float(v @ v)

    # phase A: find tangential phi-planes by minimizing the joint defect
    def defect_vg(U):
        fp, Gp = ev_phi.value_and_grad(U)
        v = U.T @ ghat
        val = -(1.0 - fp) - (v @ v)
        G = Gp - 2.0 * np.outer(ghat, v)
        return val, G

    starts = [pl.frame.T.copy() for pl in samples.planes]
    for k in range(6):
        starts.append(random_frame(n, p, rng_stream(seed, 600 + k)))
    tangential = []
    best_defect = np.inf
    for U0 in starts:
        U, val, _, _ = _ascend(defect_vg, U0, gtol=1e-12, max_iter=max_iter)
        defect = -val
        best_defect = min(best_defect, defect)
        if (1.0 - ev_phi.value(U)) < max(10 * samples.tolerance, 1e-9) \
                and tangency(U) < tangency_tol ** 2:
            tangential.append(U)
    if not tangential:
        return FlatReport(True, 0.0, None, True, best_defect)
    if ev_H is None:
        from .exterior import SimplePlane
        return FlatReport(True, 0.0, SimplePlane(tangential[0].T), False, 0.0)

    # phase B: extremize the Hessian pairing within the tangential family
    worst_val, worst_U = 0.0, tangential[0]
    for sgn in (+1.0, -1.0):
        for U0 in tangential:
            U = U0.copy()
            for rho in (1e3, 1e5, 1e7):
                def vg(U, rho=rho, sgn=sgn):
                    fH, GH = ev_H.value_and_grad(U)
                    fp, Gp = ev_phi.value_and_grad(U)
                    v = U.T @ ghat
                    val = sgn * fH + rho * ((fp - 1.0) - (v @ v))
                    G = sgn * GH + rho * (Gp - 2.0 * np.outer(ghat, v))
                    return val, G
                U, _, _, _ = _ascend(vg, U, gtol=1e-12, max_iter=max_iter)
            if (1.0 - ev_phi.value(U)) < max(10 * samples.tolerance, 1e-9) \
                    and tangency(U) < tangency_tol ** 2:
                val = ev_H.value(U)
                if abs(val) > abs(worst_val):
                    worst_val, worst_U = val, U
    from .exterior import SimplePlane
    return FlatReport(abs(worst_val) <= tol, worst_val,
                      SimplePlane(worst_U.T), False, tangency(worst_U))


# ---------------------------------------------------------------------------
# normality of a calibration
# ---------------------------------------------------------------------------

def _adaptive_span_rows(cal: Calibration, tol, seed, batch=24, cap=400,
                        patience=2):
    """Sample the phi-Grassmannian until the span of its p-vectors stops
    growing; returns the row matrix of sampled p-vectors."""
    rows = []
    rank = 0
    stable = 0
    attempts = 0
    ev = FormEvaluator(cal.form)
    while attempts < cap and stable < patience:
        got = 0
        for k in range(batch):
            rng = rng_stream(seed, 3000 + attempts + k)
            U, f, g, _ = _ascend(ev.value_and_grad,
                                 random_frame(cal.n, cal.p, rng),
                                 gtol=1e-11, max_iter=400)
            if f >= cal.claimed_comass - tol:
                rows.append(np.linalg.det(
                    U[ev.rows_p, :]) if cal.p > 1 else U[:, 0].copy())
                got += 1
        attempts += batch
        if rows:
            new_rank = np.linalg.matrix_rank(np.array(rows), tol=1e-8)
            stable = stable + 1 if new_rank == rank else 0
            rank = new_rank
    return np.array(rows)


def _perp_basis(rows, dim_total, sv_cutoff=1e-8):
    _, s, vt = np.linalg.svd(rows, full_matrices=True)
    d = int((s > sv_cutoff * (s[0] if s.size else 1.0)).sum())
    return vt[:d], vt[d:]


@dataclass
class NormalityReport:
    normal: bool
    trials: int
    degenerate: int
    failures: list
    worst_mismatch: float


def normality_check(cal: Calibration, trials=50, seed=0, mismatch_tol=1e-8,
                    degenerate_tol=1e-6, comass_multistarts=24) -> NormalityReport:
    """For random hyperplanes W, compare the annihilator of the restricted
    Grassmannian's span with the restriction of the full annihilator.

    Hyperplanes where the restricted comass drops below one have an empty
    restricted Grassmannian; those trials are recorded as degenerate and
    excluded from the comparison.
    """
    full_rows = _adaptive_span_rows(cal, tol=1e-9, seed=seed)
    span_basis, perp_basis = _perp_basis(full_rows, None)
    failures = []
    degenerate = 0
    worst = 0.0
    for t in range(trials):
        rng = rng_stream(seed, 100 + t)
        u = rng.standard_normal(cal.n)
        u /= np.linalg.norm(u)
        Q = hyperplane_basis(u)                       # n x (n-1)
        phi_w = pullback(cal.form, Q)
        cm = comass(phi_w, multistarts=comass_multistarts, seed=seed + t) \
            if phi_w.norm() > 0 else None
        if cm is None or cm.value < 1.0 - degenerate_tol:
            degenerate += 1
            continue
        restricted = Calibration(phi_w, f"{cal.name}|W", claimed_comass=cm.value)
        rows_w = _adaptive_span_rows(restricted, tol=1e-9, seed=seed + 7 * t,
                                     batch=16, cap=240)
        if rows_w.size == 0:
            degenerate += 1
            continue
        _, perp_w = _perp_basis(rows_w, None)         # Lambda(phi|_W)^perp
        # restriction to W of the full annihilator, inside Lambda^p W
        pulled = []
        for row in perp_basis:
            el = ExteriorElement.from_coeff_vector(cal.n, cal.p, row,
                                                   drop_tol=0.0)
            pulled.append(pullback(el, Q).to_coeff_vector())
        pulled = np.array(pulled) if pulled else np.zeros((0, perp_w.shape[1]))
        restr_basis, _ = _perp_basis(pulled, None) if pulled.size else \
            (np.zeros((0, perp_w.shape[1])), None)
        # compare the two subspaces by their orthogonal projectors
        d1, d2 = perp_w.shape[0], restr_basis.shape[0]
        dim_amb = perp_w.shape[1]
        P1 = perp_w.T @ perp_w if d1 else np.zeros((dim_amb, dim_amb))
        P2 = restr_basis.T @ restr_basis if d2 else np.zeros((dim_amb, dim_amb))
        mismatch = float(np.linalg.norm(P1 - P2, 2)) if dim_amb else 0.0
        worst = max(worst, mismatch)
        if mismatch > mismatch_tol:
            failures.append({"u": u, "mismatch": mismatch,
                             "dims": (d1, d2)})
    return NormalityReport(not failures, trials, degenerate, failures, worst)


# ---------------------------------------------------------------------------
# reduced Hessian
# ---------------------------------------------------------------------------

def reduced_hessian(f: ScalarField, x, cal: Calibration,
                    samples: PlaneSampleSet = None,
                    span: LambdaSpan = None) -> ExteriorElement:
    """The form-valued Hessian orthogonally projected onto the sampled span;
    vanishing of this projection on probes is the pluriharmonicity test."""
    if span is None:
        if samples is None:
            raise ValueError("need either samples or a precomputed span")
        span = lambda_span(samples)
    H = hessian_form(f, x, cal, cross_check=False)
    return span.project(H)
