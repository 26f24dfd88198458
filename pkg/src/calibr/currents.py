"""Polyhedral p-currents in R^n: mass, boundary, evaluation against
polynomial-coefficient forms, positivity versus a calibration, the
calibration/mass identity, and the discrete Green's-current machinery
(cotangent Laplacian, harmonic measure, Poisson-Jensen residuals) on
triangulated flat discs inside a single phi-plane.

Meshes are stored with exact vertex coordinates; all the built-in
generators are deterministic.  The Green machinery is limited to p = 2,
where the cotangent Laplacian comes with the exact logarithmic Green's
function of the round disc as a reference solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calibrations import Calibration
from .exterior import ExteriorElement, pairing, simple_from_frame
from .fields import ScalarField
from .polynomial import (PolyForm, Polynomial, integrate_over_simplex,
                         simplex_volume)

VOLUME_TOL = 1e-12


# ---------------------------------------------------------------------------
# polyhedral currents
# ---------------------------------------------------------------------------

def tangent_pvector(verts) -> tuple:
    """(unit simple p-vector, p-volume) of an ordered simplex."""
    verts = np.asarray(verts, dtype=float)
    edges = verts[1:] - verts[0]
    vol = simplex_volume(verts)
    if vol <= 0.0:
        raise ValueError("degenerate simplex")
    _, xi = simple_from_frame(edges)
    return xi, vol


class PolyhedralCurrent:
    """Weighted oriented p-simplices in R^n."""

    def __init__(self, n, p, simplices, validate=True):
        self.n = int(n)
        self.p = int(p)
        clean = []
        for k, (verts, mult) in enumerate(simplices):
            verts = np.asarray(verts, dtype=float)
            if verts.shape != (self.p + 1, self.n):
                raise ValueError(f"simplex {k}: expected {(self.p+1, self.n)} "
                                 f"vertex array, got {verts.shape}")
            mult = float(mult)
            if mult == 0.0:
                continue
            if simplex_volume(verts) <= VOLUME_TOL:
                raise ValueError(f"simplex {k} is degenerate")
            clean.append((verts, mult))
        self.simplices = clean
        if validate and self.p >= 2 and self.simplices:
            bb = boundary(boundary(self))
            if bb.simplices:
                worst = max(abs(m) for _, m in bb.simplices)
                raise ValueError(
                    f"boundary of boundary failed to cancel (worst {worst:g})")

    def __len__(self):
        return len(self.simplices)

    def tangents(self):
        """Per-simplex (unit p-vector, volume, multiplicity)."""
        return [tangent_pvector(v) + (m,) for v, m in self.simplices]


def _face_key(verts):
    """Canonical (sorted) vertex key and permutation sign for a face."""
    keyed = sorted(range(len(verts)), key=lambda i: verts[i].tobytes())
    sign = 1
    perm = list(keyed)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return tuple(verts[i].tobytes() for i in keyed), sign, [verts[i] for i in keyed]


def boundary(T: PolyhedralCurrent) -> PolyhedralCurrent:
    """Alternating-sign faces with multiplicities, cancelled exactly.

    Cancellation keys on exact vertex coordinates, so shared faces must be
    built from identical floats (all built-in generators guarantee this).
    """
    if T.p == 0:
        raise ValueError("boundary of a 0-current")
    acc = {}
    store = {}
    for verts, mult in T.simplices:
        for drop in range(T.p + 1):
            face = [verts[i] for i in range(T.p + 1) if i != drop]
            key, sign, canon = _face_key(face)
            contrib = mult * sign * (-1) ** drop
            acc[key] = acc.get(key, 0.0) + contrib
            store[key] = canon
    simplices = [(np.array(store[k]), m) for k, m in acc.items()
                 if abs(m) > 1e-13]
    return PolyhedralCurrent(T.n, T.p - 1, simplices, validate=False)


def mass(T: PolyhedralCurrent) -> float:
    """Total variation: weighted p-volume."""
    return sum(abs(m) * simplex_volume(v) for v, m in T.simplices)


def evaluate(T: PolyhedralCurrent, alpha, quadrature_order=None) -> float:
    """Integrate alpha over the current: sum of per-simplex integrals of
    alpha(tangent) against p-volume, times multiplicities.

    Constant forms integrate in closed form; polynomial-coefficient forms
    via the exact barycentric moment formula (exact to machine precision at
    any polynomial degree, hence for every degree <= quadrature_order).
    """
    if isinstance(alpha, ExteriorElement):
        if alpha.p != T.p or alpha.n != T.n:
            raise ValueError("form degree/dimension mismatch")
        total = 0.0
        for verts, mult in T.simplices:
            xi, vol = tangent_pvector(verts)
            total += mult * vol * pairing(alpha, xi)
        return total
    if isinstance(alpha, PolyForm):
        if alpha.p != T.p or alpha.n != T.n:
            raise ValueError("form degree/dimension mismatch")
        total = 0.0
        for verts, mult in T.simplices:
            xi, _ = tangent_pvector(verts)
            q = alpha.pair_with(xi)
            total += mult * integrate_over_simplex(q, verts)
        return total
    raise TypeError("alpha must be an ExteriorElement or a PolyForm")


def phi_positive_check(T: PolyhedralCurrent, cal: Calibration, tol=1e-9):
    """Positive iff every positively weighted tangent is a phi-plane and no
    multiplicity is negative; violations come back with their phi-values."""
    violations = []
    for k, (verts, mult) in enumerate(T.simplices):
        xi, _ = tangent_pvector(verts)
        val = pairing(cal.form, xi)
        if mult < 0.0 or val < 1.0 - tol:
            violations.append({"index": k, "phi": val, "multiplicity": mult})
    return {"positive": not violations, "violations": violations}


def calibration_gap(T: PolyhedralCurrent, cal: Calibration, tol=1e-9):
    """T(phi), the mass, and their gap (nonnegative by the comass bound;
    zero exactly on phi-positive currents)."""
    tphi = evaluate(T, cal.form)
    m = mass(T)
    gap = m - tphi
    return {"tphi": tphi, "mass": m, "gap": gap,
            "positive": phi_positive_check(T, cal, tol)["positive"]}


# ---------------------------------------------------------------------------
# vertex-indexed meshes
# ---------------------------------------------------------------------------

class MeshedSubmanifold:
    """Triangulated submanifold candidate: shared-vertex simplices whose
    tangent planes all calibrate within flatness_tol."""

    def __init__(self, vertices, simplices, cal: Calibration = None,
                 flatness_tol=1e-9, validate=True):
        self.vertices = np.asarray(vertices, dtype=float)
        self.simplices = np.asarray(simplices, dtype=int)
        self.n = self.vertices.shape[1]
        self.p = self.simplices.shape[1] - 1
        self.cal = cal
        self.flatness_tol = flatness_tol
        self._boundary_faces = None
        if validate:
            self._validate_orientations()
            if cal is not None:
                self._validate_flatness()

    def _validate_orientations(self):
        counts = {}
        for tri in self.simplices:
            for drop in range(self.p + 1):
                face = tuple(v for i, v in enumerate(tri) if i != drop)
                key = tuple(sorted(face))
                sign = _perm_sign(face) * (-1) ** drop
                counts[key] = counts.get(key, 0) + sign
        bad = {k: c for k, c in counts.items() if abs(c) > 1}
        if bad:
            raise ValueError(f"inconsistent orientations on faces {list(bad)[:3]}")
        self._boundary_faces = [
            k for k, c in counts.items() if c != 0]

    def _validate_flatness(self):
        for k, tri in enumerate(self.simplices):
            xi, _ = tangent_pvector(self.vertices[tri])
            val = pairing(self.cal.form, xi)
            if val < 1.0 - self.flatness_tol:
                raise ValueError(
                    f"simplex {k} tangent has phi-value {val:.6f}, below "
                    f"1 - {self.flatness_tol:g}")

    def boundary_vertices(self):
        out = set()
        for face in self._boundary_faces:
            out.update(face)
        return sorted(out)

    def interior_vertices(self):
        bnd = set(self.boundary_vertices())
        return [i for i in range(len(self.vertices)) if i not in bnd]

    def boundary_edges(self):
        """Oriented boundary (p-1)-faces with their orientation signs."""
        counts = {}
        for tri in self.simplices:
            for drop in range(self.p + 1):
                face = tuple(v for i, v in enumerate(tri) if i != drop)
                key = tuple(sorted(face))
                sign = _perm_sign(face) * (-1) ** drop
                counts[key] = counts.get(key, 0) + sign
        return [(k, c) for k, c in counts.items() if c != 0]

    def to_current(self, multiplicity=1.0) -> PolyhedralCurrent:
        simp = [(self.vertices[tri], multiplicity) for tri in self.simplices]
        return PolyhedralCurrent(self.n, self.p, simp, validate=False)


def _perm_sign(seq):
    seq = list(seq)
    sign = 1
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    return sign


# ---------------------------------------------------------------------------
# deterministic mesh generators (p = 2)
# ---------------------------------------------------------------------------

def hex_disc_points(m: int):
    """Hexagonal triangulation of the unit disc with m concentric rings.

    Returns (points2d, triangles); boundary vertices sit exactly on the unit
    circle.  All triangles are positively oriented and near-equilateral, so
    every cotangent weight is positive.
    """
    if m < 1:
        raise ValueError("need at least one ring")
    pts = [(0.0, 0.0)]
    ring_start = [0, 1]
    for k in range(1, m + 1):
        r = k / m
        for j in range(6 * k):
            a = 2.0 * math.pi * j / (6 * k)
            pts.append((r * math.cos(a), r * math.sin(a)))
        ring_start.append(ring_start[-1] + 6 * k)
    tris = []
    # center fan
    for j in range(6):
        tris.append((0, 1 + j, 1 + (j + 1) % 6))
    # annuli
    for k in range(1, m):
        inner0, outer0 = ring_start[k], ring_start[k + 1]
        ni, no = 6 * k, 6 * (k + 1)
        for s in range(6):
            for j in range(k + 1):
                o1 = outer0 + (s * (k + 1) + j) % no
                o2 = outer0 + (s * (k + 1) + j + 1) % no
                i1 = inner0 + (s * k + j) % ni
                tris.append((i1, o1, o2))
            for j in range(k):
                i1 = inner0 + (s * k + j) % ni
                i2 = inner0 + (s * k + j + 1) % ni
                o2 = outer0 + (s * (k + 1) + j + 1) % no
                tris.append((i1, o2, i2))
    pts = np.array(pts)
    tris = np.array(tris, dtype=int)
    # enforce positive orientation
    for t in range(len(tris)):
        a, b, c = pts[tris[t]]
        if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0:
            tris[t] = tris[t][[0, 2, 1]]
    return pts, tris


def _embed(points2d, frame, origin=None):
    frame = np.asarray(frame, dtype=float)
    origin = np.zeros(frame.shape[1]) if origin is None else origin
    return origin[None, :] + points2d @ frame


def disc_mesh(m: int, n=4, cal: Calibration = None) -> MeshedSubmanifold:
    """Flat unit disc in the x1y1 coordinate plane of R^n, m rings."""
    pts, tris = hex_disc_points(m)
    frame = np.zeros((2, n))
    frame[0, 0] = 1.0
    frame[1, 1] = 1.0
    return MeshedSubmanifold(_embed(pts, frame), tris, cal)


def tilted_disc_mesh(m: int, theta: float, n=4,
                     cal: Calibration = None, flatness_tol=1e-9):
    """Unit disc in the plane span{e1, cos(theta) e2 + sin(theta) e3}."""
    pts, tris = hex_disc_points(m)
    frame = np.zeros((2, n))
    frame[0, 0] = 1.0
    frame[1, 1] = math.cos(theta)
    frame[1, 2] = math.sin(theta)
    return MeshedSubmanifold(_embed(pts, frame), tris, cal,
                             flatness_tol=flatness_tol)


def graph_curve_mesh(m: int, cal: Calibration = None, flatness_tol=5e-2,
                     radius=1.0) -> MeshedSubmanifold:
    """Mesh of the holomorphic graph z2 = z1^2 over the disc of the given
    radius in C^2 (interleaved coordinates x1,y1,x2,y2)."""
    pts, tris = hex_disc_points(m)
    pts = pts * radius
    u, v = pts[:, 0], pts[:, 1]
    verts = np.column_stack([u, v, u * u - v * v, 2 * u * v])
    return MeshedSubmanifold(verts, tris, cal, flatness_tol=flatness_tol)


def cap_mesh(m: int, height: float, n=4, cal: Calibration = None,
             flatness_tol=np.inf) -> MeshedSubmanifold:
    """Spherical cap with the unit circle of the x1y1-plane as its rim,
    bulging into coordinate 3; cap height is the apex offset.  Shares its
    rim vertices with disc_mesh(m) exactly."""
    pts, tris = hex_disc_points(m)
    R = (1.0 + height ** 2) / (2.0 * height)
    r2 = (pts ** 2).sum(axis=1)
    lift = np.sqrt(np.maximum(R * R - r2, 0.0)) - (R - height)
    rim = np.isclose(r2, 1.0, atol=1e-12)
    lift[rim] = 0.0
    verts = np.zeros((len(pts), n))
    verts[:, 0] = pts[:, 0]
    verts[:, 1] = pts[:, 1]
    verts[:, 2] = lift
    return MeshedSubmanifold(verts, tris, cal, flatness_tol=flatness_tol)


# ---------------------------------------------------------------------------
# mesh file IO: header "n p", vertex lines "v x1 .. xn",
# simplex lines "s i0 .. ip mult" (0-based indices)
# ---------------------------------------------------------------------------

def write_mesh(path, M: MeshedSubmanifold):
    with open(path, "w") as fh:
        fh.write(f"{M.n} {M.p}\n")
        for v in M.vertices:
            fh.write("v " + " ".join(repr(float(x)) for x in v) + "\n")
        for tri in M.simplices:
            fh.write("s " + " ".join(str(int(i)) for i in tri) + " 1\n")


def read_mesh(path, cal: Calibration = None, flatness_tol=1e-9):
    verts, tris = [], []
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}:1: expected header 'n p'")
        n, p = int(header[0]), int(header[1])
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v":
                if len(parts) != n + 1:
                    raise ValueError(f"{path}:{lineno}: vertex needs {n} coords")
                verts.append([float(x) for x in parts[1:]])
            elif parts[0] == "s":
                if len(parts) != p + 3:
                    raise ValueError(
                        f"{path}:{lineno}: simplex needs {p + 1} indices + mult")
                idx = [int(i) for i in parts[1:p + 2]]
                if float(parts[-1]) != 1.0:
                    raise ValueError(
                        f"{path}:{lineno}: submanifold meshes need unit "
                        "multiplicity")
                tris.append(idx)
            else:
                raise ValueError(f"{path}:{lineno}: unknown record '{parts[0]}'")
    return MeshedSubmanifold(np.array(verts), np.array(tris, dtype=int),
                             cal, flatness_tol=flatness_tol)


# ---------------------------------------------------------------------------
# cotangent Laplacian
# ---------------------------------------------------------------------------

def cotan_laplacian(vertices, triangles):
    """Sparse stiffness matrix L with (Lu)_i = sum_j w_ij (u_i - u_j) and
    barycentric lumped vertex areas."""
    V = np.asarray(vertices, dtype=float)
    nv = len(V)
    rows, cols, vals = [], [], []
    areas = np.zeros(nv)
    for tri in triangles:
        i, j, k = (int(t) for t in tri)
        pts = V[[i, j, k]]
        area = simplex_volume(pts)
        for a in (i, j, k):
            areas[a] += area / 3.0
        for (a, b, c) in ((i, j, k), (j, k, i), (k, i, j)):
            # cotangent at vertex c of the angle opposite edge (a, b)
            u = V[a] - V[c]
            v = V[b] - V[c]
            cross = np.linalg.norm(np.cross(u, v)) if V.shape[1] == 3 else \
                math.sqrt(max((u @ u) * (v @ v) - (u @ v) ** 2, 0.0))
            cot = (u @ v) / max(cross, 1e-300)
            w = 0.5 * cot
            rows += [a, b, a, b]
            cols += [b, a, a, b]
            vals += [-w, -w, w, w]
    L = sp.csr_matrix((vals, (rows, cols)), shape=(nv, nv))
    return L, areas


def discrete_laplacian_values(M: MeshedSubmanifold, f: ScalarField):
    """(interior indices, Laplace-Beltrami values) with cotan weights over
    lumped areas; positive for subharmonic restrictions."""
    L, areas = cotan_laplacian(M.vertices, M.simplices)
    fv = np.array([f(v) for v in M.vertices])
    interior = M.interior_vertices()
    lap = -(L @ fv)
    return interior, np.array([lap[i] / areas[i] for i in interior])


# ---------------------------------------------------------------------------
# Green's current checks on a flat disc in a single phi-plane
# ---------------------------------------------------------------------------

def _plane_coordinates(M: MeshedSubmanifold, tol=1e-9):
    """Orthonormal 2-frame of the mesh plane and the 2D vertex coordinates;
    raises when the mesh is not flat inside one plane."""
    tri0 = M.vertices[M.simplices[0]]
    plane, _ = simple_from_frame(tri0[1:] - tri0[0])
    frame = plane.frame                       # (2, n) rows
    origin = M.vertices[0]
    rel = M.vertices - origin
    coords = rel @ frame.T
    recon = coords @ frame
    off = np.abs(rel - recon).max()
    if off > tol * max(1.0, np.abs(M.vertices).max()):
        raise ValueError(f"mesh leaves its plane by {off:.2e}")
    return frame, coords


def _hessian_pair_poly(f: ScalarField, cal: Calibration, xi: ExteriorElement,
                       frame, origin):
    """The scalar z -> (Hess f extended into phi)(xi) at ambient point
    origin + z.frame, as a 2D polynomial when f is polynomial, else None."""
    if f.poly is None:
        return None
    from .exterior import derivation_extend
    n = cal.n
    K = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n))
            E[i, j] = 1.0
            K[i, j] = pairing(derivation_extend(E, cal.form), xi)
    q = Polynomial.constant(2, 0.0)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if K[i - 1, j - 1] == 0.0:
                continue
            hij = f.poly.partial(i).partial(j)
            if not hij.terms:
                continue
            q = q + K[i - 1, j - 1] * hij.substitute_linear(frame, origin)
    return q


_GAUSS_T, _GAUSS_W = np.polynomial.legendre.leggauss(24)


def _log_radial_integral(R, coeffs):
    """int_0^R (-1/(2 pi)) log(r) * (sum_k c_k r^k) * r dr, exactly."""
    total = 0.0
    for k, c in enumerate(coeffs):
        if c == 0.0:
            continue
        kk = k + 2
        total += c * (R ** kk) * (math.log(R) / kk - 1.0 / kk ** 2)
    return -total / (2.0 * math.pi)


def _fan_log_integral(x, a, b, qfun, qdeg):
    """Signed integral of -(1/2pi) log|z - x| q(z) over the triangle (x,a,b).

    Angular Gauss rule, radial part exact per monomial; sign follows the
    orientation of (x, a, b).
    """
    a = a - x
    b = b - x
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    cross = a[0] * b[1] - a[1] * b[0]
    if abs(cross) <= 1e-13 * (na * nb + 1e-300):
        return 0.0                      # degenerate sliver: zero sector
    alpha = math.atan2(a[1], a[0])
    beta = math.atan2(b[1], b[0])
    delta = beta - alpha
    while delta <= -math.pi:
        delta += 2 * math.pi
    while delta > math.pi:
        delta -= 2 * math.pi
    # distance from x to the chord line through a, b
    d = abs(cross) / np.linalg.norm(b - a)
    nrm = np.array([-(b - a)[1], (b - a)[0]])
    nrm /= np.linalg.norm(nrm)
    if nrm @ a < 0:
        nrm = -nrm
    R_cap = 2.0 * max(na, nb)           # R never exceeds the chord reach
    rad_nodes = np.cos(np.pi * (2 * np.arange(qdeg + 1) + 1) / (2 * (qdeg + 1)))
    total = 0.0
    for t, w in zip(_GAUSS_T, _GAUSS_W):
        theta = alpha + delta * (t + 1) / 2.0
        u = np.array([math.cos(theta), math.sin(theta)])
        R = min(d / max(nrm @ u, 1e-300), R_cap)
        # radial polynomial coefficients of q along the ray, by interpolation
        if qdeg == 0:
            coeffs = [qfun(x)]
        else:
            rs = R * (rad_nodes + 1.0) / 2.0
            vals = [qfun(x + r * u) for r in rs]
            coeffs = np.polynomial.polynomial.polyfit(rs, vals, qdeg)
        total += w * _log_radial_integral(R, np.atleast_1d(coeffs))
    return total * (delta / 2.0)


def _triangle_log_integral(zx, tri, qfun, qdeg):
    """Integral of -(1/2pi) log|z - zx| q(z) over a positively oriented
    triangle, via the signed fan decomposition from zx."""
    a, b, c = tri
    return (_fan_log_integral(zx, a, b, qfun, qdeg)
            + _fan_log_integral(zx, b, c, qfun, qdeg)
            + _fan_log_integral(zx, c, a, qfun, qdeg))


def _affine_from_vertex_values(tri, vals):
    A = np.column_stack([np.ones(3), tri])
    coef = np.linalg.solve(A, vals)
    return Polynomial(2, {(0, 0): coef[0], (1, 0): coef[1], (0, 1): coef[2]})


@dataclass
class GreenResult:
    residuals: dict
    mu: np.ndarray
    mu_indices: list
    exact_disc: bool
    green_values: np.ndarray
    meta: dict = field(default_factory=dict)


def green_check(M: MeshedSubmanifold, x_index: int, tests, cal: Calibration,
                qdeg=4) -> GreenResult:
    """Residuals of the weak Poisson-Jensen identity on a flat meshed disc.

    Builds the nonnegative Green's function vanishing on the boundary (exact
    log profile on the round disc centered at x, discrete cotangent solve
    otherwise), the harmonic measure from the discrete boundary normal
    derivative, and for each test f compares the current paired with the
    second-order operator of f against the measure-minus-Dirac evaluation.
    """
    frame, coords = _plane_coordinates(M)
    interior = M.interior_vertices()
    if x_index not in interior:
        raise ValueError(f"vertex {x_index} is not interior")
    boundary_idx = M.boundary_vertices()
    if not boundary_idx:
        raise ValueError("mesh has no boundary")
    zx = coords[x_index]
    r_bnd = np.linalg.norm(coords[boundary_idx] - zx[None, :], axis=1)
    exact_disc = bool(np.abs(r_bnd - 1.0).max() < 1e-9)

    # discrete solve: L G = delta_x with zero boundary values
    L, _ = cotan_laplacian(M.vertices, M.simplices)
    int_pos = {v: k for k, v in enumerate(interior)}
    L_ii = L[interior, :][:, interior]
    rhs = np.zeros(len(interior))
    rhs[int_pos[x_index]] = 1.0
    G = np.zeros(len(M.vertices))
    G[interior] = spla.spsolve(L_ii.tocsc(), rhs)
    # connectivity sanity: a disconnected interior leaves zeros behind
    if not np.all(np.isfinite(G)):
        raise ValueError("disconnected mesh: Laplace solve failed")

    # harmonic measure from the discrete boundary normal derivative
    flux = np.asarray(L @ G).ravel()
    mu = np.array([-flux[j] for j in boundary_idx])
    mu_sum = mu.sum()
    meta = {"mu_min": float(mu.min()), "mu_sum": float(mu_sum),
            "green_min": float(G.min())}
    mu = np.maximum(mu, 0.0)
    mu = mu / mu.sum()

    # split G = S + H with S the log profile; in exact mode H = 0
    S_vals = np.zeros(len(M.vertices))
    r_all = np.linalg.norm(coords - zx[None, :], axis=1)
    nz = r_all > 1e-300
    S_vals[nz] = -np.log(r_all[nz]) / (2.0 * math.pi)
    if exact_disc:
        H_vals = np.zeros(len(M.vertices))
    else:
        H_vals = G - S_vals
        ring = sorted({int(v) for tri in M.simplices if x_index in tri
                       for v in tri if v != x_index})
        H_vals[x_index] = float(np.mean(H_vals[ring]))

    # orientation of the plane: the mesh tangent p-vector
    tri0 = M.vertices[M.simplices[0]]
    xi_M, _ = tangent_pvector(tri0)

    residuals = {}
    for f in tests:
        q_poly = _hessian_pair_poly(f, cal, xi_M, frame, M.vertices[0])
        if q_poly is not None:
            def qfun(z, q=q_poly):
                return q(z)
            qdeg_f = min(qdeg, max(q_poly.degree(), 0))
        else:
            from .hessian import hessian_form
            def qfun(z, f=f):
                x_amb = M.vertices[0] + z @ frame
                return pairing(hessian_form(f, x_amb, cal, cross_check=False),
                               xi_M)
            qdeg_f = qdeg
        total = 0.0
        for tri_idx in M.simplices:
            tri = coords[tri_idx]
            # smooth remainder: P1 interpolant times q, integrated exactly
            if not exact_disc:
                h_aff = _affine_from_vertex_values(tri, H_vals[tri_idx])
                if q_poly is not None:
                    total += integrate_over_simplex(h_aff * q_poly, tri)
                else:
                    mid = tri.mean(axis=0)
                    total += h_aff(mid) * qfun(mid) * simplex_volume(tri)
            total += _triangle_log_integral(zx, tri, qfun, qdeg_f)
        rhs_val = sum(w * f(M.vertices[j])
                      for w, j in zip(mu, boundary_idx)) - f(M.vertices[x_index])
        residuals[f.name] = abs(total - rhs_val)
    return GreenResult(residuals, mu, boundary_idx, exact_disc, G, meta)


# ---------------------------------------------------------------------------
# maximum principle and restriction subharmonicity
# ---------------------------------------------------------------------------

@dataclass
class MeshReport:
    ok: bool
    precondition_ok: bool
    precondition_info: dict
    details: dict


def max_principle_check(M: MeshedSubmanifold, f: ScalarField, mode: str,
                        cal: Calibration, samples=None, mesh_tol=1e-9,
                        modd_tol=1e-6, probe_count=6) -> MeshReport:
    """mode='bounds': interior values within the boundary range (requires f
    pluriharmonic mod d near the mesh); mode='lemma58': for f constant on M,
    the first-order operator annihilates all boundary tangents."""
    if mode == "bounds":
        from .hessian import pluriharmonic_mod_d_residual
        pre_info = {}
        pre_ok = True
        if samples is None:
            pre_ok = False
            pre_info["reason"] = "no samples supplied for the mod-d check"
        else:
            from .cones import lambda_span
            span = lambda_span(samples)
            idx = np.linspace(0, len(M.vertices) - 1, probe_count).astype(int)
            residuals = []
            critical = 0
            for i in idx:
                r = pluriharmonic_mod_d_residual(f, M.vertices[i], cal,
                                                 span=span)
                if r.gradient_norm < 1e-8:
                    # a critical point inside the mesh breaks the mod-d
                    # decomposition on any neighborhood of M
                    critical += 1
                    continue
                residuals.append(r.residual)
            pre_info["modd_residuals"] = residuals
            pre_info["critical_probes"] = critical
            pre_ok = bool(residuals) and max(residuals) <= modd_tol \
                and critical == 0
        fv = np.array([f(v) for v in M.vertices])
        bnd = M.boundary_vertices()
        interior = M.interior_vertices()
        lo, hi = fv[bnd].min(), fv[bnd].max()
        worst_low = float(fv[interior].min() - lo)
        worst_high = float(hi - fv[interior].max())
        ok = bool(fv[interior].min() >= lo - mesh_tol
                  and fv[interior].max() <= hi + mesh_tol)
        return MeshReport(ok, pre_ok, pre_info,
                          {"boundary_range": (float(lo), float(hi)),
                           "slack": (worst_low, worst_high)})
    if mode == "lemma58":
        from .hessian import d_phi
        fv = np.array([f(v) for v in M.vertices])
        spread = float(fv.max() - fv.min())
        pre_ok = spread <= 1e-9 * max(1.0, np.abs(fv).max())
        worst = 0.0
        for face, sign in M.boundary_edges():
            a, b = face
            tang = M.vertices[b] - M.vertices[a]
            tang = tang / np.linalg.norm(tang)
            mid = 0.5 * (M.vertices[a] + M.vertices[b])
            val = pairing(d_phi(f, mid, cal),
                          ExteriorElement.from_vector(tang))
            worst = max(worst, abs(val))
        return MeshReport(worst <= 1e-9, pre_ok,
                          {"value_spread_on_M": spread},
                          {"worst_boundary_pairing": worst})
    raise ValueError(f"unknown mode {mode!r}")


def restriction_subharmonicity(M: MeshedSubmanifold, f: ScalarField,
                               cal: Calibration, samples=None,
                               mesh_tol=1e-6, probe_count=4) -> MeshReport:
    """Discrete Laplace-Beltrami of f at interior vertices must clear
    -mesh_tol when f is plurisubharmonic near the mesh."""
    pre_info = {}
    pre_ok = True
    if samples is not None:
        from .hessian import psh_classify
        idx = np.linspace(0, len(M.vertices) - 1, probe_count).astype(int)
        marks = psh_classify(f, [M.vertices[i] for i in idx], cal, samples,
                             starts_limit=8, extra_starts=2)
        pre_info["psh_status"] = [m.status for m in marks]
        pre_ok = all(m.status != "NotPsh" for m in marks)
    else:
        pre_ok = False
        pre_info["reason"] = "no samples supplied for the psh check"
    interior, lap = discrete_laplacian_values(M, f)
    ok = bool(lap.min() >= -mesh_tol)
    return MeshReport(ok, pre_ok, pre_info,
                      {"min_laplacian": float(lap.min()),
                       "max_laplacian": float(lap.max()),
                       "interior_count": len(interior)})
