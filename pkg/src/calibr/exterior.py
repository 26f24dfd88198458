"""Exact exterior algebra over R^n in the lexicographic multi-index basis.

A single sparse representation serves both p-forms and p-vectors; the
Euclidean metric identifies the two, so ``pairing`` is just the dot product
of coefficient maps.  Index tuples are 1-based and strictly increasing,
matching the JSON interchange format.  All values are immutable after
construction and every operation is pure.
"""

from __future__ import annotations

import itertools
import json
import math
from functools import lru_cache

import numpy as np

DROP_TOL = 1e-14
FRAME_TOL = 1e-10


@lru_cache(maxsize=None)
def lex_indices(n: int, p: int) -> tuple:
    """All strictly increasing p-tuples from {1..n}, lexicographic order."""
    return tuple(itertools.combinations(range(1, n + 1), p))


@lru_cache(maxsize=None)
def lex_position(n: int, p: int) -> dict:
    return {idx: k for k, idx in enumerate(lex_indices(n, p))}


def _sorted_sign(seq):
    """Sort a sequence of distinct ints, returning (tuple, permutation sign).

    Returns (None, 0) when the sequence has a repeated index.
    """
    seq = list(seq)
    sign = 1
    # insertion sort; lengths are tiny (p <= n <= ~8)
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(seq, seq[1:]):
        if a == b:
            return None, 0
    return tuple(seq), sign


class ExteriorElement:
    """Degree-p alternating tensor over R^n with sparse coefficients."""

    __slots__ = ("n", "p", "coeffs")

    def __init__(self, n, p, coeffs=None, drop_tol=DROP_TOL):
        if n < 0 or p < 0 or p > n:
            raise ValueError(f"invalid degree p={p} for ambient dimension n={n}")
        self.n = int(n)
        self.p = int(p)
        clean = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != p:
                raise ValueError(f"index tuple {idx} has wrong degree (expected {p})")
            if any(not (1 <= i <= n) for i in idx):
                raise ValueError(f"index tuple {idx} out of range [1, {n}]")
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValueError(f"index tuple {idx} is not strictly increasing")
            c = float(c)
            if abs(c) > drop_tol:
                clean[idx] = clean.get(idx, 0.0) + c
        self.coeffs = {k: v for k, v in clean.items() if abs(v) > drop_tol}

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n, p):
        return cls(n, p, {})

    @classmethod
    def basis(cls, n, indices, coeff=1.0):
        """Basis element dx_{i1} ^ ... ^ dx_{ip} (indices need not be sorted)."""
        idx, sign = _sorted_sign(indices)
        if idx is None:
            return cls.zero(n, len(tuple(indices)))
        return cls(n, len(idx), {idx: sign * coeff})

    @classmethod
    def from_vector(cls, v):
        """Degree-1 element from a coordinate vector."""
        v = np.asarray(v, dtype=float)
        return cls(v.size, 1, {(i + 1,): float(v[i]) for i in range(v.size)})

    @classmethod
    def from_coeff_vector(cls, n, p, vec, drop_tol=DROP_TOL):
        vec = np.asarray(vec, dtype=float)
        basis = lex_indices(n, p)
        if vec.size != len(basis):
            raise ValueError(f"coefficient vector has size {vec.size}, expected {len(basis)}")
        return cls(n, p, {basis[k]: vec[k] for k in range(vec.size)}, drop_tol=drop_tol)

    # -- linear structure ---------------------------------------------------

    def _check_same_space(self, other):
        if self.n != other.n or self.p != other.p:
            raise ValueError(
                f"mismatched spaces: ({self.n},{self.p}) vs ({other.n},{other.p})")

    def __add__(self, other):
        self._check_same_space(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return ExteriorElement(self.n, self.p, out)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        scalar = float(scalar)
        return ExteriorElement(self.n, self.p,
                               {k: scalar * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def norm(self):
        return math.sqrt(sum(c * c for c in self.coeffs.values()))

    def is_zero(self, tol=0.0):
        return all(abs(c) <= tol for c in self.coeffs.values())

    def to_coeff_vector(self):
        pos = lex_position(self.n, self.p)
        vec = np.zeros(len(pos))
        for k, v in self.coeffs.items():
            vec[pos[k]] = v
        return vec

    def __repr__(self):
        if not self.coeffs:
            return f"ExteriorElement({self.n},{self.p}; 0)"
        terms = " + ".join(f"{c:g}*dx{''.join(map(str, idx))}"
                           for idx, c in sorted(self.coeffs.items()))
        return f"ExteriorElement({self.n},{self.p}; {terms})"

    def __eq__(self, other):
        if not isinstance(other, ExteriorElement):
            return NotImplemented
        return (self.n, self.p, self.coeffs) == (other.n, other.p, other.coeffs)

    def allclose(self, other, tol=1e-12):
        self._check_same_space(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self.coeffs.get(k, 0.0) - other.coeffs.get(k, 0.0)) <= tol
                   for k in keys)


# ---------------------------------------------------------------------------
# core operations
# ---------------------------------------------------------------------------

def wedge(a: ExteriorElement, b: ExteriorElement) -> ExteriorElement:
    """Exterior product; bilinear and graded-anticommutative."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    if a.p + b.p > a.n:
        raise ValueError(f"degree overflow: {a.p}+{b.p} > {a.n}")
    out = {}
    for ia, ca in a.coeffs.items():
        for ib, cb in b.coeffs.items():
            idx, sign = _sorted_sign(ia + ib)
            if idx is None:
                continue
            out[idx] = out.get(idx, 0.0) + sign * ca * cb
    return ExteriorElement(a.n, a.p + b.p, out)


def interior_product(v, a: ExteriorElement) -> ExteriorElement:
    """Contraction v -| a; degree drops by one, antiderivation in a."""
    v = np.asarray(v, dtype=float)
    if v.size != a.n:
        raise ValueError(f"dimension mismatch: vector has {v.size}, element has {a.n}")
    if a.p < 1:
        raise ValueError("cannot contract a degree-0 element")
    out = {}
    for idx, c in a.coeffs.items():
        for pos, i in enumerate(idx):
            vi = v[i - 1]
            if vi == 0.0:
                continue
            rest = idx[:pos] + idx[pos + 1:]
            out[rest] = out.get(rest, 0.0) + c * vi * (-1) ** pos
    return ExteriorElement(a.n, a.p - 1, out)


def derivation_extend(A, phi: ExteriorElement) -> ExteriorElement:
    """Extend the endomorphism A of R^n to degree p as a derivation.

    Acts on each of the p slots of phi in turn; for symmetric A this is the
    map taking a Hessian to the associated p-form.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (phi.n, phi.n):
        raise ValueError(f"dimension mismatch: A is {A.shape}, expected ({phi.n},{phi.n})")
    out = {}
    for idx, c in phi.coeffs.items():
        for pos, i in enumerate(idx):
            row = A[i - 1]
            for l in range(1, phi.n + 1):
                coef = row[l - 1]
                if coef == 0.0:
                    continue
                new = idx[:pos] + (l,) + idx[pos + 1:]
                sidx, sign = _sorted_sign(new)
                if sidx is None:
                    continue
                out[sidx] = out.get(sidx, 0.0) + c * coef * sign
    return ExteriorElement(phi.n, phi.p, out)


def pairing(alpha: ExteriorElement, xi: ExteriorElement) -> float:
    """Euclidean pairing alpha(xi) under the orthonormal-basis identification."""
    if alpha.n != xi.n or alpha.p != xi.p:
        raise ValueError(
            f"mismatched spaces: ({alpha.n},{alpha.p}) vs ({xi.n},{xi.p})")
    small, big = alpha.coeffs, xi.coeffs
    if len(big) < len(small):
        small, big = big, small
    return sum(c * big.get(k, 0.0) for k, c in small.items())


def hodge_star(a: ExteriorElement) -> ExteriorElement:
    """Hodge dual: a ^ *b = <a,b> vol for the standard orientation."""
    full = set(range(1, a.n + 1))
    out = {}
    for idx, c in a.coeffs.items():
        comp = tuple(sorted(full - set(idx)))
        # sign of the permutation (idx, comp) relative to (1..n)
        inv = sum(1 for i in idx for j in comp if i > j)
        out[comp] = out.get(comp, 0.0) + c * (-1) ** inv
    return ExteriorElement(a.n, a.n - a.p, out)


# ---------------------------------------------------------------------------
# oriented planes
# ---------------------------------------------------------------------------

class SimplePlane:
    """Oriented p-plane given by an orthonormal frame (rows of ``frame``)."""

    __slots__ = ("frame", "_pvector")

    def __init__(self, frame, tol=FRAME_TOL):
        frame = np.asarray(frame, dtype=float)
        if frame.ndim != 2:
            raise ValueError("frame must be a (p, n) array of row vectors")
        p, n = frame.shape
        gram = frame @ frame.T
        if not np.allclose(gram, np.eye(p), atol=tol):
            raise ValueError("frame is not orthonormal within tolerance")
        self.frame = frame
        self._pvector = None

    @property
    def n(self):
        return self.frame.shape[1]

    @property
    def p(self):
        return self.frame.shape[0]

    def pvector(self) -> ExteriorElement:
        """The unit simple p-vector (Pluecker coordinates) of the plane."""
        if self._pvector is None:
            el = ExteriorElement(self.n, 0, {(): 1.0})
            for row in self.frame:
                el = wedge(el, ExteriorElement.from_vector(row))
            self._pvector = el
        return self._pvector

    def span_projector(self) -> np.ndarray:
        return self.frame.T @ self.frame

    def __repr__(self):
        return f"SimplePlane(p={self.p}, n={self.n})"


def simple_from_frame(frame, tol=1e-12):
    """Orthonormalize a spanning frame preserving orientation.

    Returns (SimplePlane, unit p-vector).  Raises on rank deficiency.
    """
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2:
        frame = np.atleast_2d(frame)
    p, n = frame.shape
    q, r = np.linalg.qr(frame.T)  # columns of q span the frame
    diag = np.diag(r)
    scale = max(np.abs(frame).max(), 1.0)
    if np.any(np.abs(diag) <= tol * scale):
        raise ValueError("rank-deficient frame")
    # force positive diagonal so the orthonormal frame keeps the orientation
    signs = np.sign(diag)
    q = q * signs[None, :]
    plane = SimplePlane(q.T)
    return plane, plane.pvector()


def is_simple(xi: ExteriorElement, tol=1e-10) -> bool:
    """Pluecker criterion: (v -| xi) ^ xi = 0 for all basis vectors v."""
    nrm2 = sum(c * c for c in xi.coeffs.values())
    if nrm2 == 0.0:
        raise ValueError("zero input")
    worst = 0.0
    for i in range(xi.n):
        v = np.zeros(xi.n)
        v[i] = 1.0
        rem = wedge(interior_product(v, xi), xi)
        worst = max(worst, rem.norm())
    return worst / nrm2 <= tol


def angular_distance(a: SimplePlane, b: SimplePlane):
    """(theta_max, oriented) between two planes of the same (n, p).

    theta_max is the largest principal angle between the spans; ``oriented``
    is True when the p-vectors pair positively (same orientation class).
    """
    if a.n != b.n or a.p != b.p:
        raise ValueError("planes live in different spaces")
    sing = np.linalg.svd(a.frame @ b.frame.T, compute_uv=False)
    theta = float(np.arccos(np.clip(sing.min(), -1.0, 1.0)))
    oriented = pairing(a.pvector(), b.pvector()) > 0.0
    return theta, oriented


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def form_to_json(a: ExteriorElement) -> dict:
    terms = [{"indices": list(idx), "coeff": c}
             for idx, c in sorted(a.coeffs.items())]
    return {"n": a.n, "p": a.p, "terms": terms}


def form_from_json(data) -> ExteriorElement:
    if isinstance(data, str):
        data = json.loads(data)
    for key in ("n", "p", "terms"):
        if key not in data:
            raise ValueError(f"form spec missing required key '{key}'")
    extra = set(data) - {"n", "p", "terms"}
    if extra:
        raise ValueError(f"form spec has unknown keys {sorted(extra)}")
    n, p = int(data["n"]), int(data["p"])
    coeffs = {}
    for k, term in enumerate(data["terms"]):
        if set(term) != {"indices", "coeff"}:
            raise ValueError(f"term {k}: expected exactly 'indices' and 'coeff'")
        idx = tuple(int(i) for i in term["indices"])
        if len(idx) != p:
            raise ValueError(f"term {k}: {len(idx)} indices for degree {p}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError(f"term {k}: indices {idx} not strictly increasing")
        if idx and (idx[0] < 1 or idx[-1] > n):
            raise ValueError(f"term {k}: indices {idx} out of range [1,{n}]")
        coeffs[idx] = coeffs.get(idx, 0.0) + float(term["coeff"])
    return ExteriorElement(n, p, coeffs)
