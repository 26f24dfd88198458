"""Sparse multivariate polynomials and polynomial-coefficient forms.

Polynomials power the test families of the finite duality models, the
built-in scalar fields, and the exact integration of forms over simplices
(barycentric moment formula, exact for any polynomial degree).
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .exterior import ExteriorElement, _sorted_sign, lex_indices


class Polynomial:
    """Polynomial in n variables, stored as {exponent tuple: coefficient}."""

    __slots__ = ("n", "terms")

    def __init__(self, n, terms=None, drop_tol=0.0):
        self.n = int(n)
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.n or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent tuple {exps} for n={self.n}")
            c = float(c)
            if c != 0.0 and abs(c) > drop_tol:
                clean[exps] = clean.get(exps, 0.0) + c
        self.terms = {k: v for k, v in clean.items() if v != 0.0}

    @classmethod
    def constant(cls, n, c):
        return cls(n, {(0,) * n: c})

    @classmethod
    def coordinate(cls, n, i):
        """The coordinate function x_i (1-based)."""
        e = [0] * n
        e[i - 1] = 1
        return cls(n, {tuple(e): 1.0})

    @classmethod
    def monomial(cls, n, exps, c=1.0):
        return cls(n, {tuple(exps): c})

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.n, other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return Polynomial(self.n, out)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.n, other)
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial(self.n, {k: other * v for k, v in self.terms.items()})
        out = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0.0) + va * vb
        return Polynomial(self.n, out)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        total = 0.0
        for exps, c in self.terms.items():
            v = c
            for xi, e in zip(x, exps):
                if e:
                    v *= xi ** e
            total += v
        return total

    def partial(self, i):
        """d/dx_i (1-based)."""
        out = {}
        for exps, c in self.terms.items():
            e = exps[i - 1]
            if e == 0:
                continue
            new = list(exps)
            new[i - 1] -= 1
            k = tuple(new)
            out[k] = out.get(k, 0.0) + c * e
        return Polynomial(self.n, out)

    def gradient_at(self, x):
        return np.array([self.partial(i)(x) for i in range(1, self.n + 1)])

    def hessian_at(self, x):
        H = np.zeros((self.n, self.n))
        for i in range(1, self.n + 1):
            pi = self.partial(i)
            for j in range(i, self.n + 1):
                H[i - 1, j - 1] = H[j - 1, i - 1] = pi.partial(j)(x)
        return H

    def substitute_linear(self, M, c=None):
        """Substitute x_j = sum_i M[i, j] t_i + c_j; result in the t variables.

        M has shape (m, n) where m is the number of new variables.
        """
        M = np.asarray(M, dtype=float)
        m, n = M.shape
        if n != self.n:
            raise ValueError("substitution shape mismatch")
        c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
        # x_j as degree-1 polynomials in t
        subs = []
        for j in range(n):
            terms = {(0,) * m: c[j]}
            for i in range(m):
                if M[i, j] != 0.0:
                    e = [0] * m
                    e[i] = 1
                    terms[tuple(e)] = M[i, j]
            subs.append(Polynomial(m, terms))
        out = Polynomial.constant(m, 0.0)
        for exps, coef in self.terms.items():
            term = Polynomial.constant(m, coef)
            for j, e in enumerate(exps):
                for _ in range(e):
                    term = term * subs[j]
            out = out + term
        return out

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for exps, c in sorted(self.terms.items()):
            mono = "*".join(f"x{i+1}^{e}" for i, e in enumerate(exps) if e)
            bits.append(f"{c:g}{'*' + mono if mono else ''}")
        return "Polynomial(" + " + ".join(bits) + ")"


# ---------------------------------------------------------------------------
# exact integration over simplices and boxes
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _bary_moment(exps, p):
    """Integral of prod lambda_i^{e_i} over the standard p-simplex, relative
    to its p-volume: p! * prod(e_i!) / (p + sum e_i)!."""
    num = math.factorial(p)
    for e in exps:
        num *= math.factorial(e)
    return num / math.factorial(p + sum(exps))


def simplex_volume(vertices):
    """p-dimensional volume of a simplex with p+1 vertices in R^n."""
    V = np.asarray(vertices, dtype=float)
    E = V[1:] - V[0]
    p = E.shape[0]
    if p == 0:
        return 1.0
    gram = E @ E.T
    det = np.linalg.det(gram)
    return math.sqrt(max(det, 0.0)) / math.factorial(p)


def integrate_over_simplex(poly: Polynomial, vertices) -> float:
    """Exact integral of a polynomial over a geometric simplex in R^n.

    Substitutes x = sum_i lambda_i v_i and applies the Dirichlet moment
    formula; exact for every polynomial degree.
    """
    V = np.asarray(vertices, dtype=float)
    p = V.shape[0] - 1
    vol = simplex_volume(V)
    if vol == 0.0:
        return 0.0
    in_lambda = poly.substitute_linear(V)  # (p+1) barycentric variables
    total = 0.0
    for exps, c in in_lambda.terms.items():
        total += c * _bary_moment(exps, p)
    return total * vol


def integrate_over_box(poly: Polynomial, lo, hi) -> float:
    """Exact integral over the axis box [lo, hi]^n (per-coordinate bounds)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    total = 0.0
    for exps, c in poly.terms.items():
        v = c
        for a, b, e in zip(lo, hi, exps):
            v *= (b ** (e + 1) - a ** (e + 1)) / (e + 1)
        total += v
    return total


# ---------------------------------------------------------------------------
# polynomial-coefficient differential forms
# ---------------------------------------------------------------------------

class PolyForm:
    """Degree-p form with polynomial coefficients: sum_I P_I(x) dx_I."""

    __slots__ = ("n", "p", "comps")

    def __init__(self, n, p, comps=None):
        self.n = int(n)
        self.p = int(p)
        clean = {}
        for idx, poly in (comps or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != p or any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValueError(f"bad index tuple {idx}")
            if not isinstance(poly, Polynomial):
                poly = Polynomial.constant(n, float(poly))
            if poly.terms:
                clean[idx] = clean.get(idx, Polynomial.constant(n, 0.0)) + poly
        self.comps = {k: v for k, v in clean.items() if v.terms}

    @classmethod
    def from_constant(cls, el: ExteriorElement):
        return cls(el.n, el.p,
                   {idx: Polynomial.constant(el.n, c) for idx, c in el.coeffs.items()})

    @classmethod
    def monomial_form(cls, n, p, idx, exps, c=1.0):
        return cls(n, p, {tuple(idx): Polynomial.monomial(n, exps, c)})

    def degree_bound(self):
        return max((poly.degree() for poly in self.comps.values()), default=0)

    def __add__(self, other):
        out = dict(self.comps)
        for k, v in other.comps.items():
            out[k] = out.get(k, Polynomial.constant(self.n, 0.0)) + v
        return PolyForm(self.n, self.p, out)

    def __mul__(self, scalar):
        return PolyForm(self.n, self.p,
                        {k: v * float(scalar) for k, v in self.comps.items()})

    __rmul__ = __mul__

    def d(self) -> "PolyForm":
        """Exterior derivative, computed symbolically."""
        out = {}
        for idx, poly in self.comps.items():
            for i in range(1, self.n + 1):
                dp = poly.partial(i)
                if not dp.terms:
                    continue
                sidx, sign = _sorted_sign((i,) + idx)
                if sidx is None:
                    continue
                acc = out.get(sidx, Polynomial.constant(self.n, 0.0))
                out[sidx] = acc + sign * dp
        return PolyForm(self.n, self.p + 1, out)

    def at(self, x) -> ExteriorElement:
        """Freeze coefficients at the point x."""
        return ExteriorElement(self.n, self.p,
                               {idx: poly(x) for idx, poly in self.comps.items()})

    def pair_with(self, xi: ExteriorElement) -> Polynomial:
        """The scalar polynomial x -> (self at x)(xi) for a constant p-vector."""
        out = Polynomial.constant(self.n, 0.0)
        for idx, poly in self.comps.items():
            c = xi.coeffs.get(idx, 0.0)
            if c:
                out = out + poly * c
        return out


def monomial_exponents(n, max_degree, include_constant=True):
    """All exponent tuples with total degree <= max_degree, graded-lex order."""
    out = []
    for d in range(0 if include_constant else 1, max_degree + 1):
        for exps in itertools.combinations_with_replacement(range(n), d):
            e = [0] * n
            for i in exps:
                e[i] += 1
            out.append(tuple(e))
    return out
