"""Bounded-variable primal simplex with Bland's rule.

Solves  min c.x  subject to  A x = b,  l <= x <= u  (l finite, u may be inf).

Instances here are tiny (a few hundred columns at most) so the tableau work
uses dense solves; determinism matters more than speed.  Bland's rule keeps
the method from cycling on the degenerate instances the duality models
produce.  On infeasible problems the phase-1 duals provide the Farkas
certificate used by the alternative theorems.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-9


@dataclass
class LPResult:
    status: str                 # optimal | infeasible | unbounded | maxiter
    x: np.ndarray | None = None
    obj: float | None = None
    y: np.ndarray | None = None          # row multipliers of the final phase
    phase1_obj: float = 0.0
    iterations: int = 0
    meta: dict = field(default_factory=dict)


class _Tableau:
    def __init__(self, A, c, l, u, basis, status, x):
        self.A = A
        self.c = c
        self.l = l
        self.u = u
        self.basis = basis          # list of variable indices, length m
        self.status = status        # per-variable: 'B', 'L', 'U'
        self.x = x
        self.m, self.nv = A.shape
        self.b = A @ x              # fixed right-hand side

    def duals(self):
        B = self.A[:, self.basis]
        return np.linalg.solve(B.T, self.c[self.basis])

    def _refresh_basics(self):
        """Recompute basic values from the nonbasic bounds (drift control)."""
        rhs = self.b.copy()
        for j in range(self.nv):
            if self.status[j] == 'L':
                self.x[j] = self.l[j]
            elif self.status[j] == 'U':
                self.x[j] = self.u[j]
            if self.status[j] != 'B':
                rhs -= self.A[:, j] * self.x[j]
        B = self.A[:, self.basis]
        xb = np.linalg.solve(B, rhs)
        for k, j in enumerate(self.basis):
            self.x[j] = xb[k]

    def iterate(self, tol, max_iter):
        it = 0
        while it < max_iter:
            it += 1
            if it % 64 == 0:
                self._refresh_basics()
            y = self.duals()
            z = self.c - y @ self.A
            entering = -1
            direction = 0.0
            for j in range(self.nv):     # Bland: smallest eligible index
                if self.status[j] == 'L' and z[j] < -tol:
                    entering, direction = j, 1.0
                    break
                if self.status[j] == 'U' and z[j] > tol:
                    entering, direction = j, -1.0
                    break
            if entering < 0:
                self._refresh_basics()
                return 'optimal', it
            B = self.A[:, self.basis]
            d = np.linalg.solve(B, self.A[:, entering]) * direction

            # ratio test: collect the blocking step for every basic variable
            span = self.u[entering] - self.l[entering]
            ratios = np.full(self.m, np.inf)
            hits_lower = np.zeros(self.m, dtype=bool)
            for k in range(self.m):
                jb = self.basis[k]
                if d[k] > tol:
                    ratios[k] = (self.x[jb] - self.l[jb]) / d[k]
                    hits_lower[k] = True
                elif d[k] < -tol:
                    ratios[k] = (self.u[jb] - self.x[jb]) / (-d[k])
            t_min = min(float(ratios.min()), span)
            if not np.isfinite(t_min):
                return 'unbounded', it
            t_min = max(t_min, 0.0)
            # Bland leaving rule: among blockers at the minimum ratio, the
            # basic variable with the smallest index leaves
            leave = -1
            for k in range(self.m):
                if ratios[k] <= t_min + 1e-12:
                    if leave < 0 or self.basis[k] < self.basis[leave]:
                        leave = k
            if leave >= 0 and ratios[leave] > span:
                leave = -1            # the entering bound flip wins

            self.x[entering] += direction * t_min
            for k in range(self.m):
                self.x[self.basis[k]] -= d[k] * t_min
            if leave < 0:
                self.status[entering] = 'U' if self.status[entering] == 'L' else 'L'
                self.x[entering] = (self.u[entering] if self.status[entering] == 'U'
                                    else self.l[entering])
            else:
                out = self.basis[leave]
                self.x[out] = self.l[out] if hits_lower[leave] else self.u[out]
                self.status[out] = 'L' if hits_lower[leave] else 'U'
                self.basis[leave] = entering
                self.status[entering] = 'B'
        return 'maxiter', it


def solve_lp(c, A, b, lower=None, upper=None, tol=FEAS_TOL, max_iter=None):
    """Two-phase bounded-variable primal simplex.

    Returns an LPResult.  ``y`` holds the equality-row multipliers: for an
    optimal solve these are the LP duals; for an infeasible one they are the
    phase-1 duals, i.e. a Farkas certificate (y.A <= 0 on variables at their
    lower bound zero, y.b > 0).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    b = np.asarray(b, dtype=float).reshape(m)
    c = np.asarray(c, dtype=float).reshape(n)
    l = np.zeros(n) if lower is None else np.asarray(lower, dtype=float).reshape(n)
    u = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float).reshape(n)
    if not np.all(np.isfinite(l)):
        raise ValueError("lower bounds must be finite")
    if np.any(u < l):
        raise ValueError("upper bound below lower bound")
    if max_iter is None:
        max_iter = 200 * (n + m + 10)

    # start all structural variables at their lower bound
    x0 = l.copy()
    r = b - A @ x0
    signs = np.where(r >= 0, 1.0, -1.0)
    A1 = np.hstack([A, np.diag(signs)])
    l1 = np.concatenate([l, np.zeros(m)])
    u1 = np.concatenate([u, np.full(m, np.inf)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    x1 = np.concatenate([x0, np.abs(r)])
    basis = list(range(n, n + m))
    status = ['L'] * n + ['B'] * m

    tab = _Tableau(A1, c1, l1, u1, basis, status, x1)
    st, it1 = tab.iterate(tol, max_iter)
    phase1 = float(c1 @ tab.x)
    if st == 'maxiter':
        return LPResult('maxiter', iterations=it1, phase1_obj=phase1)
    if phase1 > tol * max(1.0, float(np.abs(b).max(initial=0.0))):
        y = tab.duals()
        return LPResult('infeasible', y=y, phase1_obj=phase1, iterations=it1)

    # phase 2: freeze the artificials at zero via zero-width bounds
    tab.u[n:] = 0.0
    tab.x[n:] = np.clip(tab.x[n:], 0.0, 0.0)
    tab.c = np.concatenate([c, np.zeros(m)])
    for j in range(n, n + m):
        if tab.status[j] != 'B':
            tab.status[j] = 'L'
    st, it2 = tab.iterate(tol, max_iter)
    x = tab.x[:n].copy()
    obj = float(c @ x)
    if st == 'unbounded':
        return LPResult('unbounded', x=x, obj=obj, iterations=it1 + it2,
                        phase1_obj=phase1)
    if st == 'maxiter':
        return LPResult('maxiter', x=x, obj=obj, iterations=it1 + it2,
                        phase1_obj=phase1)
    return LPResult('optimal', x=x, obj=obj, y=tab.duals(),
                    iterations=it1 + it2, phase1_obj=phase1)
