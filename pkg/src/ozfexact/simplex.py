"""Dense tableau simplex for  max c^T x  s.t.  A x <= b, x >= 0, b >= 0.

The all-slack basis is feasible because b >= 0, so no artificial phase is
needed.  Pivoting follows Dantzig's rule and falls back to Bland's rule after
a run of degenerate pivots; duals are recovered from the final basis.  An
exact rational re-solve of the final basis is available for certificates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .errors import DegenerateLPError


@dataclass
class LPResult:
    x: np.ndarray
    y: np.ndarray
    value: float
    basis: np.ndarray
    iterations: int


def _refactor(A_full, b, basis):
    Bm = A_full[:, basis]
    tab = np.linalg.solve(Bm, np.column_stack([A_full, b]))
    return tab[:, :-1], tab[:, -1]


def _pivot_loop(c_full, A_full, b, basis, T, rhs, max_iter, tol, stall_limit):
    m = A_full.shape[0]
    scale = max(1.0, float(np.max(np.abs(c_full))))
    degenerate_run = 0
    it = 0
    while True:
        if it and it % 100 == 0:
            T, rhs = _refactor(A_full, b, basis)
            rhs = np.maximum(rhs, 0.0)
        cb = c_full[basis]
        red = c_full - cb @ T
        red[basis] = 0.0
        bland = degenerate_run >= stall_limit
        cand = np.nonzero(red > tol * scale)[0]
        if cand.size == 0:
            return basis, it
        if it >= max_iter:
            raise DegenerateLPError("simplex iteration guard exceeded: degenerate LP, enable exact mode")
        e = int(cand[0]) if bland else int(cand[np.argmax(red[cand])])
        col = T[:, e]
        pos = col > tol
        if not np.any(pos):
            raise ValueError("linear program is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = rhs[pos] / col[pos]
        rmin = ratios.min()
        ties = np.nonzero(ratios <= rmin + 1e-14 * max(1.0, abs(rmin)))[0]
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(col[ties])])
        degenerate_run = degenerate_run + 1 if rmin <= 1e-14 else 0
        piv = T[r, e]
        T[r] /= piv
        rhs[r] /= piv
        f = T[:, e].copy()
        f[r] = 0.0
        T -= np.outer(f, T[r])
        rhs -= f * rhs[r]
        basis[r] = e
        it += 1


def _dual_cleanup(c_full, A_full, b, basis, tol, max_iter):
    """Dual simplex pivots that restore primal feasibility of a dual-feasible basis."""
    T, rhs = _refactor(A_full, b, basis)
    for it in range(max_iter):
        scale = max(1.0, float(np.max(np.abs(rhs))))
        r = int(np.argmin(rhs))
        if rhs[r] >= -1e-12 * scale:
            return basis, T, np.maximum(rhs, 0.0), it
        row = T[r]
        neg = np.nonzero(row < -tol)[0]
        neg = neg[~np.isin(neg, basis)]
        if neg.size == 0:
            raise ValueError("linear program is infeasible")
        red = c_full - c_full[basis] @ T
        ratios = np.abs(np.minimum(red[neg], 0.0) / row[neg])
        e = int(neg[np.argmin(ratios)])
        basis[r] = e
        if (it + 1) % 50 == 0:
            T, rhs = _refactor(A_full, b, basis)
            continue
        piv = T[r, e]
        T[r] /= piv
        rhs[r] /= piv
        f = T[:, e].copy()
        f[r] = 0.0
        T -= np.outer(f, T[r])
        rhs -= f * rhs[r]
    raise DegenerateLPError("dual simplex cleanup did not converge")


def simplex_max(c, A, b, max_iter: Optional[int] = None, tol: float = 1e-11,
                stall_limit: int = 50, perturb: bool = True) -> LPResult:
    """Maximize ``c @ x`` subject to ``A @ x <= b``, ``x >= 0``.

    With ``perturb`` the right-hand side is first lifted by small distinct
    amounts, which removes the degeneracy of zero rows; the resulting basis
    then warm-starts a second pass on the original data.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if np.any(b < 0):
        raise ValueError("right-hand side must be nonnegative")
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    A_full = np.hstack([A, np.eye(m)])
    c_full = np.concatenate([c, np.zeros(m)])
    basis = np.arange(n, n + m)
    total = 0
    if perturb:
        rng = np.random.default_rng(0)
        bp = b + 1e-7 * max(1.0, float(np.max(b, initial=0.0))) * (1.0 + rng.random(m))
        basis, it = _pivot_loop(c_full, A_full, bp, basis, A_full.copy(), bp.copy(), max_iter, tol, stall_limit)
        total += it
        basis, T, rhs, it = _dual_cleanup(c_full, A_full, b, basis, tol, max_iter)
        total += it
    else:
        T, rhs = A_full.copy(), b.copy()
    basis, it = _pivot_loop(c_full, A_full, b, basis, T, rhs, max_iter, tol, stall_limit)
    total += it
    Bm = A_full[:, basis]
    xb = np.linalg.solve(Bm, b)
    y = np.linalg.solve(Bm.T, c_full[basis])
    x_full = np.zeros(n + m)
    x_full[basis] = np.maximum(xb, 0.0)
    return LPResult(x_full[:n], y, float(c @ x_full[:n]), basis.copy(), total)


def simplex_eq_min(c, A_eq, b_eq, tol: float = 1e-10):
    """Two-phase simplex for  min c^T x  s.t.  A_eq x = b_eq, x >= 0.

    Returns ``(x, value)``; raises ``ValueError`` when infeasible.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A_eq, dtype=float)).copy()
    b = np.asarray(b_eq, dtype=float).copy()
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    A_full = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), -np.ones(m)])
    basis = np.arange(n, n + m)
    T = A_full.copy()
    # reduced costs are taken against the artificial basis, as the tableau is
    basis, _ = _pivot_loop(c1, A_full, b, basis, T, b.copy(), 50 * (m + n) + 1000, 1e-12, 50)
    Bm = A_full[:, basis]
    xb = np.linalg.solve(Bm, b)
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    art = basis >= n
    if np.any(xb[art] > tol * scale):
        raise ValueError("linear program is infeasible")
    # drive zero-level artificials out, dropping redundant rows
    T = np.linalg.solve(Bm, A_full)
    keep = np.ones(m, dtype=bool)
    for r in np.nonzero(art)[0]:
        cand = np.nonzero((np.abs(T[r, :n]) > 1e-9) & ~np.isin(np.arange(n), basis))[0]
        if cand.size:
            e = int(cand[np.argmax(np.abs(T[r, cand]))])
            basis[r] = e
            T = np.linalg.solve(A_full[:, basis], A_full)
        else:
            keep[r] = False
    A2 = A[keep]
    b2 = b[keep]
    basis = basis[keep]
    A2_full = A2
    c2 = -c
    T2, rhs2 = _refactor(A2_full, b2, basis)
    basis, _ = _pivot_loop(c2, A2_full, b2, basis, T2, np.maximum(rhs2, 0.0), 50 * (m + n) + 1000, 1e-12, 50)
    x = np.zeros(n)
    x[basis] = np.maximum(np.linalg.solve(A2_full[:, basis], b2), 0.0)
    return x, float(c @ x)


def _exact_tableau(Af, bf, basis):
    """B^{-1} [A | b] over the rationals; None when the basis is singular."""
    m = len(bf)
    aug = [row[:] + [bf[i]] for i, row in enumerate(Af)]
    width = len(aug[0])
    for r, col in enumerate(basis):
        piv = next((k for k in range(r, m) if aug[k][col] != 0), None)
        if piv is None:
            return None
        aug[r], aug[piv] = aug[piv], aug[r]
        p = aug[r][col]
        aug[r] = [v / p for v in aug[r]]
        for k in range(m):
            if k != r and aug[k][col] != 0:
                fac = aug[k][col]
                rowr = aug[r]
                aug[k] = [aug[k][j] - fac * rowr[j] for j in range(width)]
    return aug


@dataclass
class ExactResult:
    value: Fraction
    x: List[Fraction]
    y: List[Fraction]
    basis: List[int]
    pivots: int


def exact_simplex(c, A, b, basis: Optional[Sequence[int]] = None, max_pivots: int = 100000) -> ExactResult:
    """Rational simplex with Bland's rule on the same problem as :func:`simplex_max`.

    The floating-point data are taken as exact rationals.  A warm-start basis
    is used when it is exactly primal feasible; otherwise the slack basis.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    Af = [[Fraction(float(v)) for v in row] + [Fraction(int(i == j)) for j in range(m)] for i, row in enumerate(A)]
    cf = [Fraction(float(v)) for v in c] + [Fraction(0)] * m
    bf = [Fraction(float(v)) for v in b]
    if any(v < 0 for v in bf):
        raise ValueError("right-hand side must be nonnegative")
    tab = None
    if basis is not None:
        basis = [int(i) for i in basis]
        tab = _exact_tableau(Af, bf, basis)
        if tab is not None and any(row[-1] < 0 for row in tab):
            tab = None
    if tab is None:
        basis = list(range(n, n + m))
        tab = [row[:] + [bf[i]] for i, row in enumerate(Af)]
    width = n + m
    pivots = 0
    while True:
        y_red = [cf[j] - sum(cf[basis[i]] * tab[i][j] for i in range(m) if tab[i][j] != 0) for j in range(width)]
        enter = next((j for j in range(width) if j not in basis and y_red[j] > 0), None)
        if enter is None:
            break
        if pivots >= max_pivots:
            raise DegenerateLPError("exact simplex pivot guard exceeded")
        best = None
        for i in range(m):
            a = tab[i][enter]
            if a > 0:
                ratio = tab[i][-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise ValueError("linear program is unbounded")
        r = best[1]
        p = tab[r][enter]
        tab[r] = [v / p for v in tab[r]]
        for i in range(m):
            if i != r and tab[i][enter] != 0:
                fac = tab[i][enter]
                rowr = tab[r]
                tab[i] = [tab[i][j] - fac * rowr[j] for j in range(width + 1)]
        basis[r] = enter
        pivots += 1
    x = [Fraction(0)] * width
    for i, j in enumerate(basis):
        x[j] = tab[i][-1]
    # duals: y_i = -(reduced cost of slack i)
    y = [-(cf[n + i] - sum(cf[basis[k]] * tab[k][n + i] for k in range(m))) for i in range(m)]
    value = sum(cf[j] * x[j] for j in range(n))
    return ExactResult(value, x[:n], y, basis, pivots)


def _exact_solve(M: List[List[Fraction]], rhs: List[Fraction]) -> Optional[List[Fraction]]:
    """Gauss-Jordan elimination over the rationals; None when singular."""
    size = len(rhs)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(M)]
    for col in range(size):
        piv = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                fac = aug[r][col]
                aug[r] = [a - fac * bb for a, bb in zip(aug[r], aug[col])]
    return [aug[i][size] for i in range(size)]


@dataclass
class ExactCheck:
    dual_feasible: bool
    primal_feasible: bool
    value: Fraction
    y: List[Fraction]


def exact_basis_check(c, A, b, basis: Sequence[int]) -> ExactCheck:
    """Re-solve a basis of  max c^T x, A x <= b, x >= 0  in rational arithmetic.

    The floating-point data are taken as exact rationals.  A dual-feasible
    basis gives a rigorous upper bound ``value`` on the optimum of that data.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    Af = [[Fraction(float(v)) for v in row] + [Fraction(int(i == j)) for j in range(m)] for i, row in enumerate(A)]
    cf = [Fraction(float(v)) for v in c] + [Fraction(0)] * m
    bf = [Fraction(float(v)) for v in b]
    basis = [int(i) for i in basis]
    Bt = [[Af[i][basis[r]] for i in range(m)] for r in range(m)]
    y = _exact_solve(Bt, [cf[j] for j in basis])
    if y is None:
        return ExactCheck(False, False, Fraction(0), [])
    dual_ok = all(v >= 0 for v in y)
    if dual_ok:
        for j in range(n):
            if j in basis:
                continue
            if cf[j] - sum(y[i] * Af[i][j] for i in range(m)) > 0:
                dual_ok = False
                break
    Bm = [[Af[i][j] for j in basis] for i in range(m)]
    xb = _exact_solve(Bm, bf)
    primal_ok = xb is not None and all(v >= 0 for v in xb)
    value = sum(yi * bi for yi, bi in zip(y, bf))
    return ExactCheck(dual_ok, primal_ok, value, y)
