"""Polyhedral convex functions F(x) = max_k <g_k, x> + b_k and their subdifferentials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConstructionError
from .simplex import simplex_eq_min

ACTIVE_TOL = 1e-9


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {l >= 0, sum l = 1}."""
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    r = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[r] / (r + 1), 0.0)


def _convex_weights(M: np.ndarray, y: np.ndarray, tol: float = 1e-10) -> Optional[np.ndarray]:
    """Weights l on the simplex with M^T l = y, or None when y is outside the hull."""
    P = M.shape[0]
    A = np.vstack([M.T, np.ones((1, P))])
    b = np.append(y, 1.0)
    try:
        lam, _ = simplex_eq_min(np.zeros(P), A, b, tol=tol)
    except ValueError:
        return None
    if np.linalg.norm(M.T @ lam - y) > 1e-8 * max(1.0, float(np.linalg.norm(y))):
        return None
    return lam


@dataclass(frozen=True)
class PolyhedralConvexFunction:
    g: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if g.shape[0] != b.size or b.size == 0:
            raise ValueError("need one offset per gradient and at least one piece")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.g.shape[1]

    @property
    def pieces(self) -> int:
        return self.b.size

    def values(self, x) -> np.ndarray:
        return self.g @ np.asarray(x, dtype=float) + self.b

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(np.max(self.values(x)))
        return np.max(x @ self.g.T + self.b, axis=1)

    def active(self, x, tol: float = ACTIVE_TOL) -> np.ndarray:
        v = self.values(x)
        top = float(np.max(v))
        return np.nonzero(v >= top - tol * max(1.0, abs(top)))[0]

    def conjugate(self, y) -> float:
        """F*(y) = min{-sum l_k b_k : sum l_k g_k = y, l in the simplex} (inf outside the hull)."""
        y = np.asarray(y, dtype=float)
        A = np.vstack([self.g.T, np.ones((1, self.pieces))])
        try:
            _, val = simplex_eq_min(-self.b, A, np.append(y, 1.0))
        except ValueError:
            return math.inf
        return val

    def fenchel_young_gap(self, x, y) -> float:
        """F(x) + F*(y) - <x, y>; zero exactly when y is a subgradient at x."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self(x) + self.conjugate(y) - float(x @ y)

    def least_norm_subgradient(self, x, tol: float = ACTIVE_TOL, iters: int = 2000) -> Tuple[np.ndarray, np.ndarray]:
        """Smallest element of the hull of active gradients; returns (y, active)."""
        act = self.active(x, tol)
        M = self.g[act]
        if act.size == 1:
            return M[0].copy(), act
        lam = np.full(act.size, 1.0 / act.size)
        L = max(float(np.linalg.norm(M @ M.T, 2)), 1e-300)
        z, t = lam.copy(), 1.0
        for _ in range(iters):
            new = project_simplex(z - (M @ (M.T @ z)) / L)
            t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
            z = new + (t - 1) / t_new * (new - lam)
            lam, t = new, t_new
        return M.T @ lam, act

    def prox(self, v, scale: float = 1.0, iters: int = 400) -> Tuple[np.ndarray, np.ndarray]:
        """argmin_x scale F(x) + |x - v|^2 / 2; returns (x, y) with y = (v - x)/scale in dF(x).

        A projected-gradient solve of the dual over the simplex locates the
        active pieces; the minimizer is then recomputed exactly on that face.
        """
        v = np.asarray(v, dtype=float)
        s = float(scale)
        G, b = self.g, self.b
        P = self.pieces
        if P == 1:
            x = v - s * G[0]
            return x, G[0].copy()
        lin = G @ v + b
        Q = s * s * (G @ G.T)
        L = max(float(np.linalg.norm(Q, 2)), 1e-300)
        lam = np.full(P, 1.0 / P)
        z, t = lam.copy(), 1.0
        for _ in range(iters):
            grad = Q @ z - s * lin
            new = project_simplex(z - grad / L)
            t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
            z = new + (t - 1) / t_new * (new - lam)
            lam, t = new, t_new
        x0 = v - s * G.T @ lam
        best = None
        for tol in (1e-6, 1e-8, 1e-10, 1e-4):
            cand = self._face_solve(v, s, self.active(x0, tol))
            if cand is None:
                continue
            x, y = cand
            obj = s * self(x) + 0.5 * float((x - v) @ (x - v))
            if best is None or obj < best[0] - 1e-15:
                best = (obj, x, y)
        if best is None:
            return x0, (v - x0) / s
        return best[1], best[2]

    def _face_solve(self, v, s, act):
        G, b = self.g, self.b
        g0, b0 = G[act[0]], b[act[0]]
        xu = v - s * g0
        if act.size > 1:
            E = G[act[1:]] - g0
            f = b0 - b[act[1:]]
            corr, *_ = np.linalg.lstsq(E, E @ xu - f, rcond=1e-12)
            x = xu - corr
            if np.linalg.norm(E @ x - f) > 1e-9 * max(1.0, float(np.linalg.norm(f))):
                return None
        else:
            x = xu
        vals = G @ x + b
        top = float(vals[act[0]])
        if np.max(vals) > top + 1e-12 * max(1.0, abs(top)):
            return None
        y = (v - x) / s
        if _convex_weights(G[act], y) is None:
            return None
        return x, y

    def shifted(self, x0, y0) -> "PolyhedralConvexFunction":
        """x -> F(x + x0) - <y0, x> - F(x0)."""
        x0 = np.asarray(x0, dtype=float)
        y0 = np.asarray(y0, dtype=float)
        return PolyhedralConvexFunction(self.g - y0, self.b + self.g @ x0 - self(x0))

    def to_dict(self) -> dict:
        return {"g": self.g.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PolyhedralConvexFunction":
        return cls(np.asarray(d["g"], dtype=float), np.asarray(d["b"], dtype=float))


@dataclass(frozen=True)
class SlopeNonlinearity:
    """f with graph {(x + y/kappa, y) : y in dF(x)}; f = dF when kappa is infinite."""

    potential: PolyhedralConvexFunction
    kappa: float = math.inf

    @property
    def dim(self) -> int:
        return self.potential.dim

    def evaluate(self, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (y, x, active) with y in f(z) and y in dF(x)."""
        z = np.asarray(z, dtype=float)
        F = self.potential
        if math.isinf(self.kappa):
            y, act = F.least_norm_subgradient(z)
            return y, z.copy(), act
        x, _ = F.prox(z, 1.0 / self.kappa)
        y = self.kappa * (z - x)
        return y, x, F.active(x)

    def __call__(self, z) -> np.ndarray:
        return self.evaluate(z)[0]

    def membership_gap(self, z, y) -> float:
        """Fenchel-Young gap of (z - y/kappa, y) for dF."""
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        x = z if math.isinf(self.kappa) else z - y / self.kappa
        return self.potential.fenchel_young_gap(x, y)


def eval_nonlinearity(nl: SlopeNonlinearity, z):
    """(value, active set) of the nonlinearity at ``z``."""
    y, _, act = nl.evaluate(z)
    return y, act


def check_resolvent(nl: SlopeNonlinearity, z, tol: float = 1e-9) -> float:
    gap = nl.membership_gap(z, nl(z))
    if gap > tol:
        raise ConstructionError(f"resolvent failure: Fenchel-Young gap {gap:.3g}")
    return gap
