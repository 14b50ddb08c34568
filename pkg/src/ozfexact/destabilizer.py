"""Destabilizing slope-restricted nonlinearities built from a margin-LP dual.

Pipeline: dual vectors y = V sqrt(mu), x = T y; the shift-averaged Gram
matrix Y = U^T U; interpolation pairs (U[:, k], (T (x) I_d) U[:, k]) plus a
zero pair; a polyhedral potential from longest paths; exact subgradient pairs
through the proximal map; an origin shift.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
import numpy as np

from .errors import CertificateError, ConstructionError
from .lti import CirculantMatrix, circulant_from_samples
from .margin import DualCertificate, MarginProblem
from .polyhedral import PolyhedralConvexFunction, SlopeNonlinearity

RANK_TOL = 1e-10
MAX_N = 16


@dataclass(frozen=True)
class DualVectors:
    y: np.ndarray
    x: np.ndarray
    T: CirculantMatrix
    t_star: float
    mu: np.ndarray

    @property
    def N(self) -> int:
        return self.y.size

    def cross_correlations(self) -> np.ndarray:
        """<S^k x, y> for k = 0..N-1."""
        return np.array([float(np.roll(self.x, k) @ self.y) for k in range(self.N)])


def build_dual_vectors(cert: DualCertificate, p: MarginProblem) -> DualVectors:
    if p.oversample != 1:
        raise ValueError("dual vectors need a problem without oversampling")
    N = p.N
    mu = np.asarray(cert.mu, dtype=float)
    if mu.size != N:
        raise ValueError("certificate size does not match the problem")
    mu = np.maximum(mu, 0.0)
    mu = 0.5 * (mu + mu[(-np.arange(N)) % N])
    mu = mu / mu.sum()
    V = p.grid.V
    root = np.sqrt(mu)
    y = V @ root
    x = V @ (p.q * root)
    if max(np.max(np.abs(y.imag)), np.max(np.abs(x.imag))) > 1e-9:
        raise CertificateError("inconsistent dual certificate: dual vectors are not real")
    T = circulant_from_samples(p.q)
    dv = DualVectors(y.real.copy(), x.real.copy(), T, float(max(cert.t_star, 0.0)), mu)
    cc = dv.cross_correlations()
    t = dv.t_star
    worst = max(-t - cc[0], float(np.max(cc - cc[0] - t)))
    if worst > 1e-7:
        raise CertificateError(f"inconsistent dual certificate: cross-correlation violated by {worst:.3g}")
    return dv


@dataclass(frozen=True)
class GramFactor:
    Y: np.ndarray
    U: np.ndarray

    @property
    def d(self) -> int:
        return self.U.shape[0]


def build_gram_factor(dv: DualVectors, rank_tol: float = RANK_TOL) -> GramFactor:
    """Y = (1/N) sum_k S^k y y^T S^{-k}, factored from its eigen-decomposition."""
    N = dv.N
    shifts = np.stack([np.roll(dv.y, k) for k in range(N)])
    Y = shifts.T @ shifts / N
    Y = 0.5 * (Y + Y.T)
    lam, W = np.linalg.eigh(Y)
    keep = lam > rank_tol * max(float(lam[-1]), 0.0)
    lam, W = lam[keep][::-1], W[:, keep][:, ::-1]
    # fix the sign of each eigenvector for a deterministic factor
    for j in range(W.shape[1]):
        i = int(np.argmax(np.abs(W[:, j])))
        if W[i, j] < 0:
            W[:, j] = -W[:, j]
    U = np.sqrt(lam)[:, None] * W.T
    return GramFactor(Y, U)


@dataclass(frozen=True)
class InterpolationData:
    """Columns k = 0..N of ``ybar``/``xbar`` are the pairs; column N is zero."""

    ybar: np.ndarray
    xbar: np.ndarray
    rho: float

    @property
    def N(self) -> int:
        return self.ybar.shape[1] - 1

    @property
    def d(self) -> int:
        return self.ybar.shape[0]

    def edge_weights(self) -> np.ndarray:
        """w[i, j] = <ybar_i, xbar_j - xbar_i> - rho."""
        P = self.ybar.T @ self.xbar
        return P - np.diag(P)[:, None] - self.rho


@dataclass(frozen=True)
class MonotonicityReport:
    worst: float
    max_length: int
    sampled: int
    no_positive_cycle: bool

    @property
    def ok(self) -> bool:
        return self.worst <= 1e-8 and self.no_positive_cycle

    def __bool__(self) -> bool:
        return self.ok


def _longest_paths(w: np.ndarray, source: int, tol: float = 1e-12):
    """Bellman-Ford longest paths; returns (values, positive_cycle_found)."""
    n = w.shape[0]
    dist = np.full(n, -np.inf)
    dist[source] = 0.0
    for _ in range(n):
        cand = np.max(dist[:, None] + w, axis=0)
        new = np.maximum(dist, cand)
        fin = np.isfinite(dist)
        if np.all(new[~fin] == -np.inf) and np.all(new[fin] <= dist[fin] + tol * (1 + np.abs(dist[fin]))):
            return dist, False
        dist = new
    cand = np.max(dist[:, None] + w, axis=0)
    return dist, bool(np.any(cand > dist + 1e-9 * (1 + np.abs(dist))))


def check_cyclic_monotonicity(data: InterpolationData, max_length: int = 6, samples: int = 10000,
                              seed: int = 0) -> MonotonicityReport:
    """Cycle sums of the penalized weights.

    Closed walks of every length up to ``max_length`` are covered exhaustively
    through max-plus matrix powers; longer cycles are sampled at random and
    a Bellman-Ford pass rules out positive cycles of any length.
    """
    w = data.edge_weights()
    np.fill_diagonal(w, -data.rho)
    n = w.shape[0]
    L = min(n, max_length)
    worst = -np.inf
    P = w.copy()
    for _ in range(2, L + 1):
        P = np.max(P[:, :, None] + w[None, :, :], axis=1)
        worst = max(worst, float(np.max(np.diag(P))))
    rng = np.random.default_rng(seed)
    count = 0
    if n > L:
        for _ in range(samples):
            length = int(rng.integers(L + 1, n + 1))
            cyc = rng.permutation(n)[:length]
            worst = max(worst, float(np.sum(w[cyc, np.roll(cyc, -1)])))
            count += 1
    _, positive = _longest_paths(w, 0)
    if worst == -np.inf:
        worst = 0.0
    return MonotonicityReport(worst, L, count, not positive)


def build_interpolation(gf: GramFactor, dv: DualVectors, check: bool = True) -> InterpolationData:
    """Pairs (U[:, k], (U T^T)[:, k]) for k < N and a zero pair at k = N."""
    if not np.any(dv.y):
        raise ValueError("dual vector y must be nonzero")
    U = gf.U
    Xb = U @ dv.T.dense().real.T
    d = U.shape[0]
    ybar = np.hstack([U, np.zeros((d, 1))])
    xbar = np.hstack([Xb, np.zeros((d, 1))])
    data = InterpolationData(ybar, xbar, dv.t_star / dv.N)
    if check:
        rep = check_cyclic_monotonicity(data)
        if not rep.ok:
            raise ConstructionError(f"construction inconsistency: cycle excess {rep.worst:.3g}")
    return data


@dataclass(frozen=True)
class TraceReport:
    worst_slack: float
    random_checked: int
    subpermutation_checked: int

    @property
    def ok(self) -> bool:
        return self.worst_slack >= -1e-8


def random_dhd_matrix(N: int, rng: np.random.Generator, density: float = 0.5) -> np.ndarray:
    """Nonpositive off-diagonal entries with nonnegative row and column sums."""
    off = -rng.random((N, N)) * (rng.random((N, N)) < density)
    np.fill_diagonal(off, 0.0)
    need = np.maximum(-off.sum(axis=0), -off.sum(axis=1))
    return off + np.diag(need + rng.random(N) * rng.integers(0, 2, N))


def subpermutation_forms(N: int):
    """e_i e_i^T and e_i e_i^T - e_i e_j^T + e_j e_j^T for i != j."""
    for i in range(N):
        M = np.zeros((N, N))
        M[i, i] = 1.0
        yield M
    for i, j in itertools.permutations(range(N), 2):
        M = np.zeros((N, N))
        M[i, i] = M[j, j] = 1.0
        M[i, j] = -1.0
        yield M


def check_trace_inequality(gf: GramFactor, dv: DualVectors, samples: int = 100, seed: int = 0) -> TraceReport:
    """tr(M T Y) + tr(M) t*/N >= 0 for doubly hyperdominant M."""
    N = dv.N
    TY = dv.T.dense().real @ gf.Y
    rho = dv.t_star / N
    worst = np.inf
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        M = random_dhd_matrix(N, rng)
        worst = min(worst, float(np.sum(M.T * TY)) + np.trace(M) * rho)
    count = 0
    for M in subpermutation_forms(N):
        worst = min(worst, float(np.sum(M.T * TY)) + np.trace(M) * rho)
        count += 1
    return TraceReport(float(worst), samples, count)


def build_potential(data: InterpolationData, base_index: int = 0) -> PolyhedralConvexFunction:
    """F(x) = max_n <ybar_n, x - xbar_n> + L(n) with L the longest-path values from the base."""
    w = data.edge_weights()
    np.fill_diagonal(w, -data.rho)
    L, positive = _longest_paths(w, base_index)
    if positive or not np.all(np.isfinite(L)):
        raise ConstructionError("approximate monotonicity violated: positive cycle in the pair graph")
    g = data.ybar.T.copy()
    b = L - np.sum(data.ybar * data.xbar, axis=0)
    return PolyhedralConvexFunction(g, b)


@dataclass(frozen=True)
class RefinedPairs:
    xhat: np.ndarray
    yhat: np.ndarray

    def distances(self, data: InterpolationData):
        dx = np.sum((self.xhat - data.xbar) ** 2, axis=0)
        dy = np.sum((self.yhat - data.ybar) ** 2, axis=0)
        return dx, dy


def refine_pairs(F: PolyhedralConvexFunction, data: InterpolationData) -> RefinedPairs:
    """Exact subgradient pairs near the approximate ones through prox_F(xbar + ybar).

    With v = xbar + ybar, xhat = prox_F(v) and yhat = v - xhat, both
    distances equal |xhat - xbar| and their square is at most rho.
    """
    if data.rho == 0.0:
        return RefinedPairs(data.xbar.copy(), data.ybar.copy())
    xh = np.empty_like(data.xbar)
    yh = np.empty_like(data.ybar)
    for k in range(data.N + 1):
        v = data.xbar[:, k] + data.ybar[:, k]
        x, _ = F.prox(v)
        xh[:, k] = x
        yh[:, k] = v - x
    out = RefinedPairs(xh, yh)
    dx, dy = out.distances(data)
    bad = int(np.argmax(np.maximum(dx, dy)))
    if max(dx[bad], dy[bad]) > data.rho + 1e-8:
        raise ConstructionError(f"refinement failed at pair {bad}: distance^2 {max(dx[bad], dy[bad]):.3g} > {data.rho:.3g}")
    return out


def finalize_nonlinearity(F: PolyhedralConvexFunction, pairs: RefinedPairs, kappa: float = math.inf) -> SlopeNonlinearity:
    """Shift so that the zero pair lands at the origin: F0(x) = F(x + xhat_N) - <yhat_N, x>."""
    F0 = F.shifted(pairs.xhat[:, -1], pairs.yhat[:, -1])
    return SlopeNonlinearity(F0, float(kappa))


@dataclass(frozen=True)
class Destabilizer:
    dual: DualVectors
    gram: GramFactor
    data: InterpolationData
    potential: PolyhedralConvexFunction
    pairs: RefinedPairs
    nonlinearity: SlopeNonlinearity
    kappa: float

    @property
    def d(self) -> int:
        return self.gram.d

    @property
    def what(self) -> np.ndarray:
        """Loop signal w_k = yhat_k - yhat_N, one column per k < N."""
        return self.pairs.yhat[:, :-1] - self.pairs.yhat[:, -1:]

    @property
    def zhat(self) -> np.ndarray:
        """Transformed loop signal z_k = xhat_k - xhat_N."""
        return self.pairs.xhat[:, :-1] - self.pairs.xhat[:, -1:]


def build_destabilizer(cert: DualCertificate, p: MarginProblem) -> Destabilizer:
    if p.N > MAX_N:
        raise ValueError(f"destabilizer construction supports N <= {MAX_N}")
    dv = build_dual_vectors(cert, p)
    gf = build_gram_factor(dv)
    data = build_interpolation(gf, dv)
    F = build_potential(data)
    pairs = refine_pairs(F, data)
    nl = finalize_nonlinearity(F, pairs, p.kappa)
    return Destabilizer(dv, gf, data, F, pairs, nl, p.kappa)
