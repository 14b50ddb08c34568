"""The margin linear program on the N-th roots of unity.

The program maximizes t over alpha >= 0, sum(alpha) <= 1 subject to

    Re(q_j (1 - c_j)) <= -t,   c = sqrt(N) V alpha,   q_j = G(z_j) - 1/kappa.

Substituting alpha_0 = 1 - sigma - sum_{l>=1} alpha_l turns every right-hand
side nonnegative, so the all-slack basis (alpha = e_0, t = 0) starts the
simplex.  With ``oversample = K > 1`` the same inequality is imposed at K
equally spaced points per arc on the piecewise-linear interpolant of c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import CertificateError, PlantError
from .lti import RootsGrid, StateSpaceModel, eval_transfer, frequency_response
from .simplex import exact_basis_check, exact_simplex, simplex_max

ZERO_DECISION = 1e-9


def inv(kappa: float) -> float:
    return 0.0 if math.isinf(kappa) else 1.0 / kappa


@dataclass(frozen=True)
class MarginProblem:
    grid: RootsGrid
    q: np.ndarray
    kappa: float
    plant: Optional[StateSpaceModel] = None
    oversample: int = 1
    q_points: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def shift(self) -> float:
        return inv(self.kappa)

    def point_weights(self) -> np.ndarray:
        """W[s, l]: value of the interpolant of z^l at constraint point s."""
        N, K = self.N, self.oversample
        z = self.grid.nodes
        l = np.arange(N)
        if K == 1:
            return z[:, None] ** l[None, :]
        s = np.arange(N * K)
        j = s // K
        t = (s % K) / K
        return (1 - t)[:, None] * z[j][:, None] ** l + t[:, None] * z[(j + 1) % N][:, None] ** l

    @property
    def constraint_q(self) -> np.ndarray:
        return self.q if self.oversample == 1 else self.q_points


def build_margin_problem(ss: StateSpaceModel, N: int, kappa: float = math.inf,
                         oversample: int = 1) -> MarginProblem:
    if N < 1:
        raise ValueError("N must be positive")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    ss.require_stable()
    grid = RootsGrid(N)
    c = inv(kappa)
    q = frequency_response(ss, grid.nodes) - c
    # enforce exact conjugate symmetry q_j = conj(q_{N-j})
    q = 0.5 * (q + np.conj(q[(-np.arange(N)) % N]))
    qp = None
    if oversample > 1:
        M = N * oversample
        qp = frequency_response(ss, np.exp(2j * np.pi * np.arange(M) / M)) - c
        qp = 0.5 * (qp + np.conj(qp[(-np.arange(M)) % M]))
    return MarginProblem(grid, q, float(kappa), ss, oversample, qp)


@dataclass(frozen=True)
class PrimalSolution:
    t_star: float
    alpha: np.ndarray
    margins: np.ndarray

    @property
    def c(self) -> np.ndarray:
        N = self.alpha.size
        return math.sqrt(N) * RootsGrid(N).V @ self.alpha


@dataclass(frozen=True)
class DualCertificate:
    mu: np.ndarray
    eta: float
    gap: float
    t_star: float
    certified_zero: Optional[bool] = None

    @property
    def N(self) -> int:
        return self.mu.size


def _lp_data(p: MarginProblem):
    W = p.point_weights()
    q = p.constraint_q
    rq = q.real
    rows = q.size
    N = p.N
    A = np.zeros((rows + 1, N + 1))
    A[:rows, 0] = 1.0
    A[:rows, 1] = rq
    A[:rows, 2:] = np.real(q[:, None] * (1.0 - W[:, 1:]))
    A[rows, 1:] = 1.0
    b = np.zeros(rows + 1)
    b[rows] = 1.0
    c = np.zeros(N + 1)
    c[0] = 1.0
    return A, b, c, W


def _dual_eta(mu, q, W) -> float:
    return max(0.0, float(np.max(np.real((mu * q) @ W))))


def _solve_rows(A, b, c, rows_idx):
    """Solve the LP restricted to FDI rows ``rows_idx`` plus the budget row."""
    sub = np.append(rows_idx, A.shape[0] - 1)
    return simplex_max(c, A[sub], b[sub]), sub


def solve_margin_lp(p: MarginProblem, exact: Optional[bool] = None, zero_tol: float = ZERO_DECISION):
    """Solve the margin LP; returns ``(PrimalSolution, DualCertificate)``.

    Oversampled problems are solved by constraint generation: the program on
    an active subset of points is re-solved until no other point is violated,
    which yields the optimum of the full program.  ``exact=None`` runs the
    rational recheck only when t* is below the zero decision threshold;
    ``True`` always, ``False`` never.
    """
    A, b, c, W = _lp_data(p)
    N = p.N
    rows = A.shape[0] - 1
    if p.oversample == 1:
        active = np.arange(rows)
    else:
        active = np.arange(0, rows, p.oversample)
    while True:
        res, sub = _solve_rows(A, b, c, active)
        slack = A[:rows] @ res.x - b[:rows]
        viol = np.nonzero(slack > 1e-12)[0]
        viol = np.setdiff1d(viol, active)
        if viol.size == 0:
            break
        worst = viol[np.argsort(-slack[viol])][: max(2 * N, 16)]
        active = np.union1d(active, worst)
    y_full = np.zeros(rows + 1)
    y_full[sub] = res.y
    t_star = max(float(res.x[0]), 0.0)
    sigma = res.x[1]
    alpha = np.empty(N)
    alpha[1:] = res.x[2:]
    alpha[0] = 1.0 - sigma - alpha[1:].sum()
    alpha = np.maximum(alpha, 0.0)
    q = p.constraint_q
    margins = np.real(q * (1.0 - W @ alpha))
    y = np.maximum(y_full[:rows], 0.0)
    total = y.sum()
    if total <= 0:
        raise CertificateError("simplex returned a zero dual vector")
    mu = y / total
    if p.oversample == 1:
        mu = symmetrize_mu(mu)
    eta = _dual_eta(mu, q, W)
    gap = eta - float(np.dot(mu, q.real)) - t_star
    certified = None
    if exact or (exact is None and t_star < zero_tol):
        As, bs = A[sub], b[sub]
        chk = exact_basis_check(c, As, bs, res.basis)
        certified = bool(chk.dual_feasible and chk.value <= 0)
        if not chk.dual_feasible:
            ex = exact_simplex(c, As, bs, basis=res.basis)
            certified = ex.value <= 0
        if certified:
            t_star = 0.0
            gap = eta - float(np.dot(mu, q.real))
    primal = PrimalSolution(t_star, alpha, margins)
    dual = DualCertificate(mu, eta, gap, t_star, certified)
    return primal, dual


def symmetrize_mu(mu: np.ndarray) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    N = mu.size
    out = 0.5 * (mu + mu[(-np.arange(N)) % N])
    return out / out.sum()


def symmetrize_dual(cert: DualCertificate, p: Optional[MarginProblem] = None) -> DualCertificate:
    """Average mu with its reflection j -> N - j and renormalize."""
    mu = symmetrize_mu(cert.mu)
    if p is None:
        return replace(cert, mu=mu)
    q = p.constraint_q
    W = p.point_weights()
    eta = _dual_eta(mu, q, W)
    gap = eta - float(np.dot(mu, q.real)) - cert.t_star
    if abs(gap) > 1e-8:
        raise CertificateError(f"asymmetric plant data: duality gap {gap:.3g} after averaging")
    return replace(cert, mu=mu, eta=eta, gap=gap)


@dataclass(frozen=True)
class ShiftReport:
    worst_violation: float
    base: float
    shifted: np.ndarray

    @property
    def ok(self) -> bool:
        return self.worst_violation <= 1e-8


def check_shift_conditions(cert: DualCertificate, p: MarginProblem, t_star: float) -> ShiftReport:
    """-t* <= sum mu_j q_j  and  sum mu_j q_j z_j^k <= sum mu_j q_j + t*  for all k."""
    z = p.grid.nodes
    N = p.N
    base = float(np.real(np.dot(cert.mu, p.q)))
    k = np.arange(N)
    shifted = np.real((cert.mu * p.q) @ (z[:, None] ** k[None, :]))
    viol = max(-t_star - base, float(np.max(shifted - base - t_star)))
    return ShiftReport(viol, base, shifted)


@dataclass(frozen=True)
class ZhangReport:
    ok: bool
    slacks: np.ndarray
    unbiasedness: float

    def __bool__(self) -> bool:
        return self.ok


def check_zhang_condition(mu, ss: StateSpaceModel, N: int, kappa: float = math.inf) -> ZhangReport:
    """sum_j mu_j Re(G(z_j)(1 - z_j^{-k})) >= 0 for all k (G - 1/kappa for finite kappa)."""
    mu = np.asarray(mu, dtype=float)
    if mu.size != N:
        raise ValueError("mu must have length N")
    if np.any(mu < 0) or not np.any(mu > 0):
        raise CertificateError("invalid certificate: mu must be nonnegative and nonzero")
    z = RootsGrid(N).nodes
    g = frequency_response(ss, z) - inv(kappa)
    k = np.arange(N)
    slacks = np.real((mu * g) @ (1.0 - z[:, None] ** (-k[None, :])))
    unbiased = float(np.dot(mu, g.real))
    return ZhangReport(bool(np.all(slacks >= -1e-10)), slacks, unbiased)


@dataclass(frozen=True)
class PhaseReport:
    ok: bool
    N: int
    phase: float
    bound: float

    def __bool__(self) -> bool:
        return self.ok


def check_phase_constraint(ss: StateSpaceModel, alpha: int, beta: int, kappa: float = math.inf) -> PhaseReport:
    """|arg G(exp(i pi alpha / beta))| <= pi / N with N = 2 beta (alpha odd) or beta."""
    if beta < 1 or not 0 <= alpha < beta or math.gcd(alpha, beta) != 1:
        raise ValueError("invalid rational rotation: need coprime 0 <= alpha < beta")
    N = 2 * beta if alpha % 2 else beta
    g = eval_transfer(ss, np.exp(1j * np.pi * alpha / beta)) - inv(kappa)
    phase = math.atan2(g.imag, g.real)
    bound = math.pi / N
    return PhaseReport(abs(phase) <= bound + 1e-12, N, phase, bound)
