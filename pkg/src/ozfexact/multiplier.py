"""Piecewise-linear Zames-Falb multipliers: synthesis, truncation and FDI checks.

Multipliers are stored as M(z) = 1 - H(z) with H positive definite and
H(1) <= 1.  The FDI is evaluated as 2 Re(M(z) (G(z) - 1/kappa)); a multiplier
certifies stability when this quantity is negative on the whole circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import CertificateError, DegenerateMultiplierError
from .harmonics import PwlCircleFunction, is_doubly_hyperdominant, is_pd_sequence, pwl_fourier_coefficients
from .lti import RootsGrid, StateSpaceModel, eval_transfer, frequency_response, kron_lift
from .margin import PrimalSolution, inv

FINE_POINTS = 1 << 18
SAFETY = 1.5
NEG_COEF_TOL = 1e-10


@dataclass(frozen=True)
class FirWindow:
    kmin: int
    kmax: int
    h: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.h))


@dataclass(frozen=True)
class ZFMultiplier:
    """M(z) = 1 - H(z); FIR form M(z) = 1 - sum_k h_k z^{-k} when ``fir`` is set."""

    H: PwlCircleFunction
    fir: Optional[FirWindow] = None

    @property
    def N(self) -> int:
        return self.H.N

    @property
    def H1(self) -> float:
        return float(self.H.values[0].real)

    @property
    def tail_bound(self) -> float:
        """H(1) minus the mass kept in the FIR window (zero without a window)."""
        if self.fir is None:
            return 0.0
        return max(self.H1 - self.fir.total, 0.0)

    def __call__(self, z, form: Optional[str] = None):
        """Evaluate M; ``form`` is "pwl" or "fir" (default: FIR when present)."""
        z = np.asarray(z, dtype=complex)
        if form is None:
            form = "fir" if self.fir is not None else "pwl"
        if form == "pwl":
            return 1.0 - self.H(z)
        if self.fir is None:
            raise ValueError("multiplier has no FIR window")
        k = np.arange(self.fir.kmin, self.fir.kmax + 1)
        zz = np.atleast_1d(z)
        val = 1.0 - (zz[..., None] ** (-k) * self.fir.h).sum(axis=-1)
        return val.reshape(z.shape)

    def toeplitz_symbol(self) -> dict:
        """Two-sided symbol m_k of M (FIR form, else from the node values' FFT)."""
        if self.fir is not None:
            sym = {int(k): -float(v) for k, v in zip(range(self.fir.kmin, self.fir.kmax + 1), self.fir.h)}
        else:
            sym = {}
        sym[0] = sym.get(0, 0.0) + 1.0
        return sym

    def to_dict(self) -> dict:
        out = {
            "N": self.N,
            "nodes": [[float(v.real), float(v.imag)] for v in self.H.values],
            "H1": self.H1,
        }
        if self.fir is not None:
            out["fir"] = {"kmin": self.fir.kmin, "kmax": self.fir.kmax, "h": [float(v) for v in self.fir.h]}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ZFMultiplier":
        nodes = np.array([complex(re, im) for re, im in d["nodes"]])
        if len(nodes) != int(d["N"]):
            raise ValueError("node count does not match N")
        fir = None
        if d.get("fir"):
            f = d["fir"]
            fir = FirWindow(int(f["kmin"]), int(f["kmax"]), np.asarray(f["h"], dtype=float))
        return cls(PwlCircleFunction(nodes), fir)


def synth_pwl_multiplier(primal: PrimalSolution, grid: Optional[RootsGrid] = None) -> ZFMultiplier:
    """Interpolate c = sqrt(N) V alpha linearly in angle and return M = 1 - H."""
    if not primal.t_star > 0:
        raise CertificateError("no multiplier exists at this N (t_star <= 0)")
    alpha = np.asarray(primal.alpha, dtype=float)
    N = alpha.size
    if grid is not None and grid.N != N:
        raise ValueError("grid size does not match alpha")
    c = primal.c
    # conjugate symmetry of c follows from alpha being real
    c = 0.5 * (c + np.conj(c[(-np.arange(N)) % N]))
    if np.all(np.abs(c - 1.0) <= 1e-12):
        raise DegenerateMultiplierError("degenerate multiplier: M vanishes identically")
    return ZFMultiplier(PwlCircleFunction(c))


def fir_truncate(m: ZFMultiplier, kmin: int, kmax: int) -> ZFMultiplier:
    """Keep the Fourier coefficients h_kmin..h_kmax of H.

    Round-off negatives above -1e-10 are clipped to zero so that the window
    stays doubly hyperdominant; anything more negative means H is not
    positive definite.
    """
    if kmax < kmin:
        raise ValueError("empty FIR window")
    h = pwl_fourier_coefficients(m.H, kmax, kmin=kmin)
    h = np.real_if_close(h, tol=1e6)
    if np.iscomplexobj(h):
        raise CertificateError("FIR coefficients are not real")
    if np.min(h, initial=0.0) < -NEG_COEF_TOL:
        raise CertificateError(f"multiplier not positive definite: h_k = {np.min(h):.3g}")
    h = np.maximum(h.astype(float), 0.0)
    return replace(m, fir=FirWindow(int(kmin), int(kmax), h))


@dataclass(frozen=True)
class FdiReport:
    grid: int
    worst_margin: float
    certified_margin: Optional[float]
    passed: bool
    arg_z: complex
    lemma_bound: Optional[float] = None
    direct_bound: Optional[float] = None
    osc: Optional[float] = None

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "worst_margin": self.worst_margin,
            "certified_margin": self.certified_margin,
            "pass": self.passed,
            "arg_z": [self.arg_z.real, self.arg_z.imag],
        }


def fdi_values(m: ZFMultiplier, ss: StateSpaceModel, kappa: float, z) -> np.ndarray:
    return 2.0 * np.real(m(z) * (frequency_response(ss, z) - inv(kappa)))


def verify_fdi_grid(m: ZFMultiplier, ss: StateSpaceModel, kappa: float, grid_size: int) -> FdiReport:
    """Worst value of 2 Re(M (G - 1/kappa)) over the grid_size-th roots of unity."""
    ss.require_stable()
    z = RootsGrid(grid_size).nodes
    v = fdi_values(m, ss, kappa, z)
    i = int(np.argmax(v))
    worst = float(v[i])
    return FdiReport(grid_size, worst, None, worst < 0, complex(z[i]))


def _fine_size(n_nodes: int, target: int) -> int:
    size = n_nodes
    while size < target:
        size *= 2
    return size


class ResponseCache:
    """G and its first two z-derivatives on uniform grids, reused across kappa."""

    def __init__(self, ss: StateSpaceModel):
        self.ss = ss
        self._store = {}

    def get(self, size: int):
        if size not in self._store:
            z = RootsGrid(size).nodes
            self._store[size] = (z,) + frequency_response(self.ss, z, order=2)
        return self._store[size]


def oscillation_bound(ss: StateSpaceModel, N: int, refine: int = 16, cache: Optional[ResponseCache] = None) -> float:
    """Bound on |G(z) - G(w)| for z, w on one arc of the N-th roots of unity."""
    ss.require_stable()
    radius = ss.spectral_radius
    if radius > 1 - 1e-6:
        raise CertificateError(f"oscillation bound unavailable: pole radius {radius:.9g}")
    if ss.n == 0:
        return 0.0
    size = N * refine
    if cache is not None:
        dG = cache.get(size)[2]
    else:
        dG = frequency_response(ss, RootsGrid(size).nodes, order=1)[1]
    return SAFETY * float(np.max(np.abs(dG))) * 2 * np.pi / N


def certify_global_fdi(m: ZFMultiplier, ss: StateSpaceModel, kappa: float, N: Optional[int] = None,
                       fine_points: int = FINE_POINTS, cache: Optional[ResponseCache] = None) -> FdiReport:
    """Upper bound on sup over the circle of 2 Re(M (G - 1/kappa)).

    Two bounds are computed for the piecewise-linear form and the smaller one
    is reported:

    * a grid bound at the N-th roots of unity (N a multiple of the multiplier's
      node count) plus 4 times the arc oscillation of G;
    * a fine-grid bound whose nodes include the multiplier's nodes, so the
      FDI is smooth between neighbours and the linear-interpolation error is
      at most h^2/8 times its second derivative (sampled, with a safety
      factor).
    """
    if m.fir is not None:
        m = replace(m, fir=None)
    if N is None:
        N = m.N
    if N % m.N:
        raise ValueError("certification grid must refine the multiplier nodes")
    if cache is None:
        cache = ResponseCache(ss)
    shift = inv(kappa)
    ss.require_stable()

    zN = RootsGrid(N).nodes
    vN = np.real(m(zN) * (frequency_response(ss, zN) - shift))
    osc = oscillation_bound(ss, N, cache=cache)
    lemma = float(np.max(vN)) + 4.0 * osc

    size = _fine_size(m.N, fine_points)
    z, G, dG, d2G = cache.get(size)
    q = G - shift
    Mz = m(z)
    phi = np.real(q * Mz)
    i = int(np.argmax(phi))
    # derivatives in the angle: d/dw = i z d/dz
    q_w = 1j * z * dG
    q_ww = -z * dG - z * z * d2G
    c = m.H.values
    slope = np.abs(np.roll(c, -1) - c) / (2 * np.pi / m.N)
    per_point = size // m.N
    arc = np.arange(size) // per_point
    m_w = np.maximum(slope[arc], slope[(arc - 1) % m.N])
    curv = float(np.max(np.abs(q_ww) * np.abs(Mz) + 2 * np.abs(q_w) * m_w))
    h = 2 * np.pi / size
    direct = float(phi[i]) + SAFETY * curv * h * h / 8

    best = min(lemma, direct)
    worst = 2.0 * float(np.max(vN))
    return FdiReport(N, worst, 2.0 * best, best < 0, complex(z[i]),
                     lemma_bound=2.0 * lemma, direct_bound=2.0 * direct, osc=osc)


@dataclass(frozen=True)
class KronReport:
    equal: bool
    scalar_margin: float
    lifted_margin: float
    d: int

    def __bool__(self) -> bool:
        return self.equal


def kron_fdi_equivalence(m: ZFMultiplier, ss: StateSpaceModel, d: int, grid_size: int,
                         kappa: float = math.inf, tol: float = 1e-10) -> KronReport:
    """Compare the worst FDI margin of (G, M) with that of (G (x) I_d, M (x) I_d).

    The lifted margin is the largest eigenvalue of the hermitian form
    M G_d + (M G_d)^* - 2 Re(M)/kappa I_d built from the lifted realization.
    """
    if d < 1:
        raise ValueError("d must be positive")
    z = RootsGrid(grid_size).nodes
    scalar = float(np.max(fdi_values(m, ss, kappa, z)))
    lifted = kron_lift(ss, d)
    Mz = m(z)
    shift = inv(kappa)
    worst = -np.inf
    I = np.eye(d)
    for zk, mk in zip(z, Mz):
        Gd = eval_transfer(lifted, zk)
        Gd = np.atleast_2d(Gd)
        F = mk * (Gd - shift * I)
        herm = F + F.conj().T
        worst = max(worst, float(np.max(np.linalg.eigvalsh(herm))))
    return KronReport(abs(worst - scalar) <= tol * max(1.0, abs(scalar)), scalar, worst, d)


def multiplier_checks(m: ZFMultiplier):
    """(pd report, hyperdominance report) for the multiplier's Toeplitz symbol."""
    pd = is_pd_sequence(m.H.values)
    if m.fir is None:
        K = 40 * m.N
        m = fir_truncate(m, -K, K)
    return pd, is_doubly_hyperdominant(m.toeplitz_symbol())


def nyquist_table(m: Optional[ZFMultiplier], ss: StateSpaceModel, points: int = 2048,
                  form: Optional[str] = None) -> np.ndarray:
    """Rows (omega, Re G, Im G, Re M, Im M, Re GM, Im GM) over [0, 2 pi)."""
    w = 2 * np.pi * np.arange(points) / points
    z = np.exp(1j * w)
    Mz = np.ones(points, dtype=complex) if m is None else m(z, form=form)
    G = frequency_response(ss, z)
    GM = G * Mz
    return np.column_stack([w, G.real, G.imag, Mz.real, Mz.imag, GM.real, GM.imag])
