"""Discrete-time LTI plants, roots-of-unity grids and circulant algebra.

Transfer functions use the convention G(z) = C (zI - A)^{-1} B + D and
coefficient lists are given in descending powers of z.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import PlantError

STABILITY_MARGIN = 1e-9
REALNESS_TOL = 1e-10
_CHUNK = 1 << 15


def _as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim < 2:
        a = a.reshape(1, -1) if a.ndim == 1 and a.size > 1 else a.reshape(1, 1)
    return a


@dataclass(frozen=True)
class StateSpaceModel:
    """Real state-space realization (A, B, C, D) of a discrete-time plant.

    SISO plants have B of shape (n, 1), C of shape (1, n) and a 1x1 D.
    Kronecker liftings carry square blocks of size d.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        n = A.shape[0] if A.size else 0
        A = A.reshape(n, n)
        D = _as_matrix(self.D)
        B = np.asarray(self.B, dtype=float).reshape(n, D.shape[1])
        C = np.asarray(self.C, dtype=float).reshape(D.shape[0], n)
        for arr in (A, B, C, D):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def inputs(self) -> int:
        return self.B.shape[1]

    @property
    def outputs(self) -> int:
        return self.C.shape[0]

    @property
    def is_siso(self) -> bool:
        return self.inputs == 1 and self.outputs == 1

    @classmethod
    def from_tf(cls, num: Sequence[float], den: Sequence[float], name: str = "") -> "StateSpaceModel":
        """Controllable canonical realization of num(z)/den(z)."""
        num = np.trim_zeros(np.atleast_1d(np.asarray(num, dtype=float)), "f")
        den = np.trim_zeros(np.atleast_1d(np.asarray(den, dtype=float)), "f")
        if den.size == 0:
            raise PlantError("denominator is identically zero")
        if num.size == 0:
            num = np.zeros(1)
        if num.size > den.size:
            raise PlantError("improper transfer function (deg num > deg den)")
        num = num / den[0]
        den = den / den[0]
        n = den.size - 1
        b = np.concatenate([np.zeros(n + 1 - num.size), num])
        d0 = b[0]
        c = b[1:] - d0 * den[1:]
        A = np.zeros((n, n))
        if n:
            A[0, :] = -den[1:]
            A[1:, :-1] = np.eye(n - 1)
        B = np.zeros((n, 1))
        if n:
            B[0, 0] = 1.0
        return cls(A, B, c.reshape(1, n), np.array([[d0]]), name=name)

    @classmethod
    def static(cls, gain: float, name: str = "") -> "StateSpaceModel":
        return cls(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), np.array([[gain]]), name=name)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        if self.n == 0:
            return np.zeros(0, dtype=complex)
        return np.linalg.eigvals(self.A)

    @property
    def spectral_radius(self) -> float:
        ev = self.eigenvalues
        return float(np.max(np.abs(ev))) if ev.size else 0.0

    def is_stable(self) -> bool:
        return self.spectral_radius < 1.0 - STABILITY_MARGIN

    def require_stable(self) -> None:
        if not self.is_stable():
            raise PlantError(f"plant not Schur-stable (spectral radius {self.spectral_radius:.6g})")

    def shifted(self, c: float) -> "StateSpaceModel":
        """Realization of G - c (for SISO; c times identity for square plants)."""
        D = self.D - c * np.eye(self.outputs, self.inputs)
        return StateSpaceModel(self.A, self.B, self.C, D, name=self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ss": {
                "A": self.A.tolist(),
                "B": self.B.tolist(),
                "C": self.C.tolist(),
                "D": self.D.tolist(),
            },
        }


def eval_transfer(ss: StateSpaceModel, z: complex):
    """G(z); a complex scalar for SISO plants, a matrix otherwise."""
    z = complex(z)
    if ss.n == 0:
        G = ss.D.astype(complex)
    else:
        M = z * np.eye(ss.n) - ss.A
        # cheap singularity probe before solving
        if np.min(np.abs(ss.eigenvalues - z)) < 1e-13 * max(1.0, np.linalg.norm(ss.A)):
            raise PlantError(f"pole on evaluation point z={z}")
        try:
            G = ss.C @ np.linalg.solve(M, ss.B) + ss.D
        except np.linalg.LinAlgError as exc:
            raise PlantError(f"pole on evaluation point z={z}") from exc
        if not np.all(np.isfinite(G)):
            raise PlantError(f"pole on evaluation point z={z}")
    if ss.is_siso:
        return complex(G[0, 0])
    return G


def frequency_response(ss: StateSpaceModel, z, order: int = 0):
    """Vectorized SISO response at the points ``z``.

    Returns G(z) when ``order == 0``; otherwise a tuple with the z-derivatives
    up to ``order`` (at most 2) appended.
    """
    if not ss.is_siso:
        raise PlantError("frequency_response expects a SISO plant")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = [np.full(z.shape, ss.D[0, 0], dtype=complex)]
    out += [np.zeros(z.shape, dtype=complex) for _ in range(order)]
    n = ss.n
    if n:
        if np.min(np.abs(ss.eigenvalues[:, None] - z.ravel()[None, :])) < 1e-13:
            raise PlantError("pole on evaluation point")
        I = np.eye(n)
        flat = z.ravel()
        res = [o.ravel() for o in out]
        for s in range(0, flat.size, _CHUNK):
            zz = flat[s:s + _CHUNK]
            M = zz[:, None, None] * I - ss.A
            v = np.linalg.solve(M, np.broadcast_to(ss.B, (zz.size, n, 1)).astype(complex))
            res[0][s:s + _CHUNK] += (ss.C @ v)[:, 0, 0]
            sign = -1.0
            fact = 1.0
            for k in range(1, order + 1):
                v = np.linalg.solve(M, v)
                fact *= k
                res[k][s:s + _CHUNK] = sign * fact * (ss.C @ v)[:, 0, 0]
                sign = -sign
        out = [r.reshape(z.shape) for r in res]
    if order == 0:
        return out[0]
    return tuple(out)


def nyquist_value(ss: StateSpaceModel, grid_size: int = 1 << 14, tol: float = 1e-6) -> float:
    """Largest kappa with 1 - k G(z) free of zeros on the circle for all k < kappa.

    Real crossings of G on the upper half circle are located on a uniform
    grid and refined by bisection on Im G; the answer is one over the largest
    positive crossing value.
    """
    ss.require_stable()
    w = np.linspace(0.0, np.pi, grid_size + 1)
    g = frequency_response(ss, np.exp(1j * w))
    im = g.imag.copy()
    im[0] = im[-1] = 0.0
    best = max(g[0].real, g[-1].real)

    def imag_at(x):
        return eval_transfer(ss, np.exp(1j * x)).imag

    idx = np.nonzero(np.sign(im[:-1]) * np.sign(im[1:]) < 0)[0]
    for i in idx:
        lo, hi = w[i], w[i + 1]
        flo = im[i]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            fm = imag_at(mid)
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
        val = eval_transfer(ss, np.exp(0.5j * (lo + hi))).real
        best = max(best, val)
    for i in np.nonzero(im[1:-1] == 0.0)[0] + 1:
        best = max(best, g[i].real)
    if best <= 0.0:
        return float("inf")
    return 1.0 / best


@dataclass(frozen=True)
class RootsGrid:
    """The N-th roots of unity z_j = exp(2 pi i j / N) and the unitary DFT matrix."""

    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("grid size must be positive")

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.N) / self.N)

    @cached_property
    def V(self) -> np.ndarray:
        """V[l, j] = z_j**l / sqrt(N)."""
        k = np.arange(self.N)
        return np.exp(2j * np.pi * np.outer(k, k) / self.N) / np.sqrt(self.N)

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.N) / self.N


@dataclass(frozen=True)
class CirculantMatrix:
    """N x N circulant with entries C[l, m] = symbol[(l - m) mod N]."""

    symbol: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.symbol))
        if not np.iscomplexobj(s):
            s = s.astype(float)
        object.__setattr__(self, "symbol", s)

    @property
    def N(self) -> int:
        return self.symbol.size

    @classmethod
    def shift(cls, N: int) -> "CirculantMatrix":
        """The cyclic shift S with (S x)_l = x_{l-1}."""
        e = np.zeros(N)
        e[1 % N] += 1.0
        return cls(e)

    def dense(self) -> np.ndarray:
        N = self.N
        idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
        return self.symbol[idx]

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalue for eigenvector (z_j**l)_l is sum_k c_k z_j**(-k)."""
        return np.fft.fft(self.symbol)

    def __matmul__(self, other):
        if isinstance(other, CirculantMatrix):
            sym = np.fft.ifft(np.fft.fft(self.symbol) * np.fft.fft(other.symbol))
            if not (np.iscomplexobj(self.symbol) or np.iscomplexobj(other.symbol)):
                sym = sym.real
            return CirculantMatrix(sym)
        return self.dense() @ other

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.symbol) or np.max(np.abs(self.symbol.imag), initial=0.0) <= REALNESS_TOL


def circulant_from_samples(q: np.ndarray) -> CirculantMatrix:
    """T = V diag(q) V^* for conjugate-symmetric samples q_j = conj(q_{N-j})."""
    q = np.asarray(q, dtype=complex)
    sym = np.fft.ifft(q)
    worst = float(np.max(np.abs(sym.imag), initial=0.0))
    if worst > REALNESS_TOL:
        raise PlantError(f"symmetry violation: circulant has imaginary part {worst:.3g}")
    return CirculantMatrix(sym.real.copy())


def build_circulant_T(ss: StateSpaceModel, grid: RootsGrid, shift: float = 0.0) -> CirculantMatrix:
    ss.require_stable()
    q = frequency_response(ss, grid.nodes) - shift
    return circulant_from_samples(q)


def kron_lift(ss: StateSpaceModel, d: int) -> StateSpaceModel:
    """Realization of G (x) I_d."""
    if d < 1:
        raise ValueError("lifting dimension must be positive")
    I = np.eye(d)
    return StateSpaceModel(
        np.kron(ss.A, I), np.kron(ss.B, I), np.kron(ss.C, I), np.kron(ss.D, I),
        name=f"{ss.name}(x)I{d}" if ss.name else "",
    )


@dataclass(frozen=True)
class Signal:
    """Finite record of d-vectors; ``period`` marks an N-periodic continuation
    in which case ``samples`` holds exactly one period."""

    samples: np.ndarray
    period: Optional[int] = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        object.__setattr__(self, "samples", s)
        if self.period is not None and self.period != s.shape[0]:
            raise ValueError("periodic signal must store exactly one period")

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def horizon(self) -> int:
        return self.samples.shape[0]

    def take(self, steps: int) -> np.ndarray:
        if self.period is None:
            if steps > self.horizon:
                raise ValueError("horizon exceeds signal length")
            return self.samples[:steps]
        reps = -(-steps // self.period)
        return np.tile(self.samples, (reps, 1))[:steps]


def signal_power(sig: Signal, horizon: Optional[int] = None) -> float:
    """Root-mean-square over the first ``horizon`` samples.

    Whole periods of a periodic signal are accounted for by one period so the
    result does not depend on how many periods are taken.
    """
    if horizon is None:
        horizon = sig.horizon
    if horizon < 1:
        raise ValueError("horizon must be positive")
    sq = np.sum(sig.samples ** 2, axis=1)
    if sig.period is None:
        if horizon > sig.horizon:
            raise ValueError("horizon exceeds signal length")
        return float(np.sqrt(np.sum(sq[:horizon]) / horizon))
    full, rest = divmod(horizon, sig.period)
    if rest == 0:
        return float(np.sqrt(np.sum(sq) / sig.period))
    total = full * np.sum(sq) + np.sum(sq[:rest])
    return float(np.sqrt(total / horizon))


def simulate(ss: StateSpaceModel, u: np.ndarray, xi0=None):
    """Forward response; returns (outputs, states) with states[k] the state before step k."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    steps = u.shape[0]
    xi = np.zeros(ss.n) if xi0 is None else np.asarray(xi0, dtype=float).copy()
    ys = np.empty((steps, ss.outputs))
    xs = np.empty((steps + 1, ss.n))
    for k in range(steps):
        xs[k] = xi
        ys[k] = ss.C @ xi + ss.D @ u[k]
        xi = ss.A @ xi + ss.B @ u[k]
    xs[steps] = xi
    return ys, xs


def periodic_initial_state(ss: StateSpaceModel, y_period) -> np.ndarray:
    """Initial state making the response to the periodic input N-periodic.

    ``y_period`` is a one-period :class:`Signal` or an (N, m) array.
    """
    y = y_period.samples if isinstance(y_period, Signal) else np.asarray(y_period, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    N = y.shape[0]
    n = ss.n
    if n == 0:
        return np.zeros(0)
    acc = np.zeros(n)
    for j in range(N):
        acc = ss.A @ acc + ss.B @ y[j]
    AN = np.linalg.matrix_power(ss.A, N)
    M = np.eye(n) - AN
    if np.linalg.cond(M) > 1e12:
        raise PlantError("eigenvalue on unit circle: I - A^N is numerically singular")
    return np.linalg.solve(M, acc)
