"""Positive definite sequences and piecewise-linear functions on the circle.

A function H on the unit circle is represented through its Fourier
coefficients as H(z) = sum_k h_k z^{-k}, i.e. h_k is the coefficient of
exp(-i k w) when z = exp(i w).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

PSD_TOL = 1e-10
REAL_TOL = 1e-10


@dataclass(frozen=True)
class PdReport:
    """Outcome of a positive-definiteness test with its witness."""

    ok: bool
    eigenvalues: np.ndarray
    min_eigenvalue: float
    max_imag: float

    def __bool__(self) -> bool:
        return self.ok


def is_pd_sequence(c) -> PdReport:
    """Test whether the circulant (c_{j-k mod N}) is hermitian PSD.

    Its eigenvalues are the DFT of ``c``; they must be real and nonnegative up
    to a relative tolerance.
    """
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    lam = np.fft.fft(c)
    max_imag = float(np.max(np.abs(lam.imag)))
    re = lam.real
    lo = float(np.min(re))
    ok = max_imag <= REAL_TOL * max(1.0, float(np.max(np.abs(re)))) and lo >= -PSD_TOL * max(1.0, float(np.max(re)))
    return PdReport(ok, re, lo, max_imag)


@dataclass(frozen=True)
class PwlCircleFunction:
    """Function on the circle, linear in the angle between consecutive nodes.

    ``angles`` must be increasing in [0, 2 pi); the last arc wraps around to
    the first node.
    """

    values: np.ndarray
    angles: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=complex))
        object.__setattr__(self, "values", v)
        if self.angles is None:
            object.__setattr__(self, "angles", 2 * np.pi * np.arange(v.size) / v.size)
        else:
            a = np.asarray(self.angles, dtype=float)
            if a.shape != v.shape or np.any(np.diff(a) <= 0) or a[0] < 0 or a[-1] >= 2 * np.pi:
                raise ValueError("node angles must be increasing in [0, 2pi)")
            object.__setattr__(self, "angles", a)

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def uniform(self) -> bool:
        return np.allclose(self.angles, 2 * np.pi * np.arange(self.N) / self.N, rtol=0, atol=1e-15)

    def at_angle(self, w) -> np.ndarray:
        w = np.mod(np.asarray(w, dtype=float), 2 * np.pi)
        N = self.N
        if N == 1:
            return np.full(w.shape, self.values[0])
        if self.uniform:
            x = w * (N / (2 * np.pi))
            j = np.floor(x).astype(int)
            t = x - j
            j %= N
        else:
            a = self.angles
            j = np.searchsorted(a, w, side="right") - 1
            j %= N
            start = a[j]
            stop = np.where(j + 1 < N, a[(j + 1) % N], a[0] + 2 * np.pi)
            span = stop - start
            t = np.mod(w - start, 2 * np.pi) / span
        return (1 - t) * self.values[j] + t * self.values[(j + 1) % N]

    def __call__(self, z):
        return self.at_angle(np.angle(np.asarray(z, dtype=complex)))

    def arcs(self):
        """(start angle, length, start value, end value) for every arc."""
        a = self.angles
        N = self.N
        stop = np.append(a[1:], a[0] + 2 * np.pi)
        return a, stop - a, self.values, np.roll(self.values, -1) if N > 1 else self.values


def pwl_eval(f: PwlCircleFunction, z: complex) -> complex:
    z = complex(z)
    if abs(abs(z) - 1.0) > 1e-9:
        raise ValueError("evaluation point must lie on the unit circle")
    return complex(f(np.array([z]))[0])


def pwl_fourier_coefficients(f: PwlCircleFunction, K: int, kmin: Optional[int] = None) -> np.ndarray:
    """Exact Fourier coefficients h_k, k = kmin..K (kmin defaults to -K).

    h_k = (1 / 2 pi) * integral of f(e^{iw}) e^{ikw} dw, evaluated arc by arc
    with the antiderivative of (p + s u) e^{iku}.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    if kmin is None:
        kmin = -K
    ks = np.arange(kmin, K + 1)
    start, length, va, vb = f.arcs()
    if f.N == 1:
        length = np.array([2 * np.pi])
        vb = va
    slope = (vb - va) / length
    h = np.zeros(ks.size, dtype=complex)
    zero = ks == 0
    if np.any(zero):
        h[zero] = np.sum(va * length + slope * length ** 2 / 2)
    k = ks[~zero].astype(float)[:, None]
    if k.size:
        L = length[None, :]
        e = np.exp(1j * k * L)
        ik = 1j * k
        term = va[None, :] * (e - 1) / ik + slope[None, :] * (L * e / ik + (e - 1) / k ** 2)
        h[~zero] = np.sum(np.exp(1j * k * start[None, :]) * term, axis=1)
    h /= 2 * np.pi
    if np.allclose(f.values, np.conj(f.values[(-np.arange(f.N)) % f.N]), rtol=0, atol=1e-14) and f.uniform:
        return h.real
    return h


@dataclass(frozen=True)
class HyperdominanceReport:
    is_dhd: bool
    slack: float
    worst_offdiag: float

    def __bool__(self) -> bool:
        return self.is_dhd


Symbol = Union[Mapping[int, float], np.ndarray]


def is_doubly_hyperdominant(symbol: Symbol, kmin: int = 0, tol: float = 1e-12) -> HyperdominanceReport:
    """Doubly-hyperdominance test.

    ``symbol`` is either a mapping k -> m_k, a 1-D array holding m_kmin, ...,
    or a square matrix.  For a Toeplitz symbol the off-diagonal entries must be
    nonpositive and the total sum nonnegative.  A general square matrix needs
    nonpositive off-diagonal entries and nonnegative row and column sums;
    ``slack`` then reports the smallest of those sums.
    """
    if isinstance(symbol, Mapping):
        items = {int(k): float(v) for k, v in symbol.items()}
    else:
        arr = np.asarray(symbol, dtype=float)
        if arr.ndim == 2:
            if arr.shape[0] != arr.shape[1]:
                raise ValueError("matrix must be square")
            off = arr - np.diag(np.diag(arr))
            worst = float(np.max(off, initial=0.0))
            slack = float(min(np.min(arr.sum(axis=0)), np.min(arr.sum(axis=1))))
            return HyperdominanceReport(worst <= tol and slack >= -tol, slack, max(worst, 0.0))
        items = {kmin + i: float(v) for i, v in enumerate(arr)}
    worst = max([v for k, v in items.items() if k != 0], default=0.0)
    slack = float(sum(items.values()))
    return HyperdominanceReport(worst <= tol and slack >= -tol, slack, max(worst, 0.0))
