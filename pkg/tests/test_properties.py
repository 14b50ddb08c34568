"""Randomized property suites for the core invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ozfexact.destabilizer import (
    InterpolationData,
    build_dual_vectors,
    build_gram_factor,
    build_interpolation,
    check_cyclic_monotonicity,
    check_trace_inequality,
    refine_pairs,
)
from ozfexact.harmonics import PwlCircleFunction, is_pd_sequence, pwl_fourier_coefficients
from ozfexact.lti import CirculantMatrix, RootsGrid
from ozfexact.margin import build_margin_problem, solve_margin_lp
from ozfexact.multiplier import kron_fdi_equivalence, synth_pwl_multiplier
from ozfexact.polyhedral import PolyhedralConvexFunction, SlopeNonlinearity

from conftest import random_stable_plant
from test_margin import _check_invariants, vertex_oracle

CASES = 200

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@settings(max_examples=CASES, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=16))
def test_circulant_diagonalized_by_dft(pairs):
    c = np.array([a + 1j * b for a, b in pairs])
    C = CirculantMatrix(c)
    V = RootsGrid(c.size).V
    D = V.conj().T @ C.dense() @ V
    scale = 1 + np.max(np.abs(c)) * c.size
    assert np.max(np.abs(D - np.diag(np.diag(D)))) <= 1e-12 * scale
    np.testing.assert_allclose(np.diag(D), C.eigenvalues(), atol=1e-12 * scale)


def _random_hermitian_sequence(rng, N, negative):
    lam = rng.random(N)
    lam = 0.5 * (lam + lam[(-np.arange(N)) % N])
    if negative:
        i = int(rng.integers(N))
        v = -rng.uniform(0.2, 1.0) * lam.max()
        lam[i] = lam[(-i) % N] = v
    return np.fft.ifft(lam), lam


def test_pd_iff_nonnegative_dft():
    rng = np.random.default_rng(100)
    for k in range(CASES):
        N = int(rng.integers(1, 17))
        c, lam = _random_hermitian_sequence(rng, N, negative=bool(k % 2))
        c = c + 1e-3 * (rng.random() < 0.2) * rng.normal(size=N)  # some non-hermitian inputs
        eig = np.linalg.eigvals(CirculantMatrix(c).dense())
        hermitian = np.allclose(c, np.conj(c[(-np.arange(N)) % N]), atol=1e-14)
        expect = hermitian and np.min(eig.real) >= -1e-10
        assert bool(is_pd_sequence(c)) == expect


def test_pd_sequence_gives_pd_pwl_function():
    rng = np.random.default_rng(101)
    for _ in range(CASES):
        N = int(rng.integers(1, 13))
        c, _ = _random_hermitian_sequence(rng, N, negative=False)
        f = PwlCircleFunction(c)
        coeffs = pwl_fourier_coefficients(f, 40 * N, kmin=-40 * N)
        assert np.max(np.abs(coeffs.imag)) <= 1e-10
        assert np.min(coeffs.real) >= -1e-8
        w = rng.uniform(0, 2 * np.pi, 8)
        G = f(np.exp(1j * (w[:, None] - w[None, :])))
        assert np.min(np.linalg.eigvalsh(0.5 * (G + G.conj().T))) >= -1e-8


def test_non_pd_sequence_gives_non_pd_function():
    rng = np.random.default_rng(102)
    for _ in range(CASES):
        N = int(rng.integers(2, 13))
        c, _ = _random_hermitian_sequence(rng, N, negative=True)
        assert not is_pd_sequence(c)
        f = PwlCircleFunction(c)
        # nodes at the N-th roots reproduce the circulant itself
        w = 2 * np.pi * np.arange(N) / N
        G = f(np.exp(1j * (w[:, None] - w[None, :])))
        assert np.min(np.linalg.eigvalsh(0.5 * (G + G.conj().T))) < -1e-8
        # random 8-point configurations find a violation too
        for _ in range(500):
            w = rng.uniform(0, 2 * np.pi, 8)
            G = f(np.exp(1j * (w[:, None] - w[None, :])))
            if np.min(np.linalg.eigvalsh(0.5 * (G + G.conj().T))) < -1e-8:
                break
        else:
            pytest.fail("no random Gram witness found")


def _random_lp(rng, n_lo=1, n_hi=13):
    ss, _, _ = random_stable_plant(rng)
    N = int(rng.integers(n_lo, n_hi))
    kappa = math.inf if rng.random() < 0.3 else float(rng.uniform(0.2, 5))
    p = build_margin_problem(ss, N, kappa)
    return ss, p, *solve_margin_lp(p)


def test_lp_duality_gap_random():
    rng = np.random.default_rng(103)
    for _ in range(CASES):
        _, p, pr, du = _random_lp(rng)
        _check_invariants(p, pr, du)


def test_lp_matches_vertex_enumeration():
    rng = np.random.default_rng(104)
    for _ in range(60):
        _, p, pr, du = _random_lp(rng, 1, 5)
        assert pr.t_star == pytest.approx(max(vertex_oracle(p.q), 0.0), abs=1e-8)


def _random_destabilizer_data(rng):
    _, p, pr, du = _random_lp(rng, 1, 11)
    dv = build_dual_vectors(du, p)
    gf = build_gram_factor(dv)
    return dv, gf, build_interpolation(gf, dv)


def test_trace_inequality_random_certificates():
    rng = np.random.default_rng(105)
    for _ in range(40):
        dv, gf, _ = _random_destabilizer_data(rng)
        rep = check_trace_inequality(gf, dv, samples=25, seed=int(rng.integers(1 << 30)))
        assert rep.ok


def test_cyclic_monotonicity_of_constructed_sets():
    rng = np.random.default_rng(106)
    for _ in range(100):
        _, _, data = _random_destabilizer_data(rng)
        rep = check_cyclic_monotonicity(data, max_length=6, samples=500, seed=int(rng.integers(1 << 30)))
        assert rep.ok


def _random_polyhedral(rng):
    d = int(rng.integers(1, 5))
    m = int(rng.integers(1, 7))
    return PolyhedralConvexFunction(rng.normal(size=(m, d)), rng.normal(size=m))


def test_bronsted_rockafellar_refinement():
    rng = np.random.default_rng(107)
    for _ in range(CASES):
        F = _random_polyhedral(rng)
        K = int(rng.integers(1, 6))
        xbar = rng.normal(size=(F.dim, K))
        lam = rng.dirichlet(np.ones(F.pieces), size=K)
        ybar = (lam @ F.g).T
        eps = np.array([F.fenchel_young_gap(xbar[:, k], ybar[:, k]) for k in range(K)])
        assert np.all(eps >= -1e-12)
        rho = float(max(eps.max(), 1e-12))
        data = InterpolationData(ybar, xbar, rho)
        pairs = refine_pairs(F, data)
        dx, dy = pairs.distances(data)
        assert np.all(dx <= eps + 1e-8) and np.all(dy <= eps + 1e-8)
        for k in range(K):
            assert F.fenchel_young_gap(pairs.xhat[:, k], pairs.yhat[:, k]) <= 1e-9


def test_kron_lift_preserves_fdi_margin():
    rng = np.random.default_rng(108)
    done = 0
    while done < 50:
        ss, p, pr, _ = _random_lp(rng, 1, 9)
        if pr.t_star <= 0:
            continue
        done += 1
        m = synth_pwl_multiplier(pr)
        for d in (1, 2, 3):
            rep = kron_fdi_equivalence(m, ss, d, grid_size=64, kappa=p.kappa, tol=1e-10)
            assert rep.equal, (rep.scalar_margin, rep.lifted_margin)


def test_loop_transform_round_trip():
    rng = np.random.default_rng(109)
    count = 0
    while count < 1000:  # points, two per random instance
        F = _random_polyhedral(rng)
        kappa = float(rng.uniform(0.2, 5))
        nl = SlopeNonlinearity(F, kappa)
        z = rng.normal(size=(2, F.dim)) * 3
        y0, x0, _ = nl.evaluate(z[0])
        y1, _, _ = nl.evaluate(z[1])
        np.testing.assert_allclose(x0 + y0 / kappa, z[0], atol=1e-12)
        assert nl.membership_gap(z[0], y0) <= 1e-9
        # sector [0, kappa]: <dz, dy> >= |dy|^2 / kappa
        dz, dy = z[0] - z[1], y0 - y1
        assert dz @ dy >= dy @ dy / kappa - 1e-8
        count += 2
