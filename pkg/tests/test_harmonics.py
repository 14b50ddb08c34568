import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from ozfexact.harmonics import (
    PwlCircleFunction,
    is_doubly_hyperdominant,
    is_pd_sequence,
    pwl_eval,
    pwl_fourier_coefficients,
)


def hat_oracle(c, ks):
    """Fourier coefficients of the uniform pwl interpolant: sinc^2(pi k/N) * ifft(c)[k mod N]."""
    c = np.asarray(c, dtype=complex)
    N = c.size
    base = np.fft.ifft(c)
    ks = np.asarray(ks)
    s = np.ones(ks.size)
    nz = ks != 0
    x = np.pi * ks[nz] / N
    s[nz] = (np.sin(x) / x) ** 2
    return s * base[ks % N]


def random_spectrum(rng, N, pd):
    lam = rng.random(N)
    if not pd:
        i = int(rng.integers(N))
        lam[i] = -rng.uniform(0.2, 1.0) * lam.max()
    return lam


def test_constant_sequence_is_pd():
    assert is_pd_sequence(np.ones(6)).ok


def test_alternating_pair_is_pd():
    assert is_pd_sequence([1.0, -1.0]).ok


def test_negative_triple_is_not_pd():
    rep = is_pd_sequence([1.0, -1.0, -1.0])
    assert not rep.ok
    assert rep.min_eigenvalue == pytest.approx(-1.0)


def test_pwl_midpoint():
    f = PwlCircleFunction([1.0, -1.0])
    assert pwl_eval(f, 1j) == pytest.approx(0.0, abs=1e-15)


def test_pwl_nodes_interpolate():
    c = np.array([2.0, 0.5 + 1j, -1.0, 0.5 - 1j])
    f = PwlCircleFunction(c)
    for j in range(4):
        assert pwl_eval(f, np.exp(2j * np.pi * j / 4)) == pytest.approx(c[j], abs=1e-14)


def test_pwl_quarter_example():
    f = PwlCircleFunction([1.0, 0.0, -1.0, 0.0])
    assert pwl_eval(f, np.exp(1j * np.pi / 4)) == pytest.approx(0.5, abs=1e-15)


def test_pwl_eval_rejects_off_circle():
    with pytest.raises(ValueError):
        pwl_eval(PwlCircleFunction([1.0]), 1.1)


def test_fourier_constant():
    h = pwl_fourier_coefficients(PwlCircleFunction([1.0, 1.0, 1.0]), 4)
    expected = np.zeros(9)
    expected[4] = 1.0
    np.testing.assert_allclose(h, expected, atol=1e-15)


def test_fourier_triangle_wave():
    h = pwl_fourier_coefficients(PwlCircleFunction([1.0, -1.0]), 2)
    np.testing.assert_allclose(h, [0.0, 4 / np.pi ** 2, 0.0, 4 / np.pi ** 2, 0.0], atol=1e-15)


def test_fourier_triangle_matches_quadrature():
    f = PwlCircleFunction([1.0, -1.0])
    for k in range(4):
        ref = quad(lambda w: f.at_angle(w).real * math.cos(k * w), 0, 2 * np.pi, points=[np.pi],
                   epsabs=1e-13)[0] / (2 * np.pi)
        assert pwl_fourier_coefficients(f, k, kmin=k)[0] == pytest.approx(ref, abs=1e-9)


def test_triangle_partial_sum():
    h = pwl_fourier_coefficients(PwlCircleFunction([1.0, -1.0]), 99)
    exact = sum(8 / (np.pi ** 2 * k ** 2) for k in range(1, 100, 2))
    assert np.sum(h) == pytest.approx(exact, abs=1e-12)
    assert np.sum(h) <= 1.0 + 1e-8
    # the series converges to f(1) = 1 slowly; the tail beyond 99 is about 4e-3
    assert 1.0 - np.sum(h) == pytest.approx(4.05e-3, abs=1e-4)


def test_fourier_matches_hat_identity_nonuniform_window():
    rng = np.random.default_rng(2)
    c = np.fft.ifft(rng.random(7)) * 7
    ks = np.arange(-30, 45)
    np.testing.assert_allclose(pwl_fourier_coefficients(PwlCircleFunction(c), 44, kmin=-30),
                               hat_oracle(c, ks), atol=1e-13)


def test_fourier_agrees_with_quadrature_on_random_pd_nodes():
    rng = np.random.default_rng(4)
    for _ in range(50):
        N = int(rng.integers(1, 9))
        lam = rng.random(N)
        lam = 0.5 * (lam + lam[(-np.arange(N)) % N])
        c = np.fft.ifft(lam).real * 1.0
        f = PwlCircleFunction(c)
        k = int(rng.integers(-10, 11))
        brk = list(2 * np.pi * np.arange(1, N) / N)
        ref = quad(lambda w: f.at_angle(w).real * math.cos(k * w), 0, 2 * np.pi, points=brk or None,
                   epsabs=1e-13, limit=200)[0] / (2 * np.pi)
        assert pwl_fourier_coefficients(f, max(k, 0), kmin=k)[0 if k >= 0 else 0] == pytest.approx(ref, abs=1e-9)


def test_nonuniform_nodes_against_quadrature():
    f = PwlCircleFunction([1.0, 0.2, -0.3], angles=[0.0, 1.0, 4.0])
    for k in (-2, 0, 3):
        re = quad(lambda w: (f.at_angle(w) * np.exp(1j * k * w)).real, 0, 2 * np.pi, points=[1.0, 4.0], epsabs=1e-13)[0]
        im = quad(lambda w: (f.at_angle(w) * np.exp(1j * k * w)).imag, 0, 2 * np.pi, points=[1.0, 4.0], epsabs=1e-13)[0]
        got = pwl_fourier_coefficients(f, max(k, 0), kmin=k)[0]
        assert got == pytest.approx((re + 1j * im) / (2 * np.pi), abs=1e-9)


def test_hyperdominance_examples():
    rep = is_doubly_hyperdominant({0: 1.0})
    assert rep.is_dhd and rep.slack == pytest.approx(1.0)
    rep = is_doubly_hyperdominant({-1: -0.5, 0: 1.0, 1: -0.5})
    assert rep.is_dhd and rep.slack == pytest.approx(0.0)
    assert not is_doubly_hyperdominant({0: 1.0, 1: 0.2})


def test_hyperdominance_array_and_matrix_forms():
    assert is_doubly_hyperdominant(np.array([-0.25, 1.0, -0.25]), kmin=-1)
    M = np.array([[1.0, -0.5], [-0.5, 1.0]])
    assert is_doubly_hyperdominant(M)
    assert not is_doubly_hyperdominant(np.array([[0.4, -0.5], [-0.5, 1.0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 31 - 1))
def test_pd_sequences_are_bounded_by_c0(N, seed):
    rng = np.random.default_rng(seed)
    c = np.fft.ifft(rng.random(N))
    assert is_pd_sequence(c).ok
    assert np.all(np.abs(c) <= c[0].real + 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 31 - 1))
def test_pd_function_gives_dhd_multiplier(N, seed):
    rng = np.random.default_rng(seed)
    lam = rng.random(N)
    lam = 0.5 * (lam + lam[(-np.arange(N)) % N])
    c = np.fft.ifft(lam).real
    c = c / max(c[0], 1e-300) * rng.uniform(0, 1)
    K = 40 * N
    h = pwl_fourier_coefficients(PwlCircleFunction(c), K)
    assert np.min(h) >= -1e-10
    sym = {k: -v for k, v in zip(range(-K, K + 1), h)}
    sym[0] += 1.0
    assert is_doubly_hyperdominant(sym, tol=1e-10)


def test_pd_report_matches_dft_oracle_200():
    rng = np.random.default_rng(7)
    for _ in range(200):
        N = int(rng.integers(1, 13))
        c = rng.normal(size=N) + 1j * rng.normal(size=N)
        c = 0.5 * (c + np.conj(c[(-np.arange(N)) % N]))
        lam = np.linalg.eigvalsh(np.array([[c[(j - k) % N] for k in range(N)] for j in range(N)]))
        expected = lam.min() >= -1e-10 * max(1.0, lam.max())
        assert is_pd_sequence(c).ok == expected
