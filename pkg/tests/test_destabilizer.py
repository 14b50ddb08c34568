import math

import numpy as np
import pytest

from ozfexact.destabilizer import (
    DualVectors,
    InterpolationData,
    build_destabilizer,
    build_dual_vectors,
    build_gram_factor,
    build_interpolation,
    build_potential,
    check_cyclic_monotonicity,
    check_trace_inequality,
    random_dhd_matrix,
    refine_pairs,
)
from ozfexact.errors import CertificateError
from ozfexact.harmonics import is_doubly_hyperdominant
from ozfexact.lti import CirculantMatrix, StateSpaceModel
from ozfexact.margin import DualCertificate, build_margin_problem, solve_margin_lp

from conftest import random_stable_plant


def test_point_mass_dual_vectors():
    p = build_margin_problem(StateSpaceModel.static(-1.0), 4)
    dv = build_dual_vectors(DualCertificate(np.array([1.0, 0, 0, 0]), 0.0, 0.0, 1.0), p)
    np.testing.assert_allclose(dv.y, np.full(4, 0.5), atol=1e-15)
    assert dv.y @ dv.y == pytest.approx(1.0)


def test_single_node_dual_vectors(example_plant):
    p = build_margin_problem(example_plant, 1, 2.0)
    pr, du = solve_margin_lp(p)
    dv = build_dual_vectors(du, p)
    np.testing.assert_allclose(dv.y, [1.0])
    np.testing.assert_allclose(dv.x, [1.7 / 3.7 - 0.5], atol=1e-14)


def test_example_cross_correlations(example_zero_case):
    p, pr, du = example_zero_case
    dv = build_dual_vectors(du, p)
    cc = dv.cross_correlations()
    assert cc[0] >= -1e-9
    assert np.all(cc <= cc[0] + 1e-9)
    np.testing.assert_allclose(dv.x, dv.T @ dv.y, atol=1e-12)


def test_inconsistent_dual_rejected(example_plant):
    p = build_margin_problem(example_plant, 5, 2.0)
    bad = DualCertificate(np.array([0.0, 0.0, 1.0, 0.0, 0.0]), 0.0, 0.0, 0.0)
    with pytest.raises(CertificateError, match="inconsistent dual certificate"):
        build_dual_vectors(bad, p)


def _dv(y, N):
    return DualVectors(np.asarray(y, dtype=float), np.zeros(N), CirculantMatrix(np.zeros(N)), 0.0, np.zeros(N))


def test_gram_of_unit_vector():
    gf = build_gram_factor(_dv([1.0, 0.0], 2))
    np.testing.assert_allclose(gf.Y, np.eye(2) / 2, atol=1e-15)
    assert gf.d == 2
    np.testing.assert_allclose(gf.U.T @ gf.U, gf.Y, atol=1e-15)


def test_gram_of_shift_invariant_vector():
    y = np.full(5, 1 / math.sqrt(5))
    gf = build_gram_factor(_dv(y, 5))
    assert gf.d == 1
    np.testing.assert_allclose(gf.Y, np.outer(y, y), atol=1e-15)


def test_gram_trace_identity_random():
    rng = np.random.default_rng(3)
    done = 0
    while done < 50:
        ss, _, _ = random_stable_plant(rng)
        N = int(rng.integers(1, 10))
        p = build_margin_problem(ss, N, float(rng.uniform(0.3, 4)))
        pr, du = solve_margin_lp(p)
        gf = build_gram_factor(build_dual_vectors(du, p))
        assert np.trace(gf.Y) == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.norm(gf.Y - gf.U.T @ gf.U) <= 1e-9
        assert np.min(np.linalg.eigvalsh(gf.Y)) >= -1e-12
        # circulant: constant along wrapped diagonals
        for k in range(N):
            diag = np.array([gf.Y[(i + k) % N, i] for i in range(N)])
            assert np.ptp(diag) <= 1e-12
        done += 1


def test_single_node_interpolation_two_cycle():
    p = build_margin_problem(StateSpaceModel.static(-0.5), 1)
    pr, du = solve_margin_lp(p)
    assert pr.t_star == pytest.approx(0.5)
    dv = build_dual_vectors(du, p)
    data = build_interpolation(build_gram_factor(dv), dv)
    assert data.rho == pytest.approx(0.5)
    w = data.edge_weights() + data.rho
    two_cycle = w[0, 1] + w[1, 0]
    assert two_cycle == pytest.approx(0.5)
    assert two_cycle <= 2 * data.rho + 1e-12


def test_interpolation_rejects_zero_y():
    dv = _dv(np.zeros(3), 3)
    gf = build_gram_factor(_dv(np.ones(3) / math.sqrt(3), 3))
    with pytest.raises(ValueError):
        build_interpolation(gf, dv)


def test_example_interpolation(example_destabilizer):
    data = example_destabilizer.data
    assert data.d <= 5
    assert data.rho == 0.0
    rep = check_cyclic_monotonicity(data, max_length=6)
    assert rep.ok and rep.worst <= 1e-12


def _all_cycles_brute(w, max_len):
    import itertools

    n = w.shape[0]
    worst = -np.inf
    for L in range(1, max_len + 1):
        for cyc in itertools.product(range(n), repeat=L):
            worst = max(worst, sum(w[cyc[i], cyc[(i + 1) % L]] for i in range(L)))
    return worst


def test_walk_powers_match_brute_force(example_destabilizer):
    data = example_destabilizer.data
    w = data.edge_weights()
    np.fill_diagonal(w, -data.rho)
    rep = check_cyclic_monotonicity(data, max_length=5)
    brute = max(_all_cycles_brute(w, L) for L in range(2, 6))
    assert rep.worst == pytest.approx(brute, abs=1e-14)


def test_trace_inequality_identity_and_shift(example_destabilizer):
    dv, gf = example_destabilizer.dual, example_destabilizer.gram
    TY = dv.T.dense().real @ gf.Y
    N = dv.N
    assert np.trace(TY) >= -dv.t_star - 1e-12
    S = CirculantMatrix.shift(N).dense()
    for k in range(1, N):
        M = np.eye(N) - np.linalg.matrix_power(S, k)
        assert is_doubly_hyperdominant(M)
        assert np.trace(M @ TY) + np.trace(M) * dv.t_star / N >= -1e-12


def test_trace_inequality_random(example_destabilizer):
    rep = check_trace_inequality(example_destabilizer.gram, example_destabilizer.dual, samples=100)
    assert rep.ok


def test_random_dhd_matrices_are_dhd():
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert is_doubly_hyperdominant(random_dhd_matrix(int(rng.integers(1, 9)), rng))


def test_example_potential(example_destabilizer):
    data = example_destabilizer.data
    F = build_potential(data)
    assert F.pieces <= data.N + 1
    for k in range(data.N + 1):
        x, y = data.xbar[:, k], data.ybar[:, k]
        assert abs(F(x) + F.conjugate(y) - x @ y) <= 1e-8


def test_epsilon_subgradients_on_probes(positive_case):
    data = positive_case[3].data
    F = build_potential(data)
    rng = np.random.default_rng(1)
    probes = rng.normal(size=(1000, data.d)) * 2
    for k in range(data.N + 1):
        x, y = data.xbar[:, k], data.ybar[:, k]
        lhs = F(probes)
        rhs = F(x) + (probes - x) @ y - data.rho
        assert np.all(lhs >= rhs - 1e-9)
        others = np.array([F(data.xbar[:, j]) for j in range(data.N + 1)])
        assert np.all(others >= F(x) + (data.xbar.T - x) @ y - data.rho - 1e-9)


def test_refinement_at_positive_margin(positive_case):
    D = positive_case[3]
    dx, dy = D.pairs.distances(D.data)
    assert np.all(dx <= D.data.rho + 1e-8)
    assert np.all(dy <= D.data.rho + 1e-8)
    for k in range(D.data.N + 1):
        assert D.potential.fenchel_young_gap(D.pairs.xhat[:, k], D.pairs.yhat[:, k]) <= 1e-9


def test_final_nonlinearity_interpolates(example_destabilizer):
    D = example_destabilizer
    nl = D.nonlinearity
    assert nl.membership_gap(np.zeros(D.d), np.zeros(D.d)) == pytest.approx(0.0, abs=1e-12)
    for k in range(D.data.N):
        assert abs(nl.potential.fenchel_young_gap(D.zhat[:, k], D.what[:, k])) <= 1e-9


def test_size_guard(example_plant):
    p = build_margin_problem(example_plant, 17, 2.0)
    pr, du = solve_margin_lp(p)
    with pytest.raises(ValueError, match="N <= 16"):
        build_destabilizer(du, p)
