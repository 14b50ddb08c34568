import math

import numpy as np
import pytest

from ozfexact.lti import StateSpaceModel

EXAMPLE_TF = ([1.1, 0.6], [1.0, 1.8, 0.9])
FIG2_TF = ([-1.0, 0.0], [1.0, -1.8, 0.81])


def tf_value(num, den, z):
    """Direct rational-function arithmetic, independent of the realization."""
    return np.polyval(num, z) / np.polyval(den, z)


def random_stable_plant(rng, n_max=4, radius=0.95, strictly_proper=False):
    """Random real SISO plant with poles inside ``radius``."""
    n = int(rng.integers(1, n_max + 1))
    poles = []
    while len(poles) < n:
        r = radius * math.sqrt(rng.random())
        if n - len(poles) >= 2 and rng.random() < 0.5:
            th = rng.uniform(0, math.pi)
            poles += [r * np.exp(1j * th), r * np.exp(-1j * th)]
        else:
            poles.append(r * rng.choice([-1.0, 1.0]))
    den = np.real(np.poly(poles))
    num = rng.normal(size=n if strictly_proper else n + 1)
    return StateSpaceModel.from_tf(num, den), num, den


@pytest.fixture(scope="session")
def example_plant():
    return StateSpaceModel.from_tf(*EXAMPLE_TF, name="example")


@pytest.fixture(scope="session")
def fig2_plant():
    return StateSpaceModel.from_tf(*FIG2_TF, name="fig2")


@pytest.fixture(scope="session")
def example_zero_case(example_plant):
    """Margin problem and certified dual at kappa = 2, N = 5."""
    from ozfexact.margin import build_margin_problem, solve_margin_lp

    p = build_margin_problem(example_plant, 5, 2.0)
    primal, dual = solve_margin_lp(p)
    return p, primal, dual


@pytest.fixture(scope="session")
def example_destabilizer(example_zero_case):
    from ozfexact.destabilizer import build_destabilizer

    p, _, dual = example_zero_case
    return build_destabilizer(dual, p)


@pytest.fixture(scope="session")
def example_certificate(example_destabilizer, example_plant):
    from ozfexact.lure import assemble_certificate

    return assemble_certificate(example_destabilizer, example_plant)


@pytest.fixture(scope="session")
def positive_case(example_plant):
    """Destabilizer at kappa = 1.7 where t* > 0 at N = 3."""
    from ozfexact.destabilizer import build_destabilizer
    from ozfexact.lure import assemble_certificate
    from ozfexact.margin import build_margin_problem, solve_margin_lp

    p = build_margin_problem(example_plant, 3, 1.7)
    primal, dual = solve_margin_lp(p)
    D = build_destabilizer(dual, p)
    return p, primal, dual, D, assemble_certificate(D, example_plant)
