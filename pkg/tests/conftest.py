import math
import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qhj.core import BarrierScenario, DuctScenario, Microstate, ObliqueScenario, UnitSystem, WellScenario

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@st.composite
def microstates(draw, lo=0.2, hi=5.0, c_frac=0.95):
    a = draw(st.floats(lo, hi))
    b = draw(st.floats(lo, hi))
    u = draw(st.floats(-c_frac, c_frac))
    return Microstate(a, b, 2.0 * math.sqrt(a * b) * u)


@st.composite
def units(draw):
    return UnitSystem(draw(st.floats(0.5, 2.0)), draw(st.floats(0.5, 2.0)))


@st.composite
def barriers(draw):
    U = draw(st.floats(0.5, 20.0))
    return BarrierScenario(U, U * draw(st.floats(0.05, 0.95)), draw(units()))


@st.composite
def obliques(draw):
    un = draw(units())
    U = draw(st.floats(0.5, 20.0))
    E = U * draw(st.floats(0.05, 0.95))
    kmax = math.sqrt(2 * un.mass * E) / un.hbar
    k_y = kmax * draw(st.floats(-0.9, 0.9))
    return ObliqueScenario(U, E, k_y, un)


@st.composite
def wells(draw):
    un = draw(units())
    U = draw(st.floats(0.5, 60.0))
    q = draw(st.floats(0.3, 2.0))
    strength = math.sqrt(2 * un.mass * U) * q / un.hbar
    n_max = math.ceil(strength / math.pi) - 1
    return WellScenario(U, q, draw(st.integers(0, max(n_max, 0))), un)


@st.composite
def ducts(draw):
    w = draw(wells())
    k_y = draw(st.floats(0.05, 3.0)) * draw(st.sampled_from([1.0, -1.0]))
    return DuctScenario(w, k_y)


def any_scenario():
    return st.one_of(barriers(), obliques(), wells(), ducts())


def random_microstate(rng: random.Random, lo=0.2, hi=5.0, c_frac=0.95) -> Microstate:
    a, b = rng.uniform(lo, hi), rng.uniform(lo, hi)
    return Microstate(a, b, 2.0 * math.sqrt(a * b) * rng.uniform(-c_frac, c_frac))


def random_scenario(rng: random.Random, kind: str | None = None):
    kind = kind or rng.choice(["barrier", "oblique", "well", "duct"])
    un = UnitSystem(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0))
    if kind == "barrier":
        U = rng.uniform(0.5, 20.0)
        return BarrierScenario(U, U * rng.uniform(0.05, 0.95), un)
    if kind == "oblique":
        U = rng.uniform(0.5, 20.0)
        E = U * rng.uniform(0.05, 0.95)
        kmax = math.sqrt(2 * un.mass * E) / un.hbar
        return ObliqueScenario(U, E, kmax * rng.uniform(-0.9, 0.9), un)
    U, q = rng.uniform(0.5, 60.0), rng.uniform(0.3, 2.0)
    strength = math.sqrt(2 * un.mass * U) * q / un.hbar
    w = WellScenario(U, q, rng.randrange(0, max(math.ceil(strength / math.pi), 1)), un)
    if kind == "well":
        return w
    return DuctScenario(w, rng.uniform(0.05, 3.0) * rng.choice([1.0, -1.0]))


@pytest.fixture
def rng():
    return random.Random(20240611)
