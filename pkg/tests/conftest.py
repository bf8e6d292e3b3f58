import time

import pytest

from orbimorse import flow_numerics as fn
from orbimorse.morse_datum import CriticalPointRecord, FlowCount, MorseDatum


def make_teardrop(m, n):
    """Sphere with two cone points, after stabilizing the top: indices
    (2, 1, 0, 0), one flow pair of counts (+1, -1) out of the middle point."""
    return MorseDatum(
        points=(
            CriticalPointRecord("q", 0, n),
            CriticalPointRecord("p", 0, m),
            CriticalPointRecord("p'", 1, 1),
            CriticalPointRecord("p''", 2, 1),
        ),
        flows=(
            FlowCount("p'", "p", 1),
            FlowCount("p'", "q", -1),
            FlowCount("p''", "p'", 0),
        ),
        ambient_dimension=2,
    )


def make_bean():
    """Half-turn quotient of a bean-shaped sphere after stabilizing the
    middle saddle: the two top flows cancel and the new saddle maps onto
    the difference of the two bottom points."""
    return MorseDatum(
        points=(
            CriticalPointRecord("p", 2, 1),
            CriticalPointRecord("q'", 1, 1),
            CriticalPointRecord("q", 0, 2),
            CriticalPointRecord("r", 0, 2),
        ),
        flows=(
            FlowCount("p", "q'", 0),
            FlowCount("q'", "q", 1),
            FlowCount("q'", "r", -1),
        ),
        ambient_dimension=2,
    )


@pytest.fixture()
def teardrop():
    return make_teardrop


@pytest.fixture()
def bean():
    return make_bean()


class PipelineRun:
    def __init__(self, surface, orbits, counter, datum, elapsed):
        self.surface = surface
        self.orbits = orbits
        self.counter = counter
        self.datum = datum
        self.elapsed = elapsed


@pytest.fixture(scope="session")
def torus_run():
    start = time.perf_counter()
    surface = fn.torus_surface()
    orbits = fn.find_critical_orbits(surface)
    counter = fn.FlowLineCounter(surface, orbits)
    datum = fn.quotient_to_datum(surface, orbits, counter)
    return PipelineRun(surface, orbits, counter, datum,
                       time.perf_counter() - start)


class EpsilonRun(PipelineRun):
    def __init__(self, surface, pre_orbits, stabilized, orbits, counter,
                 datum, elapsed):
        super().__init__(stabilized, orbits, counter, datum, elapsed)
        self.raw_surface = surface
        self.pre_orbits = pre_orbits


@pytest.fixture(scope="session")
def epsilon_run():
    start = time.perf_counter()
    surface = fn.epsilon_sphere_surface()
    pre_orbits = fn.find_critical_orbits(surface)
    stabilized, orbits = fn.stabilize_all(surface, pre_orbits)
    counter = fn.FlowLineCounter(stabilized, orbits)
    datum = fn.quotient_to_datum(stabilized, orbits, counter)
    return EpsilonRun(surface, pre_orbits, stabilized, orbits, counter,
                      datum, time.perf_counter() - start)
