import json
from importlib import resources

import numpy as np
import pytest

from invzero.cli import SystemDocument


def load_fixture(name):
    text = resources.files("invzero").joinpath("fixtures", name).read_text()
    return SystemDocument.parse(text, name)


@pytest.fixture
def siso():
    return load_fixture("siso.json").system


@pytest.fixture
def example1():
    return load_fixture("example1.json").system


@pytest.fixture
def example2():
    return load_fixture("example2.json").system


@pytest.fixture
def example2_extended():
    return load_fixture("example2_extended.json").system


@pytest.fixture
def example3():
    return load_fixture("example3.json").system


# Zero dynamics rows of T that reproduce the reference decompositions.
SISO_BZ = np.array([[0.0, 1.0, 0.0]])
EXAMPLE1_BZ = np.array([[0, 0, 1, 0, 0, 0], [0, 1, 0, 0, 0, 0]], dtype=float)
EXAMPLE2_BZ = np.eye(6)[[2, 1, 4, 5]]

EXAMPLE2_ZEROS = np.array([-0.774432 + 1.377758j, -0.774432 - 1.377758j,
                           -2.225568 + 2.157471j, -2.225568 - 2.157471j])

# Extra output rows used to square the three-input system, one per round.
EXAMPLE3_CSQ1 = np.array([[2.0, 1.0, 3.0, 4.0, 7.0, 3.0]])
EXAMPLE3_CSQ2 = np.array([[1.0, 4.0, 2.0, 4.0, 0.0, 3.0]])


def planted_spectrum(rng, k):
    """`k` zeros in the left-ish half plane, some as conjugate pairs."""
    zs = []
    while len(zs) < k:
        if k - len(zs) >= 2 and rng.random() < 0.4:
            z = complex(rng.uniform(-3, 1), rng.uniform(0.3, 2))
            zs += [z, z.conjugate()]
        else:
            zs.append(complex(rng.uniform(-3, 2), 0))
    return zs


def dumps_system(sys, **extra):
    doc = {"A": sys.A.tolist(), "B": sys.B.tolist(), "C": sys.C.tolist()}
    if sys.has_feedthrough:
        doc["D"] = sys.D.tolist()
    doc.update(extra)
    return json.dumps(doc)


# -- acceptance summary --------------------------------------------------------

ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, text):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
