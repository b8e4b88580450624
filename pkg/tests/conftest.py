"""Shared fixtures: assembled benchmarks and covariances, session scoped.

The h=0.1 mesh (110 DOFs) backs fast unit tests; the h=0.05 mesh
(420 DOFs) backs the acceptance suite.
"""

import numpy as np
import pytest

from rbsketch import CovarianceSpec, assemble_helmholtz


@pytest.fixture(scope="session")
def disc10():
    return assemble_helmholtz(0.1)


@pytest.fixture(scope="session")
def disc05():
    return assemble_helmholtz(0.05)


@pytest.fixture(scope="session")
def cov10(disc10):
    return CovarianceSpec.from_matrix(disc10.riesz_h1)


@pytest.fixture(scope="session")
def cov05(disc05):
    return CovarianceSpec.from_matrix(disc05.riesz_h1)


@pytest.fixture(scope="session")
def rng():
    return np.random.Generator(np.random.Philox(20240823))
