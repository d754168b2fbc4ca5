import functools
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from splyne.harness import build_space, make_spec

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@functools.lru_cache(maxsize=None)
def space_for(method, pattern, level, cells=None):
    """Cached space construction shared by every test module."""
    return build_space(method, make_spec(pattern, level, cells))


def collocation_gram(space, per=4):
    """``C^T C`` for the collocation matrix ``C`` at ``per x per`` Gauss points per element.

    A bi-cubic polynomial is fixed by its values at 4 x 4 Gauss points, so
    ``C`` has full column rank exactly when the basis is linearly
    independent.  ``C`` has about 16 rows per element; it is accumulated
    element by element so that it never has to be formed densely.
    """
    table = space.term_table()
    elements = space.integration_elements()
    g = 0.5 * (np.polynomial.legendre.leggauss(per)[0] + 1.0)
    G = np.zeros((len(space), len(space)))
    for e, terms in zip(elements, table.element_terms(elements)):
        vals = table.tensor_values(terms, e.x0 + e.width * g, e.y0 + e.height * g).reshape(len(terms), -1)
        owners, inv = np.unique(table.owner[terms], return_inverse=True)
        F = np.zeros((len(owners), vals.shape[1]))
        np.add.at(F, inv, vals)
        G[np.ix_(owners, owners)] += F @ F.T
    return G, len(elements) * per * per


def collocation_rank(space):
    """Numerical rank of ``C`` and its smallest relative singular value, through ``C^T C``."""
    G, rows = collocation_gram(space)
    lam = np.linalg.eigvalsh(G)
    tol = lam[-1] * max(rows, len(space)) * np.finfo(float).eps
    return int((lam > tol).sum()), float(np.sqrt(max(lam[0], 0.0) / lam[-1]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# -- acceptance summary ------------------------------------------------------------------

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
