import numpy as np
import pytest
from scipy.io import mmread

from splyne import _fallback, kernels
from splyne.assembly import (EigenSummary, NumericalError, SymmetricOperator, assemble, assemble_pair,
                             condition_estimate, eigensolve, eigvec_heatmap, l2_project, load_vector,
                             thread_count, write_eigen_csv, write_matrix_market)
from splyne.geometry import Box
from splyne.lrspace import tensor_space

from conftest import space_for

UNIT = Box(0.0, 1.0, 0.0, 1.0)


def _index(space, u, v):
    keys = [b.key for b in space.basis]
    return keys.index((tuple(u), tuple(v)))


@pytest.mark.parametrize("n", [4, 10])
def test_open_corner_mass_entry(n):
    h = 1.0 / n
    space = tensor_space(UNIT, n, n)
    M = assemble(space, "mass").matrix
    i = _index(space, (0, 0, 0, 0, h), (0, 0, 0, 0, h))
    assert M[i, i] == pytest.approx(h * h / 49, rel=1e-13)


def test_ghost_corner_mass_entry():
    h = 0.25
    space = tensor_space(UNIT, 4, 4, variant="ghost")
    M = assemble(space, "mass").matrix
    kv = (-3 * h, -2 * h, -h, 0.0, h)
    i = _index(space, kv, kv)
    assert M[i, i] == pytest.approx(h * h / (49 * 36 ** 2), rel=1e-13)


@pytest.mark.parametrize("method", ["LRB", "S-LRB", "THB", "S-THB"])
def test_global_identities(method):
    space = space_for(method, "diagonal", 2)
    mass, stiff = assemble_pair(space)
    M, A = mass.matrix, stiff.matrix
    assert M.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.abs(A.sum(axis=1)).max() < 1e-12
    assert mass.asymmetry() == 0.0 and stiff.asymmetry() == 0.0
    assert np.linalg.eigvalsh(M).min() > 0


def test_threaded_assembly_is_identical(monkeypatch):
    space = space_for("LRB", "central", 2)
    serial = assemble(space, "stiffness", threads=1).matrix
    monkeypatch.setenv("SPLYNE_THREADS", "4")
    assert thread_count() == 4
    assert np.array_equal(assemble(space, "stiffness").matrix, serial)


def test_thread_env_validation(monkeypatch):
    monkeypatch.setenv("SPLYNE_THREADS", "many")
    with pytest.raises(ValueError):
        thread_count()
    monkeypatch.setenv("SPLYNE_THREADS", "0")
    assert thread_count() == 1
    monkeypatch.delenv("SPLYNE_THREADS")
    assert thread_count() == 1


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        assemble(tensor_space(UNIT, 2, 2), "damping")


def test_load_vector_of_one_integrates_functions():
    space = tensor_space(UNIT, 4, 4)
    b = load_vector(space, lambda x, y: np.ones_like(x))
    assert b.sum() == pytest.approx(1.0, abs=1e-14)
    M = assemble(space, "mass").matrix
    assert b == pytest.approx(M.sum(axis=1), abs=1e-15)


@pytest.mark.parametrize("method", ["LRB", "THB", "S-LRB"])
def test_cubic_polynomials_are_reproduced(method):
    space = space_for(method, "central", 2, 8)
    f = lambda x, y: 1 + x - 2 * y ** 2 + x ** 3 * y ** 3 - 0.5 * x * y ** 2  # noqa: E731
    coef = l2_project(space, f)
    rng = np.random.default_rng(3)
    x, y = rng.uniform(0, 1, 300), rng.uniform(0, 1, 300)
    approx = space.term_table().point_values(x, y).T @ coef
    assert np.abs(approx - f(x, y)).max() < 1e-9


def test_singular_mass_raises():
    space = tensor_space(UNIT, 2, 2)
    zero = SymmetricOperator("mass", np.zeros((len(space), len(space))))
    with pytest.raises(NumericalError):
        l2_project(space, lambda x, y: x, mass=zero)


def test_eigensolve_orders_and_checks_symmetry():
    op = SymmetricOperator("mass", np.diag([1.0, 4.0, 2.0]))
    s = eigensolve(op)
    assert list(s.eigenvalues) == [4.0, 2.0, 1.0]
    assert abs(s.eigvec_max[1]) == 1.0 and abs(s.eigvec_min[0]) == 1.0
    assert condition_estimate(s) == 4.0
    with pytest.raises(NumericalError):
        eigensolve(SymmetricOperator("mass", np.array([[1.0, 0.5], [0.0, 1.0]])))


def test_stiffness_condition_skips_kernel():
    s = EigenSummary("stiffness", np.array([8.0, 2.0, 1e-17]), np.zeros(3), np.zeros(3))
    assert condition_estimate(s) == 4.0


def test_matrix_market_and_eigen_csv(tmp_path):
    space = tensor_space(UNIT, 3, 3)
    mass = assemble(space, "mass")
    write_matrix_market(mass, tmp_path / "m.mtx")
    text = (tmp_path / "m.mtx").read_text()
    assert text.startswith("%%MatrixMarket matrix coordinate real symmetric")
    back = mmread(str(tmp_path / "m.mtx"))
    assert np.allclose(back.toarray(), mass.matrix, rtol=1e-15, atol=0)
    s = eigensolve(mass)
    write_eigen_csv(s, tmp_path / "e.csv")
    rows = (tmp_path / "e.csv").read_text().splitlines()
    assert rows[0] == "index,lambda"
    assert len(rows) == len(space) + 1
    assert float(rows[1].split(",")[1]) == s.eigenvalues[0]


def test_heatmap_is_normalized():
    space = space_for("LRB", "central", 2)
    s = eigensolve(assemble(space, "mass"))
    heat = eigvec_heatmap(space, s, "min")
    vals = [v for _, v in heat]
    assert max(vals) == 1.0 and min(vals) >= 0.0
    assert len(heat) == len(space.integration_elements())
    with pytest.raises(ValueError):
        eigvec_heatmap(space, s, "middle")


def test_kernel_backends_agree():
    rng = np.random.default_rng(11)
    knots = np.sort(rng.integers(0, 8, size=(50, 5)), axis=1).astype(float)
    knots[:, -1] += 1.0
    x = rng.uniform(0, 9, 200)
    ref = _fallback.eval_bsplines(knots, x, 9.0)
    got = kernels.eval_bsplines(knots, x, 9.0)
    assert np.allclose(ref[0], got[0], atol=1e-14)
    assert np.allclose(ref[1], got[1], atol=1e-12)


def test_fallback_selected_by_environment():
    import os
    import subprocess
    import sys

    env = dict(os.environ, SPLYNE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import splyne; print(splyne.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
