import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from splyne.basis import collocation_matrix
from splyne.boxmesh import MeshError, MeshRectangle, build_hierarchical, central_spec, has_minimal_support
from splyne.geometry import Box
from splyne.lrspace import (dump_space, insert_local_line, load_basis, lr_construct,
                            refine_region, tensor_space)

from conftest import space_for

UNIT = Box(0.0, 1.0, 0.0, 1.0)


def pu_error(space, rng, n=500):
    d = space.domain
    x = rng.uniform(d.x0, d.x1, n)
    y = rng.uniform(d.y0, d.y1, n)
    return np.abs(collocation_matrix(space, x, y).sum(axis=1) - 1).max()


@pytest.mark.parametrize("variant", ["open", "ghost"])
@pytest.mark.parametrize("degree", [(1, 1), (2, 3), (3, 3)])
def test_tensor_space_size(variant, degree):
    space = tensor_space(UNIT, 5, 4, degree, variant)
    assert len(space) == (5 + degree[0]) * (4 + degree[1])
    assert len(space.integration_elements()) == 20


def test_tensor_corners_include_domain_end(rng):
    space = tensor_space(UNIT, 3, 3)
    vals = collocation_matrix(space, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert vals.sum(axis=1) == pytest.approx([1.0, 1.0], abs=1e-15)


# DOF counts of the central family, 16 initial cells, bi-cubic
CENTRAL_DOFS = {1: 361, 2: 505, 3: 649, 4: 793, 5: 937, 6: 1081}


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_central_dof_golden(level):
    assert len(space_for("LRB", "central", level)) == CENTRAL_DOFS[level]
    assert len(space_for("S-LRB", "central", level)) == CENTRAL_DOFS[level]


def test_diagonal_dof_golden():
    assert len(space_for("LRB", "diagonal", 4)) == 679
    assert len(space_for("S-LRB", "diagonal", 4)) == 577


@pytest.mark.parametrize("method, pattern, level", [("LRB", "central", 3), ("S-LRB", "central", 3),
                                                    ("LRB", "diagonal", 3), ("S-LRB", "diagonal", 3)])
def test_minimal_support_and_partition_of_unity(method, pattern, level, rng):
    space = space_for(method, pattern, level)
    assert all(has_minimal_support(b, space.mesh) for b in space.basis)
    assert all(b.weight > 0 for b in space.basis)
    assert pu_error(space, rng) < 1e-12


def test_dump_round_trip():
    space = space_for("LRB", "central", 2)
    text = dump_space(space)
    first = text.splitlines()[0]
    assert first == "0 0 0 0 1/2^4 | 0 0 0 0 1/2^4 | 1.0"
    back = load_basis(text)
    assert [(b.key, b.weight) for b in back] == [(b.key, b.weight) for b in space.basis]


def test_replay_of_hierarchical_mesh_is_a_valid_space(rng):
    spec = central_spec(3, 8)
    space = lr_construct(build_hierarchical(spec, 4), (3, 3))
    assert pu_error(space, rng) < 1e-12
    assert all(has_minimal_support(b, space.mesh) for b in space.basis)


def test_inadmissible_insertion_rejected():
    space = tensor_space(UNIT, 4, 4)
    with pytest.raises(MeshError):
        insert_local_line(space, MeshRectangle(1, 0.375, 0.25, 0.5))


def test_short_midlines_are_extended():
    space = tensor_space(UNIT, 8, 8)
    refined = refine_region(space, Box(0.25, 0.5, 0.25, 0.5))
    assert len(refined) > len(space)
    assert not refined.inert_insertions


def test_ghost_space_keeps_functions_meeting_domain():
    space = space_for("S-LRB", "central", 2)
    assert space.domain == UNIT
    assert space.mesh.domain.x0 < 0
    for b in space.basis:
        assert b.support.overlaps(UNIT)


@st.composite
def refinement_boxes(draw):
    cells = 8
    x0 = draw(st.integers(0, cells - 2))
    y0 = draw(st.integers(0, cells - 2))
    x1 = draw(st.integers(x0 + 1, cells))
    y1 = draw(st.integers(y0 + 1, cells))
    return Box(x0 / cells, x1 / cells, y0 / cells, y1 / cells)


@given(st.lists(refinement_boxes(), min_size=1, max_size=3), st.sampled_from(["open", "ghost"]))
def test_random_refinements_keep_partition_of_unity(boxes, variant):
    rng = np.random.default_rng(5)
    space = tensor_space(UNIT, 8, 8, (2, 2), variant)
    for box in boxes:
        space = refine_region(space, box)
    assert pu_error(space, rng, 200) < 1e-12
    assert all(has_minimal_support(b, space.mesh) for b in space.basis)


def test_rank_oracle_detects_dependence():
    from conftest import collocation_rank

    space = tensor_space(UNIT, 3, 3)
    assert collocation_rank(space)[0] == len(space)
    third = space.basis[0].kv_u.knots[-1]
    # a cubic that skips the knot 2/3 lies in the span without being a basis function
    space._basis[((0.0, 0.0, third, 1.0, 1.0), (0.0, 0.0, 0.0, 0.0, third))] = 1.0
    space._list = space._table = None
    assert collocation_rank(space)[0] == len(space) - 1
