import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bielecki import (
    GridError,
    RelationStructureError,
    ShapeError,
    as_grid_function,
    build_tensor_grid,
    relation_from_sets,
    relation_full,
    relation_volterra,
    trapezoid_measure,
    uniform_grid,
    validate_relation,
)
from bielecki.grid import subaxis_trapezoid_weights, trapezoid_weights_1d


class TestBuildTensorGrid:
    def test_one_dimensional(self):
        g = build_tensor_grid([[0, 0.5, 1]])
        assert g.dimension == 1 and g.size == 3
        assert g.node_coords(2).tolist() == [1.0]

    def test_lexicographic_order(self):
        g = build_tensor_grid([[0, 1], [0, 1]])
        assert g.size == 4
        assert g.coords.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]

    def test_non_strict_axis_rejected_with_index(self):
        with pytest.raises(GridError, match="axis 0"):
            build_tensor_grid([[0, 0, 1]])
        with pytest.raises(GridError, match="axis 1"):
            build_tensor_grid([[0, 1], [1, 0.5]])

    @pytest.mark.parametrize("axes", [[], [[]], [[0, np.nan]], [[0, np.inf]]])
    def test_other_invalid_axes(self, axes):
        with pytest.raises(GridError):
            build_tensor_grid(axes)

    def test_grid_is_immutable(self):
        g = uniform_grid([(0, 1)], [3])
        with pytest.raises(ValueError):
            g.coords[0, 0] = 5.0

    def test_subgrid(self):
        g = uniform_grid([(0, 1), (0, 2)], [5, 3])
        sub = g.subgrid([2, 3])
        idx = g.subgrid_indices([2, 3])
        assert np.array_equal(g.coords[idx], sub.coords)


@settings(max_examples=200, deadline=None)
@given(shape=st.lists(st.integers(1, 6), min_size=1, max_size=3))
def test_index_bijection(shape):
    g = uniform_grid([(0, 1)] * len(shape), shape)
    assert g.size == int(np.prod(shape))
    for i in range(g.size):
        assert g.lex_index(g.multi_index(i)) == i


class TestTrapezoid:
    def test_five_nodes(self):
        w = trapezoid_measure(uniform_grid([(0, 1)], [5])).weights
        assert np.allclose(w, [0.125, 0.25, 0.25, 0.25, 0.125], rtol=0, atol=1e-15)
        assert w.sum() == pytest.approx(1.0, rel=1e-12)

    def test_two_by_two(self):
        w = trapezoid_measure(build_tensor_grid([[0, 1], [0, 1]])).weights
        assert w.tolist() == [0.25] * 4

    def test_single_node(self):
        m = trapezoid_measure(build_tensor_grid([[0.3]]))
        assert m.weights.tolist() == [0.0]
        assert trapezoid_weights_1d([2.0]).tolist() == [0.0]

    @settings(max_examples=200, deadline=None)
    @given(
        bounds=st.lists(
            st.tuples(st.floats(-5, 5), st.floats(0.01, 5)), min_size=1, max_size=3
        ),
        nodes=st.lists(st.integers(2, 30), min_size=3, max_size=3),
    )
    def test_total_is_volume(self, bounds, nodes):
        box = [(a, a + w) for a, w in bounds]
        g = uniform_grid(box, nodes[: len(box)])
        total = trapezoid_measure(g).total
        assert total == pytest.approx(g.volume(), rel=1e-12)

    def test_subaxis_rows_are_prefix_rules(self):
        ax = np.array([0.0, 0.1, 0.35, 0.4, 1.0])
        S = subaxis_trapezoid_weights(ax)
        for i in range(ax.size):
            expect = np.zeros(ax.size)
            expect[: i + 1] = trapezoid_weights_1d(ax[: i + 1])
            assert np.allclose(S[i], expect, rtol=0, atol=1e-16)


class TestRelations:
    def test_full(self):
        g = uniform_grid([(0, 1)], [3])
        r = relation_full(g)
        assert all(len(r[i]) == 3 for i in range(3))
        assert validate_relation(r).ok

    def test_volterra_1d(self):
        r = relation_volterra(build_tensor_grid([[0, 0.5, 1]]))
        assert r[1].tolist() == [0, 1]

    def test_volterra_2d(self):
        g = build_tensor_grid([[0, 1], [0, 1]])
        r = relation_volterra(g)
        assert r[g.lex_index((1, 1))].tolist() == [0, 1, 2, 3]
        assert r[g.lex_index((0, 1))].tolist() == [0, 1]
        rep = validate_relation(r)
        assert (rep.reflexive, rep.transitive, rep.cover) == (True, True, True)

    def test_volterra_rejects_negative_coordinates(self):
        with pytest.raises(GridError, match="axis 1"):
            relation_volterra(uniform_grid([(0, 1), (-1, 1)], [3, 3]))

    def test_shift_relation_not_reflexive(self):
        N = 5
        g = uniform_grid([(0, 1)], [N])
        rep = validate_relation(relation_from_sets(g, [[(i + 1) % N] for i in range(N)]))
        assert not rep.reflexive and rep.reflexive_witness == 0
        assert not rep.ok

    def test_non_transitive_witness(self):
        g = uniform_grid([(0, 1)], [3])
        rep = validate_relation(relation_from_sets(g, [[0], [0, 1], [1, 2]]))
        assert rep.reflexive and rep.cover and not rep.transitive
        i, j, k = rep.transitive_witness
        assert (i, j, k) == (2, 1, 0)

    def test_cover_failure(self):
        g = uniform_grid([(0, 1)], [3])
        assert validate_relation(relation_from_sets(g, [[0], [0, 1], [0, 2]])).ok
        # only a non-reflexive relation can leave a node uncovered
        rep = validate_relation(relation_from_sets(g, [[0], [0], [0, 2]]))
        assert not rep.cover and rep.cover_witness == 1
        assert not rep.reflexive and rep.reflexive_witness == 1

    def test_out_of_range_is_structural(self):
        g = uniform_grid([(0, 1)], [3])
        with pytest.raises(RelationStructureError):
            validate_relation(relation_from_sets(g, [[0], [1, 7], [2]]))

    def test_volterra_membership_exhaustive(self):
        g = build_tensor_grid([[0, 0.2, 0.7, 1.0], [0, 1, 3]])
        r = relation_volterra(g)
        for i in range(g.size):
            for j in range(g.size):
                expect = bool(np.all(g.coords[j] <= g.coords[i]))
                assert r.contains(i, j) == expect
                assert (j in r[i]) == expect


class TestGridFunction:
    def test_broadcast_scalar(self):
        g = uniform_grid([(0, 1)], [4])
        assert as_grid_function(2.0, g).tolist() == [2.0] * 4
        assert as_grid_function(2.0, g, m=2).shape == (4, 2)

    def test_rejections(self):
        g = uniform_grid([(0, 1)], [4])
        with pytest.raises(ShapeError):
            as_grid_function(np.ones(3), g)
        with pytest.raises(ShapeError):
            as_grid_function([1, 2, np.nan, 4], g)
        with pytest.raises(ShapeError):
            as_grid_function([1, 2, 0, 4], g, positive=True)
        with pytest.raises(ShapeError):
            as_grid_function(np.ones((4, 3)), g, m=2)
