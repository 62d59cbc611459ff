import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fuzzyirtree.irtree import (NA, NESTED_5, NodeEasiness, TreeError, category_probs,
                                expand_alpha, linear_tree, nested_tree, node_prob,
                                parse_row, validate_tree)


def walk_probs(rows, eta, alphas):
    """Oracle: multiply branch probabilities along each row's path with plain floats."""
    out = []
    for row in rows:
        p = 1.0
        for n, cell in enumerate(row):
            if cell is None:
                continue
            up = 1.0 / (1.0 + math.exp(-(eta + alphas[n])))
            p *= up if cell == 1 else 1.0 - up
        out.append(p)
    return out


def test_paper_nested_matrix_is_valid():
    tree = validate_tree(NESTED_5)
    assert (tree.M, tree.N) == (5, 4)


def test_linear_tree_rows():
    tree = linear_tree(4)
    assert tree.rows == ((0, NA, NA), (1, 0, NA), (1, 1, 0), (1, 1, 1))
    assert (tree.M, tree.N) == (4, 3)


def test_duplicate_rows_rejected():
    with pytest.raises(TreeError, match="duplicate"):
        validate_tree([[0, NA], [1, 0], [1, 0]])


def test_all_na_row_rejected():
    with pytest.raises(TreeError, match="all-NA"):
        validate_tree([[0, NA], [NA, NA], [1, 1]])


def test_non_tree_fails_probe():
    # second category claims node 2 but nothing covers the (1, 1) branch
    with pytest.raises(TreeError, match="normalization probe"):
        validate_tree([[0, NA], [1, 0]])


def test_bad_cells_and_shapes():
    with pytest.raises(TreeError):
        validate_tree([[0, 2], [1, 0]])
    with pytest.raises(TreeError):
        validate_tree([[0]])
    with pytest.raises(TreeError):
        validate_tree([[0, NA], [1]])


def test_parse_row_tokens():
    assert parse_row("1, 0,NA") == (1, 0, None)
    assert validate_tree("0,NA\n1,0\n1,1").M == 3


def test_node_prob_values():
    assert node_prob(0.0, 0.0) == 0.5
    assert node_prob(800.0, 0.0) == 1.0
    assert node_prob(-800.0, 0.0) == 0.0
    assert node_prob(1.0, -1.248) == pytest.approx(1.0 / (1.0 + math.exp(0.248)), abs=1e-15)
    assert round(float(node_prob(1.0, -1.248)), 4) == 0.4383


def test_node_prob_no_overflow():
    with np.errstate(over="raise"):
        z = np.array([-700.0, -50.0, 0.0, 50.0, 700.0])
        p = node_prob(z, 0.0)
    assert np.all(np.isfinite(p))


@given(st.floats(-700, 700))
def test_node_prob_symmetry(x):
    assert node_prob(-x, 0.0) + node_prob(x, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_category_probs_hand_values():
    np.testing.assert_allclose(category_probs(linear_tree(4), 0.0, np.zeros(3)),
                               [0.5, 0.25, 0.125, 0.125], atol=1e-15)
    np.testing.assert_allclose(category_probs(nested_tree(), 0.0, np.zeros(4)),
                               [0.125, 0.125, 0.5, 0.125, 0.125], atol=1e-15)


@pytest.mark.parametrize("rows", [linear_tree(4).rows, linear_tree(6).rows, NESTED_5])
def test_category_probs_match_path_walk(rows):
    tree = validate_tree(rows)
    rng = np.random.default_rng(3)
    for _ in range(20):
        eta = rng.uniform(-4, 4)
        a = rng.uniform(-3, 3, size=tree.N)
        np.testing.assert_allclose(category_probs(tree, eta, a), walk_probs(rows, eta, a),
                                   rtol=1e-13, atol=1e-300)


def test_saturation_on_all_ones_path():
    for tree in (linear_tree(4), nested_tree()):
        pi = category_probs(tree, 1e4, np.zeros(tree.N))
        target = [m for m, row in enumerate(tree.rows) if all(c in (1, None) for c in row)]
        assert len(target) == 1
        assert pi[target[0]] == 1.0


@settings(max_examples=200)
@given(st.sampled_from(["linear3", "linear4", "linear7", "nested"]),
       st.floats(-10, 10), st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_normalization_property(which, eta, alphas):
    tree = nested_tree() if which == "nested" else linear_tree(int(which[-1]))
    total = category_probs(tree, eta, np.array(alphas[:tree.N])).sum()
    assert abs(total - 1.0) < 1e-12


def test_linear_tree_stochastic_ordering():
    tree = linear_tree(5)
    a = np.array([-0.5, 0.3, -1.0, 0.8])
    etas = np.linspace(-6, 6, 121)
    pi = category_probs(tree, etas, a)
    tail = np.cumsum(pi[:, ::-1], axis=1)[:, ::-1]      # P(C >= m)
    assert np.all(np.diff(tail, axis=0) >= -1e-15)


def test_vectorized_shapes():
    tree = linear_tree(4)
    assert category_probs(tree, np.zeros((7, 3)), np.zeros(3)).shape == (7, 3, 4)
    with pytest.raises(ValueError):
        category_probs(tree, 0.0, np.zeros(2))


def test_alpha_sharing_expansion():
    np.testing.assert_array_equal(expand_alpha([-1.0], 3), [-1.0, -1.0, -1.0])
    np.testing.assert_array_equal(NodeEasiness((0.1, 0.2, 0.3), "per-node").expand(3), [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        expand_alpha([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        NodeEasiness((1.0, 2.0), "shared")


def test_tree_is_read_only():
    tree = linear_tree(3)
    with pytest.raises(ValueError):
        tree.ones[0, 0] = 5.0
