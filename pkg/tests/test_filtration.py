"""Finite algebras, simple functions, measures, and their calculus.

The restriction operator stands in for conditional expectation, so the
tests drive it with the one process where everything is computable by
hand: the symmetric random walk on a binary tree.
"""

import numpy as np
import pytest

from deflator import (
    Algebra,
    AlgebraMismatch,
    FAMeasure,
    Filtration,
    NotCoarser,
    SimpleFunction,
    binary_tree_filtration,
    conditional_price_check,
    pairing,
    product,
    random_walk,
    restrict,
)


# ---------------------------------------------------------------------------
# algebras


def test_algebra_blocks_partition_the_atoms():
    algebra = Algebra.from_blocks([[0, 2], [1], [3, 4]])
    assert algebra.n_blocks == 3
    assert algebra.n_atoms == 5
    collected = sorted(a for block in algebra.blocks() for a in block)
    assert collected == [0, 1, 2, 3, 4]
    np.testing.assert_array_equal(algebra.block_of, [0, 1, 0, 2, 2])


def test_from_blocks_rejects_non_partitions():
    with pytest.raises(ValueError):
        Algebra.from_blocks([[0, 1], [1, 2]])     # overlap
    with pytest.raises(ValueError):
        Algebra.from_blocks([[0], [2]])           # gap


def test_refinement_relation():
    coarse = Algebra.from_blocks([[0, 1, 2, 3]])
    middle = Algebra.from_blocks([[0, 1], [2, 3]])
    fine = Algebra.discrete(4)
    crossing = Algebra.from_blocks([[0, 2], [1, 3]])
    assert fine.refines(middle) and middle.refines(coarse)
    assert fine.refines(fine)
    assert not middle.refines(fine)
    assert not crossing.refines(middle) and not middle.refines(crossing)


def test_coarse_block_map_and_failure():
    middle = Algebra.from_blocks([[0, 1], [2, 3]])
    coarse = Algebra.trivial(4)
    np.testing.assert_array_equal(middle.coarse_block_map(coarse), [0, 0])
    crossing = Algebra.from_blocks([[0, 2], [1, 3]])
    with pytest.raises(NotCoarser):
        crossing.coarse_block_map(middle)


def test_algebra_equality_and_hash_are_structural():
    a = Algebra(np.array([0, 0, 1]))
    b = Algebra(np.array([0, 0, 1]))
    assert a == b
    assert hash(a) == hash(b)
    assert a != Algebra(np.array([0, 1, 1]))


# ---------------------------------------------------------------------------
# simple functions and measures


def test_simple_function_lift_repeats_block_values():
    coarse = Algebra.from_blocks([[0, 1], [2, 3]])
    fine = Algebra.discrete(4)
    f = SimpleFunction(coarse, [5.0, 7.0])
    lifted = f.lift(fine)
    np.testing.assert_array_equal(lifted.values, [5.0, 5.0, 7.0, 7.0])
    np.testing.assert_array_equal(f.at_atoms(), [5.0, 5.0, 7.0, 7.0])


def test_product_restrict_pairing_consistency():
    """<f, mu> computed directly equals the pairing of the restricted
    product against the trivial algebra: mass is preserved."""
    rng = np.random.default_rng(3)
    fine = Algebra.discrete(6)
    trivial = Algebra.trivial(6)
    f = SimpleFunction(fine, rng.normal(size=6))
    mu = FAMeasure(fine, rng.uniform(0.1, 1.0, size=6))
    direct = pairing(f, mu)
    collapsed = restrict(product(f, mu), trivial)
    assert collapsed.weights[0] == pytest.approx(direct, rel=1e-12)
    assert restrict(mu, trivial).weights[0] == pytest.approx(mu.mass(), rel=1e-12)


def test_vector_pairing_shapes():
    algebra = Algebra.discrete(3)
    scalar_f = SimpleFunction(algebra, [1.0, 2.0, 3.0])
    vector_f = SimpleFunction(algebra, np.arange(6.0).reshape(3, 2))
    scalar_mu = FAMeasure(algebra, [0.2, 0.3, 0.5])
    vector_mu = product(vector_f, scalar_mu)
    assert isinstance(pairing(scalar_f, scalar_mu), float)
    assert pairing(vector_f, scalar_mu).shape == (2,)
    assert pairing(scalar_f, vector_mu).shape == (2,)
    assert isinstance(pairing(vector_f, vector_mu), float)


def test_product_requires_shared_algebra():
    f = SimpleFunction(Algebra.discrete(3), [1.0, 2.0, 3.0])
    mu = FAMeasure(Algebra.trivial(3), [1.0])
    with pytest.raises(AlgebraMismatch):
        product(f, mu)


# ---------------------------------------------------------------------------
# filtrations and the random walk


def test_filtration_requires_refinement_unless_relaxed():
    coarse = Algebra.trivial(4)
    crossing = Algebra.from_blocks([[0, 2], [1, 3]])
    middle = Algebra.from_blocks([[0, 1], [2, 3]])
    with pytest.raises(NotCoarser):
        Filtration([middle, crossing])
    relaxed = Filtration([middle, crossing], relaxed=True)
    assert len(relaxed) == 2
    Filtration([coarse, middle])    # fine


def test_binary_tree_block_counts():
    filtration = binary_tree_filtration(4)
    assert [filtration[j].n_blocks for j in range(5)] == [1, 2, 4, 8, 16]
    for j in range(4):
        assert filtration[j + 1].refines(filtration[j])


def test_random_walk_moments():
    """E Z_j = 0 and Var Z_j = j under the uniform path measure."""
    n = 6
    filtration, walk, prob = random_walk(n)
    for j in range(n + 1):
        zj = walk[j].lift(filtration[-1])
        mean = pairing(zj, prob)
        second = pairing(SimpleFunction(filtration[-1], zj.values ** 2), prob)
        assert mean == pytest.approx(0.0, abs=1e-12)
        assert second == pytest.approx(float(j), rel=1e-12, abs=1e-12)


def test_random_walk_one_step_conditional_prices():
    """For any f, the conditional price of f(Z_{j+1}) on a time-j block
    is the average of the two children: the walk is a fair coin."""
    n = 5
    filtration, walk, prob = random_walk(n)
    f = lambda z: np.cosh(z / 3.0) - 0.1 * z
    measures = [restrict(prob, filtration[j]) for j in range(n + 1)]
    for j in range(n):
        target = SimpleFunction(filtration[j],
                                0.5 * (f(walk[j].values - 1.0)
                                       + f(walk[j].values + 1.0)))
        next_f = SimpleFunction(filtration[j + 1], f(walk[j + 1].values))
        assert conditional_price_check(target, measures[j],
                                       next_f, measures[j + 1])


def test_conditional_price_check_detects_violations():
    filtration, walk, prob = random_walk(2)
    measures = [restrict(prob, filtration[j]) for j in range(3)]
    wrong = SimpleFunction(filtration[0], [0.123])
    z1 = SimpleFunction(filtration[1], walk[1].values)
    assert not conditional_price_check(wrong, measures[0], z1, measures[1])
