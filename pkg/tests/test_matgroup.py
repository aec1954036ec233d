from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affsieve.matgroup import (
    GeneratorSet,
    MatrixQ,
    ResourceCapError,
    affine_embed,
    ball,
    derived_generators,
    entry_variable_names,
    orbit,
    s_norm,
)

A = MatrixQ([[1, 2], [0, 1]])
B = MatrixQ([[1, 0], [2, 1]])
FREE = GeneratorSet([A, B])


def test_matrix_basics():
    assert (A @ A.inverse()).is_identity()
    assert A.det() == 1
    assert A.trace() == 2
    assert A.apply((1, 0)) == (Fraction(1), Fraction(0))
    assert A.apply((0, 1)) == (Fraction(2), Fraction(1))
    assert A.transpose() == B
    with pytest.raises(ValueError):
        MatrixQ([[1, 2], [3]])


def test_entry_dict():
    d = A.entry_dict()
    assert d == {"x11": 1, "x12": 2, "x21": 0, "x22": 1}
    assert entry_variable_names(2) == ("x11", "x12", "x21", "x22")


def test_generator_set_symmetrizes_and_dedups():
    g = GeneratorSet([A, A, A.inverse()])
    assert len(g.generators) == 2
    with pytest.raises(ValueError):
        GeneratorSet([MatrixQ([[1, 0], [0, 0]])])


def test_free_pair_ball_sizes():
    # the pair generates a free group, so |B(L)| = 2 * 3^L - 1
    for L in range(6):
        assert len(ball(FREE, L)) == 2 * 3**L - 1


def test_ball_word_lengths_are_minimal():
    b = ball(FREE, 3)
    assert b.word_length(MatrixQ.identity(2)) == 0
    assert b.word_length(A) == 1
    assert b.word_length(A @ A) == 2
    assert b.word_length(A @ B) == 2


def test_cyclic_ball():
    g = GeneratorSet([MatrixQ([[1, 1], [0, 1]])])
    assert len(ball(g, 5)) == 11  # identity plus powers -5..5


def test_ball_nesting():
    small = ball(FREE, 2)
    large = ball(FREE, 3)
    assert set(small.length) <= set(large.length)
    for e, l in small.length.items():
        assert large.length[e] == l


def test_ball_cap():
    with pytest.raises(ResourceCapError) as exc:
        ball(FREE, 6, cap=100)
    assert exc.value.partial_radius < 6
    assert exc.value.size > 100


def test_orbit_matches_ball_projection():
    v = (1, 0)
    o = orbit(FREE, v, 3)
    from_ball = {tuple(m.apply(v)) for m in ball(FREE, 3).elements}
    assert set(o.points) == from_ball


def test_affine_embed_composition():
    A1 = MatrixQ([[2, 1], [1, 1]])
    A2 = MatrixQ([[1, -1], [0, 1]])
    b1, b2 = (1, 2), (3, -1)
    lhs = affine_embed(A1, b1) @ affine_embed(A2, b2)
    # (A1, b1) after (A2, b2): x -> A1 A2 x + A1 b2 + b1
    rhs = affine_embed(A1 @ A2, tuple(x + y for x, y in zip(A1.apply(b2), b1)))
    assert lhs == rhs


def test_s_norm_values():
    m = MatrixQ([[Fraction(1, 2), 0], [0, 2]])
    assert s_norm(m) == 4  # archimedean: 2 * max|entry|
    assert s_norm(m, [2]) == 4  # |1/2|_2 = 2 does not beat it
    m = MatrixQ([[Fraction(1, 8), 0], [0, 8]])
    assert s_norm(m, [2]) == 16  # archimedean 2*8 beats |1/8|_2 = 8? no: 16 > 8
    assert s_norm(MatrixQ([[Fraction(1, 32), 0], [0, 1]]), [2]) == 32  # 2-adic wins


def test_s_norm_submultiplicative_up_to_n():
    n = 2
    mats = [A, B, A @ B, A.inverse()]
    for x in mats:
        for y in mats:
            assert s_norm(x @ y, [2]) <= n * s_norm(x, [2]) * s_norm(y, [2])


@settings(max_examples=30, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3))
def test_s_norm_positive(a, b, c, d):
    m = MatrixQ([[a, b], [c, d]])
    if m.det() == 0:
        return
    assert s_norm(m) > 0


def test_derived_generators():
    # the free pair has nontrivial commutators at every depth
    d1 = derived_generators(FREE, 1)
    assert d1 is not None and len(d1.generators) > 0
    # an abelian group has none
    g = GeneratorSet([MatrixQ([[1, 1], [0, 1]])])
    assert derived_generators(g, 1) is None
