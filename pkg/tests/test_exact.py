"""Exact-core: Koszul signs, tensor plumbing, rank/kernel."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from graphact.exact import (
    FormalTensor,
    GradedBasis,
    Letter,
    SparseMatrix,
    contract,
    dual,
    koszul_sign,
    primal,
    rank_and_kernel,
    reorder,
    tensor_product,
    transport_sign,
    unshift,
    word_degree,
)


def test_koszul_identity():
    assert koszul_sign([0, 1, 2], [1, -1, 3]) == 1


def test_koszul_adjacent_swap_odd_odd():
    # shifted degrees 1 and -1 are both odd
    assert koszul_sign([1, 0], [1, -1]) == -1


def test_koszul_three_cycle_all_odd():
    # (x1,x2,x3) -> (x3,x1,x2): two adjacent odd-odd transpositions
    assert koszul_sign([2, 0, 1], [1, 1, 1]) == 1


def test_koszul_rejects_non_permutation():
    with pytest.raises(ValueError):
        koszul_sign([0, 0, 1], [1, 1, 1])
    with pytest.raises(ValueError):
        koszul_sign([0, 1], [1, 1, 1])


@given(
    st.integers(2, 6).flatmap(
        lambda n: st.tuples(
            st.permutations(range(n)),
            st.permutations(range(n)),
            st.lists(st.integers(-4, 4), min_size=n, max_size=n),
        )
    )
)
def test_koszul_composition(data):
    """Applying sigma then tau equals the composite in one step."""
    sigma, tau, degs = data
    composite = [sigma[t] for t in tau]
    after_sigma = [degs[s] for s in sigma]
    assert koszul_sign(composite, degs) == koszul_sign(sigma, degs) * koszul_sign(
        tau, after_sigma
    )


def _degmap(**kw):
    return dict(kw)


def test_reorder_identity_and_even_swap():
    degs = _degmap(e=0, z=5)
    t = FormalTensor.single((primal("e"), primal("z")), Fraction(3))
    assert reorder(t, [0, 1], degs) == t
    swapped = reorder(t, [1, 0], degs)
    assert swapped == FormalTensor.single((primal("z"), primal("e")), Fraction(3))


def test_reorder_odd_odd_swap_negates():
    degs = _degmap(a=1, b=3)
    t = FormalTensor.single((primal("a"), primal("b")))
    assert reorder(t, [1, 0], degs) == FormalTensor.single(
        (primal("b"), primal("a")), Fraction(-1)
    )


@st.composite
def words_and_perms(draw):
    n = draw(st.integers(1, 5))
    names = "abcde"[:n]
    degs = {c: draw(st.integers(-3, 3)) for c in names}
    letters = tuple(
        Letter(c, dual=draw(st.booleans()), shifted=draw(st.booleans())) for c in names
    )
    perm = draw(st.permutations(range(n)))
    return letters, perm, degs


@given(words_and_perms())
def test_reorder_round_trip(data):
    word, perm, degs = data
    t = FormalTensor.single(word, Fraction(7, 3))
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    assert reorder(reorder(t, perm, degs), inv, degs) == t


@given(words_and_perms())
def test_reorder_stepwise_matches_one_shot(data):
    """A permutation done as a chain of adjacent swaps gives the same tensor."""
    word, perm, degs = data
    t = FormalTensor.single(word)
    one_shot = reorder(t, perm, degs)
    # bubble the permutation into place
    cur = t
    seq = list(range(len(word)))
    work = list(perm)
    for i in range(len(work)):
        j = seq.index(work[i])
        while j > i:
            swap = list(range(len(seq)))
            swap[j - 1], swap[j] = swap[j], swap[j - 1]
            cur = reorder(cur, swap, degs)
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            j -= 1
    assert cur == one_shot


def test_unshift_at_front_costs_nothing():
    degs = _degmap(a=-2, b=0)
    t = FormalTensor.single((dual("a"), dual("b")))
    out = unshift(t, 0, degs)
    assert out == FormalTensor.single((dual("a", shifted=False), dual("b")))


def test_unshift_past_odd_letter_negates():
    # deg a = -2 so the dual shifted letter a* has effective degree 1
    degs = _degmap(a=-2, b=0)
    t = FormalTensor.single((dual("a"), dual("b")))
    out = unshift(t, 1, degs)
    assert out == FormalTensor.single(
        (dual("a"), dual("b", shifted=False)), Fraction(-1)
    )


def test_unshift_past_even_letter_keeps_sign():
    # deg a = -3 gives a* effective degree 2
    degs = _degmap(a=-3, b=0)
    t = FormalTensor.single((dual("a"), dual("b")))
    out = unshift(t, 1, degs)
    assert out == FormalTensor.single((dual("a"), dual("b", shifted=False)))


def test_unshift_rejects_unshifted():
    degs = _degmap(a=0)
    t = FormalTensor.single((dual("a", shifted=False),))
    with pytest.raises(ValueError):
        unshift(t, 0, degs)


def test_contract_pairing():
    t = FormalTensor.single((dual("x", shifted=False), primal("x")))
    assert contract(t, 0, 1) == FormalTensor.single(())


def test_contract_orthogonality():
    t = FormalTensor.single((dual("x", shifted=False), primal("e")))
    assert contract(t, 0, 1).is_zero()


def test_contract_keeps_spectators():
    t = FormalTensor.single((primal("e"), dual("x", shifted=False), primal("x")))
    assert contract(t, 1, 2) == FormalTensor.single((primal("e"),))


def test_contract_rejects_shifted_dual():
    t = FormalTensor.single((dual("x"), primal("x")))
    with pytest.raises(ValueError):
        contract(t, 0, 1)


def test_disjoint_contractions_commute():
    word = (
        dual("x", shifted=False),
        primal("x"),
        dual("e", shifted=False),
        primal("e"),
    )
    t = FormalTensor.single(word, Fraction(5))
    ab = contract(contract(t, 0, 1), 0, 1)
    # contracting the e-pair first leaves the x-pair at positions 0,1
    ba = contract(contract(t, 2, 3), 0, 1)
    assert ab == ba == FormalTensor.single((), Fraction(5))


def test_effective_degrees_are_the_four_rules():
    degs = _degmap(b=3)
    assert Letter("b").effective_degree(degs) == 3
    assert Letter("b", shifted=True).effective_degree(degs) == 2
    assert Letter("b", dual=True).effective_degree(degs) == -3
    assert Letter("b", dual=True, shifted=True).effective_degree(degs) == -4


def test_word_degree_sums_letters():
    degs = _degmap(x=-2, e=0)
    w = (dual("x"), dual("e"), primal("x"))
    assert word_degree(w, degs) == 1 + (-1) + (-2)


def test_tensor_product_bilinear():
    a = FormalTensor.single((primal("x"),), Fraction(2)) + FormalTensor.single(
        (primal("e"),), Fraction(1)
    )
    b = FormalTensor.single((dual("x"),), Fraction(3))
    out = tensor_product(a, b)
    assert out.terms == {
        (primal("x"), dual("x")): Fraction(6),
        (primal("e"), dual("x")): Fraction(3),
    }


def test_graded_basis_validation():
    with pytest.raises(ValueError):
        GradedBasis([("x", 0), ("x", 1)])
    with pytest.raises(ValueError):
        GradedBasis([("x*", 0)])
    b = GradedBasis([("e", 0), ("x", -2)])
    assert b.degree("x") == -2 and b.index("e") == 0
    assert "e" in b and "q" not in b


def test_transport_sign_matches_koszul():
    # transport is koszul_sign with parities supplied directly
    assert transport_sign([1, 1, 0], [1, 0, 2]) == -1
    assert transport_sign([1, 0, 1], [2, 1, 0]) == -1
    assert transport_sign([0, 0, 0], [2, 1, 0]) == 1


# --- rank / kernel ---------------------------------------------------------


def test_rank_zero_matrix():
    rank, ker = rank_and_kernel(SparseMatrix(3, 3))
    assert rank == 0 and len(ker) == 3


def test_rank_identity():
    m = SparseMatrix(4, 4, {(i, i): Fraction(1) for i in range(4)})
    rank, ker = rank_and_kernel(m)
    assert rank == 4 and ker == []


def test_rank_antidiagonal_pairing():
    m = SparseMatrix(2, 2, {(0, 1): Fraction(1), (1, 0): Fraction(1)})
    rank, _ = rank_and_kernel(m)
    assert rank == 2


def test_kernel_of_rank_one_matrix():
    # rows all equal: rank 1, kernel = 2 vectors, each annihilated
    m = SparseMatrix(
        3, 3, {(i, j): Fraction(j + 1) for i in range(3) for j in range(3)}
    )
    rank, ker = rank_and_kernel(m)
    assert rank == 1 and len(ker) == 2
    for vec in ker:
        for i in range(3):
            assert sum(Fraction(j + 1) * vec[j] for j in range(3)) == 0


@given(
    st.integers(1, 5).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(
                st.lists(
                    st.fractions(min_value=-9, max_value=9, max_denominator=4),
                    min_size=n,
                    max_size=n,
                ),
                min_size=1,
                max_size=5,
            ),
        )
    )
)
def test_rank_plus_kernel_is_ncols(data):
    n, rows = data
    entries = {
        (i, j): v for i, row in enumerate(rows) for j, v in enumerate(row) if v
    }
    m = SparseMatrix(len(rows), n, entries)
    rank, ker = rank_and_kernel(m)
    assert rank + len(ker) == n
    for vec in ker:
        for i, row in enumerate(rows):
            assert sum(row[j] * vec[j] for j in range(n)) == 0
