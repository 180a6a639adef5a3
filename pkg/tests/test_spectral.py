import random

import pytest

from gadsp.numeric import ExactMatrix, GaussRat
from gadsp.serialize import parse_spectral
from gadsp.spectral import (
    IrregularBlock,
    PoleData,
    ResidueSpec,
    SpectralDataError,
    d_value,
    make_spectral_data,
    normalize,
    rank_sequence,
    select_xi,
    shift_pole,
    swap_xi,
)
from gadsp.gensamples import random_jordan


def fuchsian_doc():
    return {
        "rank": 2,
        "poles": [
            {"point": "infinity", "order": 1, "blocks": [
                {"size": 2, "q": [], "residue": {"jordan": [
                    {"value": "0", "blocks": [1]}, {"value": "-1", "blocks": [1]}]}}]},
            {"point": "a1", "order": 1, "blocks": [
                {"size": 2, "q": [], "residue": {"jordan": [
                    {"value": "0", "blocks": [1]}, {"value": "1/2", "blocks": [1]}]}}]},
            {"point": "a2", "order": 1, "blocks": [
                {"size": 2, "q": [], "residue": {"jordan": [
                    {"value": "0", "blocks": [1]}, {"value": "1/2", "blocks": [1]}]}}]},
        ],
    }


def test_parse_fuchsian_document():
    data = parse_spectral(fuchsian_doc())
    assert all(p.order == 1 for p in data.poles)
    assert data.i_irr == frozenset({0})
    assert data.i_reg == frozenset({1, 2})
    assert data.e(0, 1) == 2


def test_parse_two_distinct_blocks():
    doc = {
        "rank": 2,
        "poles": [
            {"point": "infinity", "order": 2, "blocks": [
                {"size": 1, "q": ["1"], "residue": {"jordan": [
                    {"value": "0", "blocks": [1]}]}},
                {"size": 1, "q": ["2"], "residue": {"jordan": [
                    {"value": "0", "blocks": [1]}]}}]},
            {"point": "a1", "order": 1, "blocks": [
                {"size": 2, "q": [], "residue": {"jordan": [
                    {"value": "0", "blocks": [2]}]}}]},
        ],
    }
    data = parse_spectral(doc)
    assert data.m(0) == 2
    assert data.i_irr == frozenset({0})


def test_parse_rejects_identical_q():
    doc = {
        "rank": 2,
        "poles": [
            {"point": "infinity", "order": 2, "blocks": [
                {"size": 1, "q": ["1"], "residue": {"jordan": [
                    {"value": "0", "blocks": [1]}]}},
                {"size": 1, "q": ["1"], "residue": {"jordan": [
                    {"value": "3", "blocks": [1]}]}}]},
        ],
    }
    with pytest.raises(SpectralDataError, match="not distinct"):
        parse_spectral(doc)


def test_parse_rejects_rank_mismatch():
    doc = fuchsian_doc()
    doc["poles"][1]["blocks"][0]["size"] = 1
    with pytest.raises(SpectralDataError):
        parse_spectral(doc)


def test_parse_rejects_bad_xi():
    doc = fuchsian_doc()
    doc["poles"][0]["blocks"][0]["xi"] = ["5"]
    with pytest.raises(SpectralDataError, match="annihilate"):
        parse_spectral(doc)


def test_normalize_strips_single_block_finite_pole():
    blocks = (IrregularBlock((GaussRat(3),), 2,
                             ResidueSpec(jordan=((GaussRat(0), (2,)),))),)
    poles = (PoleData("infinity", 1,
                      (IrregularBlock((), 2, ResidueSpec(jordan=((GaussRat(1), (1, 1)),))),)),
             PoleData("a1", 2, blocks))
    data = make_spectral_data(2, poles)
    normed, log = normalize(data)
    assert normed.poles[1].order == 1
    assert normed.poles[1].blocks[0].q_coeffs == ()
    assert log == [("a1", (GaussRat(3),))]
    again, log2 = normalize(normed)
    assert again == normed and log2 == []


def test_normalize_keeps_infinity():
    poles = (PoleData("infinity", 2,
                      (IrregularBlock((GaussRat(1),), 1,
                                      ResidueSpec(jordan=((GaussRat(0), (1,)),))),)),)
    data = make_spectral_data(1, poles)
    normed, log = normalize(data)
    assert normed == data and log == []


def test_select_xi_jordan_nilpotent():
    res = ResidueSpec(jordan=((GaussRat(0), (2, 1)),))
    xi, ranks = select_xi(res)
    assert xi == (GaussRat(0), GaussRat(0))
    assert ranks == (1, 0)


def test_select_xi_two_eigenvalues():
    res = ResidueSpec(jordan=((GaussRat(1), (1,)), (GaussRat(2), (1,))))
    xi, ranks = select_xi(res)
    assert xi == (GaussRat(1), GaussRat(2))
    assert ranks == (1, 0)


def test_select_xi_explicit_scalar():
    res = ResidueSpec(explicit=ExactMatrix.from_rows([[5]]))
    xi, ranks = select_xi(res)
    assert xi == (GaussRat(5),)
    assert ranks == (0,)


def test_select_xi_annihilates_explicit_form():
    rng = random.Random(4)
    for _ in range(20):
        n = rng.randint(1, 4)
        res = random_jordan(rng, n)
        xi, ranks = select_xi(res)
        m = res.as_matrix()
        prod = ExactMatrix.identity(n)
        for x in xi:
            prod = prod * m.add_scalar(-x)
        assert prod.is_zero()
        assert ranks[0] < n
        assert all(a > b for a, b in zip(ranks, ranks[1:]))
        assert ranks[-1] == 0


def test_rank_sequence_explicit_matches_jordan():
    rng = random.Random(5)
    for _ in range(15):
        n = rng.randint(1, 4)
        res = random_jordan(rng, n)
        xi, ranks = select_xi(res)
        explicit = ResidueSpec(explicit=res.as_matrix())
        assert rank_sequence(explicit, xi) == ranks


def _block(q):
    return IrregularBlock(tuple(GaussRat(c) for c in q), 1,
                          ResidueSpec(jordan=((GaussRat(0), (1,)),)))


def test_d_value_degree_three():
    assert d_value(_block([0, 1]), _block([0, 2]), 3) == 1


def test_d_value_degree_two():
    assert d_value(_block([1]), _block([2]), 2) == 0


def test_d_value_same_block():
    blk = _block([1, 1])
    assert d_value(blk, blk, 3) == -1


def test_swap_and_shift_preserve_validity():
    data = parse_spectral(fuchsian_doc())
    swapped = swap_xi(data, 0, 1, 1)
    blk = swapped.block(0, 1)
    assert blk.xi == (GaussRat(-1), GaussRat(0))
    shifted = shift_pole(data, 1, GaussRat(2))
    assert shifted.block(1, 1).xi[0] == data.block(1, 1).xi[0] - 2
    assert shifted.block(0, 1).xi[0] == data.block(0, 1).xi[0] + 2
    assert shifted.block(0, 1).ranks == data.block(0, 1).ranks
