import itertools

import pytest

from axcomp.cells import AMA5, EXACT, INPUT_ROWS, AdderCellSpec, CellKind, cell_error_rows, eval_cell, get_cell


def test_exact_examples():
    assert eval_cell(EXACT, 1, 1, 1) == (1, 1)


@pytest.mark.parametrize("row, expected", [((0, 0, 1), (0, 0)), ((1, 0, 1), (0, 1)), ((0, 0, 0), (0, 0))])
def test_ama5_examples(row, expected):
    assert eval_cell(AMA5, *row) == expected


@pytest.mark.parametrize("a, b, cin", list(itertools.product((0, 1), repeat=3)))
def test_exact_is_binary_addition(a, b, cin):
    s, c = eval_cell(EXACT, a, b, cin)
    assert a + b + cin == 2 * c + s
    assert s == a ^ b ^ cin
    assert c == (a & b) | (a & cin) | (b & cin)


def test_ama5_is_buffer_pair():
    for a, b, cin in INPUT_ROWS:
        assert eval_cell(AMA5, a, b, cin) == (b, a)


def test_error_rows():
    assert cell_error_rows(EXACT) == []
    expected = sorted(
        (a, b, cin) for a, b, cin in INPUT_ROWS
        if (b, a) != ((a + b + cin) & 1, (a + b + cin) >> 1)
    )
    rows = cell_error_rows(AMA5)
    assert rows == expected == [(0, 0, 1), (0, 1, 1), (1, 0, 0), (1, 1, 0)]
    assert 1 <= len(rows) <= 8


def test_evaluation_is_pure():
    for row in INPUT_ROWS:
        assert {eval_cell(AMA5, *row) for _ in range(3)} == {eval_cell(AMA5, *row)}


def test_lookup_by_name():
    assert get_cell("exact") is EXACT
    assert get_cell("AMA5") is AMA5
    assert CellKind.parse(" ama5 ") is CellKind.AMA5
    with pytest.raises(ValueError, match="unknown cell kind"):
        get_cell("ama9")


def test_rejects_partial_tables_and_non_bits():
    with pytest.raises(ValueError):
        AdderCellSpec(CellKind.EXACT, {(0, 0, 0): (0, 0)})
    with pytest.raises(ValueError):
        eval_cell(EXACT, 2, 0, 0)


def test_table_is_immutable():
    with pytest.raises(TypeError):
        AMA5.table[(0, 0, 0)] = (1, 1)
