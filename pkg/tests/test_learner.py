import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from axcomp import learner, mularray
from axcomp.learner import (
    CompensationTable, CompensationTree, Leaf, ModelFormatError, Quantizer, Split, build_table, dump_tree,
    export_model, fit_tree, import_model, predict, quantize, train_tree,
)
from axcomp.profiler import characterize


@pytest.mark.parametrize("value, cluster", [(0, 1), (255, 16), (144, 10), (15, 1), (16, 2), (143, 9)])
def test_quantize_examples(quantizer, value, cluster):
    assert quantize(quantizer, value) == cluster


def test_quantize_range(quantizer):
    for bad in (-1, 256):
        with pytest.raises(ValueError):
            quantize(quantizer, bad)
    with pytest.raises(TypeError):
        quantize(quantizer, 1.5)


@given(st.integers(1, 8).flatmap(lambda w: st.tuples(st.just(w), st.integers(1, 1 << w))))
def test_quantizer_partitions_domain(params):
    width, clusters = params
    q = Quantizer(clusters, width)
    idx = [quantize(q, v) for v in range(1 << width)]
    assert idx[0] == 1 and idx[-1] == clusters
    assert all(0 <= b - a <= 1 for a, b in zip(idx, idx[1:]))  # monotone and contiguous
    assert set(idx) == set(range(1, clusters + 1))


def test_quantizer_equal_ranges(quantizer):
    sizes = np.bincount(quantizer.quantize_array(np.arange(256)))[1:]
    assert sizes.tolist() == [16] * 16


def test_exact_profile_gives_zero_table_and_single_leaf(quantizer):
    table = build_table(characterize(mularray.build_netlist(mularray.EXACT_CONFIG)), quantizer)
    assert not table.values.any()
    tree = train_tree(table)
    assert tree.root == Leaf(0)
    assert all(predict(tree, i, j) == 0 for i in range(1, 17) for j in range(1, 17))


def test_table_cells_are_rounded_means(ref_profile, ref_table):
    def half_up_mean(vals):
        return (2 * sum(vals) + len(vals)) // (2 * len(vals))

    ed = ref_profile.ed
    block = [int(ed[a, b]) for a in range(16) for b in range(16)]
    assert ref_table[1, 1] == half_up_mean(block)
    rng = random.Random(7)
    for _ in range(10):
        i, j = rng.randint(1, 16), rng.randint(1, 16)
        vals = [int(ed[a, b]) for a in range((i - 1) * 16, i * 16) for b in range((j - 1) * 16, j * 16)]
        assert ref_table[i, j] == half_up_mean(vals)
    assert np.abs(ref_table.values).max() <= 756


def test_half_up_rounding():
    # a cell whose mean is exactly -0.5 rounds up to 0, +0.5 rounds up to 1
    from axcomp.profiler import ErrorProfile
    ed = np.zeros((4, 4), dtype=np.int64)
    ed[0, 0] = -2   # cluster (1,1) covers a,b in {0,1}: mean -0.5
    ed[2, 2] = 2    # cluster (2,2): mean +0.5
    table = build_table(ErrorProfile.from_ed(2, ed), Quantizer(2, 2))
    assert table.values.tolist() == [[0, 0], [0, 1]]


def test_gain_ratio_choice_by_hand():
    # labels along input1: 5 5 5 9. Gains for t=1,2,3 are 0.123, 0.311, 0.811
    # (average 0.415), so only t=3 is eligible and it has gain ratio 1.0
    rows = [(1, 1, 5), (2, 1, 5), (3, 1, 5), (4, 1, 9)]
    tree = fit_tree(rows, 4)
    assert tree.root == Split(0, 3, Leaf(5), Leaf(9))


def test_zero_gain_regions_still_split():
    rows = [(1, 1, 1), (1, 2, 2), (2, 1, 2), (2, 2, 1)]
    tree = fit_tree(rows, 2)
    assert all(predict(tree, i, j) == v for i, j, v in rows)


def test_majority_leaf_under_depth_limit():
    rows = [(1, 1, 3), (1, 2, 3), (2, 1, 7), (2, 2, 7), (3, 1, 7), (3, 2, 3)]
    tree = fit_tree(rows, 3, max_depth=0)
    assert tree.root == Leaf(3)  # 3 vs 7 tie -> smaller value


def test_unpruned_tree_equals_table(ref_table, ref_tree):
    assert np.array_equal(ref_tree.grid(), ref_table.values)
    for i in range(1, 17):
        for j in range(1, 17):
            assert predict(ref_tree, i, j) == ref_table[i, j]


def test_root_split_shape(ref_tree):
    root = ref_tree.root
    assert isinstance(root, Split)
    assert learner.FEATURES[root.feature] == "input1"
    assert 1 <= root.threshold < 16


def test_depth_and_leaf_count(ref_tree):
    # threshold splits can be lopsided, so depth is only bounded by 2 * 15
    assert ref_tree.depth() <= 30
    assert ref_tree.leaf_count() <= 256


def test_prediction_bounded(ref_table, ref_tree):
    limit = np.abs(ref_table.values).max()
    assert np.abs(ref_tree.grid()).max() <= limit


def test_training_is_order_independent(ref_table):
    rows = [(i, j, ref_table[i, j]) for i in range(1, 17) for j in range(1, 17)]
    reference = fit_tree(rows, 16)
    for seed in range(3):
        shuffled = rows[:]
        random.Random(seed).shuffle(shuffled)
        assert fit_tree(shuffled, 16) == reference


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(-3, 3), min_size=n * n, max_size=n * n))))
def test_random_tables_are_reproduced(params):
    n, flat = params
    table = CompensationTable(np.array(flat, dtype=np.int64).reshape(n, n))
    assert np.array_equal(train_tree(table).grid(), table.values)


def test_predict_range(ref_tree):
    with pytest.raises(ValueError):
        predict(ref_tree, 0, 1)
    with pytest.raises(ValueError):
        predict(ref_tree, 1, 17)


def test_model_round_trip(ref_tree, zero_tree, quantizer):
    for tree in (zero_tree, ref_tree):
        loaded, q, meta = import_model(export_model(tree, quantizer, {"seed": 1}))
        assert q == quantizer and meta == {"seed": 1}
        assert np.array_equal(loaded.grid(), tree.grid())
        assert loaded == tree
    loaded, _, _ = import_model(export_model(ref_tree).encode())
    assert loaded == ref_tree


def test_truncated_model_is_rejected(ref_tree):
    text = export_model(ref_tree)
    with pytest.raises(ModelFormatError, match=r"line \d+, column \d+"):
        import_model(text[: len(text) // 2])


@pytest.mark.parametrize("edit, where", [
    (lambda d: d["tree"].update(threshold=99), "$.tree.threshold"),
    (lambda d: d["tree"].pop("gt"), "$.tree"),
    (lambda d: d["tree"].update(feature="input3"), "$.tree.feature"),
    (lambda d: d.update(format="nope"), "$"),
    (lambda d: d["tree"]["le"].update(leaf="x") if "leaf" in d["tree"]["le"] else d["tree"].update(le=[]), "$.tree.le"),
])
def test_structural_errors_name_the_path(ref_tree, edit, where):
    doc = json.loads(export_model(ref_tree))
    edit(doc)
    with pytest.raises(ModelFormatError) as exc:
        import_model(json.dumps(doc))
    assert str(exc.value).startswith(where)


def test_table_csv_round_trip(ref_table):
    text = ref_table.to_csv("config")
    assert text.startswith("# config\n")
    assert np.array_equal(CompensationTable.from_csv(text).values, ref_table.values)


def test_dump_tree_mentions_every_leaf(ref_tree):
    text = dump_tree(ref_tree)
    assert text.splitlines()[0].startswith("input1 <= ")
    assert text.count("compensate ") == ref_tree.leaf_count()
    assert dump_tree(CompensationTree(Leaf(0))) == "compensate 0\n"
