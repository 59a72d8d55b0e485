import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floodrank.errors import ContractError
from floodrank.forest import (
    ForestParams,
    RandomForestModel,
    StratificationError,
    best_split,
    delta_gini,
    fit_forest,
    forest_importance,
    gini,
    grow_tree,
    micro_f1,
    predict,
    random_search,
    resolve_m_features,
    stratified_folds,
)
from floodrank.forest.model import _majority, tree_streams

from oracles import best_split_bruteforce, tree_importance_rewalk


# --- impurity -----------------------------------------------------------------

def test_gini_closed_forms():
    assert gini([5, 5]) == 0.5
    assert gini([10, 0]) == 0.0
    assert gini([4, 4, 4]) == pytest.approx(2 / 3, abs=1e-15)


def test_gini_empty_is_error():
    with pytest.raises(ContractError):
        gini([0, 0])


def test_delta_gini_examples():
    assert delta_gini([5, 5], [5, 0], [0, 5]) == 0.5
    assert delta_gini([4, 2], [2, 1], [2, 1]) == pytest.approx(0.0, abs=1e-15)
    assert delta_gini([4, 4], [3, 1], [1, 3]) == pytest.approx(0.125, abs=1e-15)


def test_delta_gini_count_mismatch():
    with pytest.raises(ContractError):
        delta_gini([4, 4], [3, 1], [1, 2])


@given(st.lists(st.integers(0, 30), min_size=2, max_size=5).filter(lambda c: sum(c) > 0))
def test_gini_range(counts):
    g = gini(counts)
    assert -1e-15 <= g <= 1 - 1 / len(counts) + 1e-15
    assert (g == 0) == (max(counts) == sum(counts))


@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=2, max_size=4)
       .filter(lambda cs: sum(a for a, _ in cs) > 0 and sum(b for _, b in cs) > 0))
def test_delta_gini_nonnegative(pairs):
    left = [a for a, _ in pairs]
    right = [b for _, b in pairs]
    parent = [a + b for a, b in pairs]
    assert delta_gini(parent, left, right) >= -1e-15


# --- split search ------------------------------------------------------------------

def test_best_split_midpoint():
    X = np.array([[1.0], [2.0], [9.0], [10.0]])
    f, t, d = best_split(X, [0, 0, 1, 1], range(4), [0])
    assert (f, t, d) == (0, 5.5, 0.5)


def test_best_split_pure_node_none():
    X = np.arange(8.0).reshape(4, 2)
    assert best_split(X, [1, 1, 1, 1], range(4), [0, 1]) is None


def test_grow_breaks_gain_ties_without_index_bias():
    # pure noise: with fully grown trees many deep splits tie exactly on gain
    rng = np.random.default_rng(0)
    X = rng.normal(size=(142, 10))
    y = rng.integers(0, 3, 142)
    imp = forest_importance(fit_forest(X, y, ForestParams(n_trees=200)))
    assert imp.max() - imp.min() < 0.03


def test_best_split_tie_prefers_lower_feature():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    assert best_split(X, [0, 0, 1, 1], range(4), [1, 0])[0] == 0


def test_best_split_min_samples_leaf():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    assert best_split(X, [0, 1, 1, 1], range(4), [0], min_samples_leaf=2)[1] == 2.5
    assert best_split(X, [0, 1, 1, 1], range(4), [0], min_samples_leaf=3) is None


small_data = st.integers(2, 9).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=n, max_size=n),
    st.lists(st.integers(0, 2), min_size=n, max_size=n)))


@settings(max_examples=150)
@given(small_data, st.integers(1, 3))
def test_best_split_matches_bruteforce(data, msl):
    X, y = np.array(data[0], dtype=float), np.array(data[1])
    got = best_split(X, y, range(len(y)), [0, 1, 2], n_classes=3, min_samples_leaf=msl)
    want = best_split_bruteforce(X, y, range(len(y)), [0, 1, 2], 3, msl)
    if want is None:
        assert got is None
    else:
        assert got[:2] == want[:2]
        assert got[2] == pytest.approx(float(want[2]), abs=1e-12)


@settings(max_examples=60)
@given(small_data, st.randoms())
def test_best_split_row_permutation_invariant(data, rnd):
    X, y = np.array(data[0], dtype=float), np.array(data[1])
    perm = list(range(len(y)))
    rnd.shuffle(perm)
    a = best_split(X, y, range(len(y)), [0, 1, 2], 3)
    b = best_split(X[perm], y[perm], range(len(y)), [0, 1, 2], 3)
    assert a == b


# --- trees and forests ---------------------------------------------------------------

def planted(n=120, d=6, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    score = X[:, 0] + noise * rng.normal(size=n)
    y = (score > -0.4).astype(int) + (score > 0.4).astype(int)
    return X, y


def test_pure_input_single_leaf():
    t = grow_tree(np.ones((5, 2)), np.zeros(5, int), ForestParams(m_features="all"))
    assert t.n_nodes == 1 and t.n_splits == 0


def test_full_tree_memorizes_separable_data():
    X, y = planted()
    t = grow_tree(X, y, ForestParams(m_features="all"))
    assert (t.predict(X) == y).all()


def test_grow_deterministic():
    X, y = planted(noise=1.0)
    a = grow_tree(X, y, ForestParams(), state=99)
    b = grow_tree(X, y, ForestParams(), state=99)
    assert a.to_node() == b.to_node()


def test_max_depth_respected():
    X, y = planted(noise=1.0)
    t = grow_tree(X, y, ForestParams(max_depth=2, m_features="all"))
    model = RandomForestModel([t], ForestParams(), 3, X.shape[1])
    assert json.loads(model.to_json())["trees"][0]["left"]["left"].keys() == {"class_counts"}


def test_tree_structure_invariants():
    X, y = planted(noise=1.0)
    t = grow_tree(X, y, ForestParams(min_samples_leaf=3))
    internal = np.flatnonzero(t.feature != -1)
    for i in internal:
        li, ri = t.left[i], t.right[i]
        assert t.n_samples[li] + t.n_samples[ri] == t.n_samples[i]
        assert (t.counts[li] + t.counts[ri] == t.counts[i]).all()
        assert t.delta[i] >= 0
    leaves = t.feature == -1
    assert (t.n_samples[leaves] >= 3).all()


def test_single_tree_forest_without_bootstrap_is_cart():
    X, y = planted(noise=0.5)
    p = ForestParams(n_trees=1, bootstrap=False, m_features="all")
    model = fit_forest(X, y, p)
    cart = grow_tree(X, y, p, state=tree_streams(p.seed, 0)[1])
    assert model.trees[0].to_node() == cart.to_node()


def test_fit_forest_bit_identical_and_thread_independent():
    X, y = planted(noise=1.0)
    p = ForestParams(n_trees=12, seed=5)
    a = fit_forest(X, y, p).to_json()
    assert fit_forest(X, y, p).to_json() == a
    assert fit_forest(X, y, p, n_jobs=4).to_json() == a


def test_empty_input_is_contract_error():
    with pytest.raises(ContractError):
        fit_forest(np.empty((0, 3)), np.empty(0, int), ForestParams())


def test_predict_votes_and_ties():
    assert _majority(np.array([[0], [1], [1]]), 2).tolist() == [1]
    assert _majority(np.array([[0], [1]]), 2).tolist() == [0]


def test_predict_width_mismatch():
    X, y = planted()
    model = fit_forest(X, y, ForestParams(n_trees=2))
    with pytest.raises(ContractError):
        predict(model, X[:, :3])
    assert predict(model, X[0]) in (0, 1, 2)


def test_single_split_importance():
    X = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.0, 0.0, 3.0], [0.0, 0.0, 4.0]])
    model = fit_forest(X, [0, 0, 1, 1], ForestParams(n_trees=1, bootstrap=False, m_features="all"))
    assert forest_importance(model).tolist() == [0.0, 0.0, 1.0]


def test_importance_matches_rewalk_oracle():
    rng = np.random.default_rng(3)
    for _ in range(10):
        X = rng.integers(0, 4, size=(8, 2)).astype(float)
        y = rng.integers(0, 2, size=8)
        model = fit_forest(X, y, ForestParams(n_trees=1, bootstrap=False, m_features="all"))
        want = tree_importance_rewalk(model.trees[0].to_node(), X, y, range(8), 2, 2)
        assert np.allclose(forest_importance(model), want, atol=1e-12, rtol=0)


def test_tree_without_splits_contributes_zero():
    X = np.array([[1.0], [2.0]])
    model = fit_forest(X, [0, 0], ForestParams(n_trees=3), n_classes=2)
    assert forest_importance(model).tolist() == [0.0]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_importance_sums_to_one_and_constant_feature_zero(seed):
    X, y = planted(n=60, d=4, seed=seed, noise=1.0)
    X[:, 2] = 7.0
    model = fit_forest(X, y, ForestParams(n_trees=5, seed=seed))
    imp = forest_importance(model)
    assert imp[2] == 0.0
    assert all(t.n_splits > 0 for t in model.trees)
    assert abs(imp.sum() - 1) <= 1e-12
    assert ((imp >= 0) & (imp <= 1)).all()


def test_monotone_rescaling_keeps_structure():
    X, y = planted(noise=1.0, seed=4)
    X2 = X.copy()
    X2[:, 1] = np.exp(X2[:, 1])
    p = ForestParams(n_trees=5, seed=2)
    a, b = fit_forest(X, y, p), fit_forest(X2, y, p)
    assert np.array_equal(forest_importance(a), forest_importance(b))
    assert np.array_equal(predict(a, X), predict(b, X2))
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.counts, tb.counts)


def test_model_json_roundtrip_exact():
    X, y = planted(noise=1.0)
    model = fit_forest(X, y, ForestParams(n_trees=4, max_depth=6))
    text = model.to_json()
    again = RandomForestModel.from_json(text)
    assert again.to_json() == text
    assert np.array_equal(predict(again, X), predict(model, X))
    assert np.array_equal(forest_importance(again), forest_importance(model))
    assert json.loads(text)["version"] == "floodrank-forest/1"


def test_resolve_m_features():
    assert resolve_m_features("sqrt", 10) == 4
    assert resolve_m_features("third", 10) == 4
    assert resolve_m_features("all", 10) == 10
    with pytest.raises(ContractError):
        resolve_m_features(11, 10)


# --- metrics and tuning ------------------------------------------------------------------

def test_micro_f1():
    assert micro_f1([1, 2, 0], [1, 2, 0]) == 1.0
    assert micro_f1([1, 1], [0, 0]) == 0.0
    assert micro_f1([0, 1, 2, 2], [0, 1, 2, 0]) == 0.75
    with pytest.raises(ContractError):
        micro_f1([], [])


def test_stratified_folds_balance_and_errors():
    y = np.array([0] * 9 + [1] * 6 + [2] * 3)
    folds = stratified_folds(y, 3, seed=1)
    assert sorted(np.concatenate(folds).tolist()) == list(range(18))
    for f in folds:
        assert np.bincount(y[f], minlength=3).tolist() == [3, 2, 1]
    with pytest.raises(StratificationError):
        stratified_folds(np.array([0, 0, 0, 1, 1]), 3, seed=0)


def test_random_search_single_draw_and_determinism():
    X, y = planted(n=90, noise=0.5)
    space = {"n_trees": [5, 10], "max_depth": [2, None], "min_samples_leaf": [1], "m_features": ["all"]}
    one = random_search(X, y, space, n_iter=1, k_folds=3, seed=4)
    assert len(one.history) == 1 and one.params == one.history[0][0]
    a = random_search(X, y, space, n_iter=4, k_folds=3, seed=4)
    b = random_search(X, y, space, n_iter=4, k_folds=3, seed=4)
    assert a == b
    assert a.cv_score == max(s for _, s in a.history)
