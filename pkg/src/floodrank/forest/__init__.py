"""Random forest classifier with impurity-based feature importance."""
from ._backend import BACKEND
from .model import (
    ForestParams,
    RandomForestModel,
    Tree,
    best_split,
    delta_gini,
    fit_forest,
    forest_importance,
    gini,
    grow_tree,
    micro_f1,
    predict,
    resolve_m_features,
)
from .tuning import (
    DEFAULT_SPACE,
    SearchResult,
    StratificationError,
    cross_val_f1,
    random_search,
    stratified_folds,
)

__all__ = [
    "BACKEND", "DEFAULT_SPACE", "ForestParams", "RandomForestModel", "SearchResult",
    "StratificationError", "Tree", "best_split", "cross_val_f1", "delta_gini", "fit_forest",
    "forest_importance", "gini", "grow_tree", "micro_f1", "predict", "random_search",
    "resolve_m_features", "stratified_folds",
]
