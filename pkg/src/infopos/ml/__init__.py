from .models import (
    ALGORITHMS,
    DegenerateDataset,
    EnsembleParams,
    MLConfig,
    Model,
    load_model,
    model_factory,
    predict,
    register_algorithm,
    save_model,
    train_boosted_trees,
    train_decision_tree,
    train_extra_trees,
    train_random_forest,
)
from .tree import Tree, TreeParams, grow_tree
from .validation import (
    ClassTooSmall,
    FoldStats,
    accuracy,
    confusion_matrix,
    evaluate,
    group_kfold,
    macro_f1,
    stratified_kfold,
)

__all__ = [
    "ALGORITHMS", "ClassTooSmall", "DegenerateDataset", "EnsembleParams", "FoldStats",
    "MLConfig", "Model", "Tree", "TreeParams", "accuracy", "confusion_matrix", "evaluate",
    "grow_tree", "group_kfold", "load_model", "macro_f1", "model_factory", "predict",
    "register_algorithm", "save_model", "stratified_kfold", "train_boosted_trees",
    "train_decision_tree", "train_extra_trees", "train_random_forest",
]
