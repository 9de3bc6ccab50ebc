from .base import Prediction, load_model, predict, save_model
from .forest import ForestModel, train_forest
from .gbt import GbtModel, train_gbt
from .svm import SvmModel, train_svm
from .tree import DecisionTree, train_tree

__all__ = [
    "Prediction",
    "DecisionTree",
    "ForestModel",
    "GbtModel",
    "SvmModel",
    "train_tree",
    "train_forest",
    "train_gbt",
    "train_svm",
    "predict",
    "save_model",
    "load_model",
]
