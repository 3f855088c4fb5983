"""Hyperbolic decision trees and forests through Klein-coordinate CART.

Points on the hyperboloid (or in the Klein or Poincare balls) are mapped to
Klein coordinates, an ordinary axis-parallel CART tree is grown there, and
each threshold is then moved to the hyperbolic (Einstein) midpoint of the
two training values it separates.
"""

from .cart import DecisionTree, fit_tree
from .datagen import MixtureConfig, sample_mixture, train_test_split
from .ensemble import Forest, fit_forest, predict_forest
from .exceptions import (
    ApproximatePostprocessingWarning,
    DimensionError,
    DomainError,
    FormatError,
    HyperDTError,
    InvalidPointError,
)
from .reference import AngularTree, ReferenceModel, fit_reference, fit_reference_model, predict_reference
from .wrapper import (
    HyperbolicModelSpec,
    HyperbolicTree,
    adjust_thresholds,
    fit,
    predict_selective,
    predict_simple,
    preprocess,
)

__version__ = "0.1.0"

__all__ = [
    "AngularTree",
    "ApproximatePostprocessingWarning",
    "DecisionTree",
    "DimensionError",
    "DomainError",
    "Forest",
    "FormatError",
    "HyperDTError",
    "HyperbolicModelSpec",
    "HyperbolicTree",
    "InvalidPointError",
    "MixtureConfig",
    "ReferenceModel",
    "adjust_thresholds",
    "fit",
    "fit_forest",
    "fit_reference",
    "fit_reference_model",
    "fit_tree",
    "predict_forest",
    "predict_reference",
    "predict_selective",
    "predict_simple",
    "preprocess",
    "sample_mixture",
    "train_test_split",
]
