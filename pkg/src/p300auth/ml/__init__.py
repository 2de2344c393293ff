"""Transforms, estimators and the pipeline registry."""
from .estimators import KNN, LDA, MDM, QDA, FitError, LogisticRegression
from .forest import RandomForest
from .pipeline import (FittedPipeline, OneVsRest, PipelineConfig, get_config, load_registry,
                       pipeline_fit, pipeline_predict, statistics_configs)
from .spd import ConvergenceError, NotSPDError
from .svm import SVM
from .transforms import (ERPCovariance, ModeError, NotFittedError, StandardScaler, TangentSpace,
                         Vectorizer, Xdawn)

__all__ = [
    "KNN", "LDA", "MDM", "QDA", "SVM", "FitError", "LogisticRegression", "RandomForest",
    "FittedPipeline", "OneVsRest", "PipelineConfig", "get_config", "load_registry",
    "pipeline_fit", "pipeline_predict", "statistics_configs", "ConvergenceError",
    "NotSPDError", "ERPCovariance", "ModeError", "NotFittedError", "StandardScaler",
    "TangentSpace", "Vectorizer", "Xdawn",
]
