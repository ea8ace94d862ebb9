"""Leakage-free cross-validation, pipeline building and model comparison."""

from .table import ColumnSelector, FeatureTypeMap, Table, read_csv, resolve_selector, write_csv
from .pipeline import PipelineSpec, fit_pipeline, pipeline_predict, preprocess_until
from .cv import CVResult, CVScheme, TuningConfig, make_splits, run_cross_validation, tune_grid
from .stats import compare_all, corrected_ttest
from .inspection import InspectionView

__all__ = [
    "CVResult",
    "CVScheme",
    "ColumnSelector",
    "FeatureTypeMap",
    "InspectionView",
    "PipelineSpec",
    "Table",
    "TuningConfig",
    "compare_all",
    "corrected_ttest",
    "fit_pipeline",
    "make_splits",
    "pipeline_predict",
    "preprocess_until",
    "read_csv",
    "resolve_selector",
    "run_cross_validation",
    "tune_grid",
    "write_csv",
]

__version__ = "0.1.0"
