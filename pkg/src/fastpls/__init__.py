"""fastpls: fast partial least squares with exact cross-validation shortcuts.

The package provides:

* numerically careful weighted column statistics (:mod:`fastpls.stats`),
* spectral row preprocessing — standard normal variate, Savitzky-Golay
  smoothing/derivatives, pseudo-absorbance (:mod:`fastpls.preprocess`),
* three interchangeable PLS solvers — an iterative reference and two
  kernel-product formulations (:mod:`fastpls.pls`),
* a cross-validation matrix engine that derives every training fold's
  preprocessed cross-product matrices from one pass over the data
  (:mod:`fastpls.cvmatrix`),
* fold orchestration with component selection and final refit
  (:mod:`fastpls.crossval`),
* regression/classification metrics and prediction-line calibration
  (:mod:`fastpls.metrics`),
* a command line front end (:mod:`fastpls.cli`).
"""

__version__ = "0.1.0"

from .core import (
    Dataset,
    DenseMatrix,
    FoldSpec,
    PreprocessSpec,
    load_binary,
    load_csv,
    make_folds,
    save_binary,
    save_csv,
)
from .crossval import CvReport, cross_validate
from .cvmatrix import (
    CvProducts,
    GlobalProducts,
    naive_training_products,
    precompute,
    stream_training_products,
    training_products,
)
from .errors import (
    DataError,
    DegenerateComponentError,
    DegenerateFitError,
    FastplsError,
    NumericError,
    UndefinedRecallError,
    UndefinedVarianceError,
    ZeroVarianceError,
)
from .metrics import (
    CalibrationLine,
    accuracy,
    apply_calibration,
    balanced_accuracy,
    fit_bias_scale,
    rmse,
    syx,
    weighted_accuracy,
)
from .pls import (
    PlsModel,
    fit,
    fit_ikpls1,
    fit_ikpls2,
    fit_ikpls2_data,
    fit_nipals,
    load_model,
    predict,
    predict_all,
    predict_class,
    save_model,
)
from .preprocess import (
    Pipeline,
    SavgolSpec,
    apply_center_scale,
    apply_row_steps,
    invert_center_scale,
    parse_pipeline,
    savgol_apply,
    savgol_coefficients,
    snv,
    to_pseudo_absorbance,
)
from .stats import (
    ClassWeightTable,
    ColumnStats,
    becker_ismail_variance,
    class_weights,
    column_stats,
    neumaier_sum,
)

__all__ = [
    "Dataset",
    "DenseMatrix",
    "FoldSpec",
    "PreprocessSpec",
    "load_binary",
    "load_csv",
    "make_folds",
    "save_binary",
    "save_csv",
    "CvReport",
    "cross_validate",
    "CvProducts",
    "GlobalProducts",
    "naive_training_products",
    "precompute",
    "stream_training_products",
    "training_products",
    "DataError",
    "DegenerateComponentError",
    "DegenerateFitError",
    "FastplsError",
    "NumericError",
    "UndefinedRecallError",
    "UndefinedVarianceError",
    "ZeroVarianceError",
    "CalibrationLine",
    "accuracy",
    "apply_calibration",
    "balanced_accuracy",
    "fit_bias_scale",
    "rmse",
    "syx",
    "weighted_accuracy",
    "ClassWeightTable",
    "ColumnStats",
    "becker_ismail_variance",
    "class_weights",
    "column_stats",
    "neumaier_sum",
    "PlsModel",
    "fit",
    "fit_ikpls1",
    "fit_ikpls2",
    "fit_ikpls2_data",
    "fit_nipals",
    "load_model",
    "predict",
    "predict_all",
    "predict_class",
    "save_model",
    "Pipeline",
    "SavgolSpec",
    "apply_center_scale",
    "apply_row_steps",
    "invert_center_scale",
    "parse_pipeline",
    "savgol_apply",
    "savgol_coefficients",
    "snv",
    "to_pseudo_absorbance",
    "__version__",
]
