from .base import Algorithm, MixtureTypeModel, Predictor, ProbabilisticPredictor, mixture_predict_pmf
from .kde import KdeConfig, KernelMixture, kde_algorithm, kde_fit, kernel_component, log_kernel_table
from .knn import KNN_GRID, KnnConfig, KnnModel, knn_algorithm, knn_fit, knn_predict, knn_similarity
from .naive_bayes import (
    TAU_GRID,
    EmRun,
    FactoredMixture,
    NbConfig,
    NbFamily,
    NbParams,
    map_missing_rate,
    nb_algorithm,
    nb_fit,
    nb_fit_path,
    nb_posterior_logdensity,
    nb_sample,
    nb_select,
    run_em,
)
from .simple_nn import SimpleNN, agreement_similarity, simple_nn_algorithm, simple_nn_predict

ALGORITHM_NAMES = ("kde", "nb", "knn", "simple-nn")

__all__ = [
    "Algorithm",
    "MixtureTypeModel",
    "Predictor",
    "ProbabilisticPredictor",
    "mixture_predict_pmf",
    "KdeConfig",
    "KernelMixture",
    "kde_algorithm",
    "kde_fit",
    "kernel_component",
    "log_kernel_table",
    "KNN_GRID",
    "KnnConfig",
    "KnnModel",
    "knn_algorithm",
    "knn_fit",
    "knn_predict",
    "knn_similarity",
    "TAU_GRID",
    "EmRun",
    "FactoredMixture",
    "NbConfig",
    "NbFamily",
    "NbParams",
    "map_missing_rate",
    "nb_algorithm",
    "nb_fit",
    "nb_fit_path",
    "nb_posterior_logdensity",
    "nb_sample",
    "nb_select",
    "run_em",
    "SimpleNN",
    "agreement_similarity",
    "simple_nn_algorithm",
    "simple_nn_predict",
    "ALGORITHM_NAMES",
]
