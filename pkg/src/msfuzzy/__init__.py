"""Detect the number of regimes of Markov-switching series with fuzzy clustering.

Parametric side: Hamilton filter / Kim smoother inference and ML estimation of
MS(k) and MS(k)-AR(1) models. Nonparametric side: fuzzy k-means with six
validity indices to choose k, plus Rand-index agreement between the two.
"""
__version__ = "0.1.0"

from .agreement import moving_average, rand_index, rand_summary
from .dynamics import (dgp_catalog, ergodic_mixture_density, ergodic_probabilities, get_dgp,
                       mean_duration, simulate_chain, simulate_ms)
from .estimation import EstimationConfig, MSEstimate, fit_ms, information_criteria, robust_std_errors
from .filtering import FilterOutput, hamilton_filter, infer_states, kim_smoother
from .fuzzy import FuzzyConfig, FuzzyResult, fuzzy_kmeans
from .indices import IndexReport, asw, aswf, homogeneity_test, mpc, pc, pe, select_k, xb
from .io import load_csv
from .types import (MembershipMatrix, MSModelSpec, ProbabilityPaths, StatePath, TimeSeries,
                    TransitionMatrix, canonicalize_labels, hard_assign, make_spec)

__all__ = [
    "moving_average", "rand_index", "rand_summary",
    "dgp_catalog", "ergodic_mixture_density", "ergodic_probabilities", "get_dgp",
    "mean_duration", "simulate_chain", "simulate_ms",
    "EstimationConfig", "MSEstimate", "fit_ms", "information_criteria", "robust_std_errors",
    "FilterOutput", "hamilton_filter", "infer_states", "kim_smoother",
    "FuzzyConfig", "FuzzyResult", "fuzzy_kmeans",
    "IndexReport", "asw", "aswf", "homogeneity_test", "mpc", "pc", "pe", "select_k", "xb",
    "load_csv",
    "MembershipMatrix", "MSModelSpec", "ProbabilityPaths", "StatePath", "TimeSeries",
    "TransitionMatrix", "canonicalize_labels", "hard_assign", "make_spec",
    "__version__",
]
