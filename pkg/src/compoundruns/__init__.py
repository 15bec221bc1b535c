"""
Compound binomial/negative-binomial-Poisson approximation of locally
dependent count sums, with certified total-variation error bounds and
exact circular run-statistic laws.
"""

from .measures import (LatticeMeasure, CumulantTriple, TargetParamsM1,
                       TargetParamsM2, make_binomial, make_negative_binomial,
                       make_pseudo_binomial, make_poisson, make_compound_m1,
                       make_compound_m2, convolve, tv_distance, smoothness_D,
                       smoothness_D1, raw_moments, factorial_cumulants,
                       point_mass)
from .stein import (UnifiedOperator, CompoundOperator, solve_stein_equation,
                    PerturbationBudget, budget_m1, budget_m2,
                    check_assumptions, delta_g_bound_simple,
                    delta_g_bound_perturbed, theta_constants)
from .matching import (MatchResult, cumulants_from_raw_moments, match_m1,
                       match_m2, match_auto, select_regime)
from .runs import (RunsModel, one_one_runs, k1k2_runs, k_runs, neighborhoods,
                   exact_law, brute_force_law, closed_cumulants_11,
                   closed_cumulants_k1k2, closed_cumulants_kruns,
                   conditional_laws, block_sums)
from .bounds import (XiTerms, BoundReport, xi_terms, xi_terms_blocks,
                     bound_theorem_main, bound_11runs, bound_k1k2,
                     bound_kruns_T5, bound_wang_xia, smoothness_K_11runs,
                     smoothness_kruns_product)
from .harness import (ExperimentConfig, SweepRecord, run_sweep,
                      fit_decay_slope, emit)

__version__ = "0.1.0"
