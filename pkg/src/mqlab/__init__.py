"""Membership-query active learning lab.

Dyadic refinement classifiers with scheduled sampling, higher-order kernel
labeling, smoothness-adaptive aggregation, synthetic problems with exactly
known noise parameters, and a harness for correctness audits and empirical
rate verification.
"""

from .adaptive import AdaptiveConfig, AdaptiveResult, aggregate_step, run_adaptive
from .generators import (HolderReport, InfeasibleDelta, InvalidFamilyParams,
                         MarginReport, make_lb_strong, make_lb_weak,
                         make_smooth_problem, verify_holder, verify_margin)
from .grid import (Cell, OverlapError, Region, cell_at, center, children,
                   diameter, inflated_box, region_difference, region_union,
                   sample_uniform_inflated, subcells_at_depth)
from .harness import (CorrectnessReport, DegenerateData, RateFit,
                      ResolutionTooCoarse, RunRecord, SweepConfig,
                      check_correct, fit_rate, quantile_table, run_once, sweep,
                      theoretical_exponent)
from .kernel import EmptySample, LegendreKernel, kernel_estimate
from .problems import (BudgetExhausted, Classifier, LabelOracle, NoiseParams,
                       Problem, RiskEstimate, UnsupportedExact, bayes_label,
                       eta_at, excess_risk)
from .report import ReportPaths, write_report
from .schedule import (DepthSchedule, ScheduleOverflow, bias_bound,
                       compute_delta_threshold, depth_confidence,
                       labeling_threshold, samples_per_cell,
                       samples_per_cell_real)
from .subroutine import (SubroutineConfig, SubroutineResult, classifier_from,
                         run_subroutine)

__version__ = "0.1.0"
