"""Simulation and moment-based inference for mode-switched edge-flip graphs."""

from .distributions import (DistSpec, Family, InconsistentMoments,
                            MeanOutOfRange, NonconvergentMean, ResidualView,
                            geometric, invert_mean, weibull,
                            weibull_from_mean_and_tail, zeta_dist)
from .estimator import (CaseConfig, Degenerate, EstimationError,
                        EstimationResult, FamilySpec, InfeasibleMean, NoRoot,
                        estimate, theta)
from .graph_dynamics import (ModelSpec, StationaryProfile, SystemState,
                             init_stationary, observed_adjacency, simulate,
                             stationary_profile, step)
from .moments import (DynamicProfile, EmpiricalMoments, InsufficientData,
                      MomentAccumulator, RegimePersistence, accumulate,
                      cross_moment, dynamic_profile, lag1_cross_moment_edges,
                      lag1_cross_moment_complete, lag1_cross_moment_stars,
                      lag2_cross_moment_edges, single_snapshot_moment)
from .figures import render_histograms
from .harness import (ConfigError, ExperimentConfig, ExperimentReport,
                      ParseError, ValidationError, emit_histograms,
                      load_config, mix64, parse_config, replication_moments,
                      run_experiment, summarize)
from .subgraph_counts import (AdjacencySnapshot, OverlapRow, SubgraphKind,
                              a_coeff, count_complete, count_edges,
                              count_stars, edges_in_clique,
                              star_overlap_table)

__version__ = "0.1.0"
