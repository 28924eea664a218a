"""Parameterized approximation for clustering under monotone norm objectives."""
from .ballint import BallIntersectionOutcome, Request, solve as solve_ball_intersection
from .epas import EpasConfig, Instance, run_once, search_opt, solve_with_restarts
from .metrics import (ContinuousEuclidean, EuclideanMetric, ExplicitMetric, GraphMetric,
                      Solution)
from .norms import (FairGroup, LzNorm, OrderedNorm, PriorityOrdered, TopL, WeightedMax,
                    norm_from_spec)

__version__ = "0.1.0"
