"""Medial axis of plane curve germs near a singular point.

Branches are rotated graphs ``t -> (t, f(t))`` with ``f`` a finite power sum.
The package predicts, from the branch data alone, whether the medial axis
reaches the origin and which tangent directions it has there, then checks
those predictions against certified numerical medial samples.
"""
from .curve import (BranchGerm, CurveSpecError, PlaneCurveGerm, PowerTerm, eval_branch, load_curve,
                    parse_curve_spec, serialize_curve_spec)
from .distance import ClosestPointCluster, ClosestPointSet, distance_and_closest
from .fixtures import fixture
from .germ import (DirectionFan, branch_count_bound, classify_superquadratic,
                   estimate_exponent_numeric, oriented_angle, predict_reach, predict_tangent_cone)
from .medial import (ConflictTrace, GridScan, MedialSample, TraceError, nearest_medial_distance,
                     reach_verdict, run_grid_scan, trace_conflict_set)
from .verify import VerificationConfig, VerificationReport, compare_fans, run_verification

__all__ = [
    "BranchGerm", "ClosestPointCluster", "ClosestPointSet", "ConflictTrace", "CurveSpecError",
    "DirectionFan", "GridScan", "MedialSample", "PlaneCurveGerm", "PowerTerm", "TraceError",
    "VerificationConfig", "VerificationReport", "branch_count_bound", "classify_superquadratic",
    "compare_fans", "distance_and_closest", "estimate_exponent_numeric", "eval_branch", "fixture",
    "load_curve", "nearest_medial_distance", "oriented_angle", "parse_curve_spec",
    "predict_reach", "predict_tangent_cone", "reach_verdict", "run_grid_scan",
    "run_verification", "serialize_curve_spec", "trace_conflict_set",
]
