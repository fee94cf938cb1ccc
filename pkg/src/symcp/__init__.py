"""Rotation-symmetrized split conformal prediction for planar trajectories.

Group-averaging a pretrained trajectory predictor (or its nonconformity
score) over a planar rotation group contracts the score distribution without
losing finite-sample coverage; this package implements the pipeline, the
statistical machinery that verifies each contraction empirically, and a CLI
for batch experiments.
"""

from .conformal import (CalibrationResult, ConformalSet, calibrate,
                        calibration_records, empirical_coverage,
                        equivariance_of_sets, prediction_set)
from .dataio import (RunManifest, TrajectorySample, export_ethucy, load_ethucy,
                     load_predictions, write_report, write_scores_csv)
from .errors import (EmptyDatasetError, IncompletePredictionsError,
                     InvalidInputError, ParseError)
from .estimator import ConformalTrajectoryPredictor
from .groups import (ActionConvention, GroupElement, GroupSpec, IDENTITY,
                     apply_input_action, apply_output_action, compose,
                     enumerate_or_sample, orbit)
from .predictors import (ConstantVelocity, EquivariantizedPredictor,
                         FixedPoint, LookupPredictor, PolynomialRegressor,
                         PoseBiasedVelocity, TrajectoryPredictor,
                         build_predictor, equivariantize, evaluate_orbit_terms)
from .scores import (SCORE_L2, SCORE_MAX, ScoreSet, score, score_split,
                     symmetrized_score)
from .stats import (BoundReport, EmpiricalDistribution, VolumeSpec,
                    chernoff_bound, concentration_bounds, cvar,
                    cvar_gap_check, empirical_cgf, icx_dominates,
                    lipschitz_gap_bound, rate_function, set_volume,
                    stop_loss, strong_convexity_lower_bound,
                    variance_decomposition, volume_gap)
from .synthetic import (SyntheticConfig, generate, oracle_orbit_stats,
                        oracle_symmetrized_score)

__version__ = "0.1.0"

__all__ = [
    "ActionConvention", "BoundReport", "CalibrationResult", "ConformalSet",
    "ConformalTrajectoryPredictor", "ConstantVelocity", "EmpiricalDistribution",
    "EmptyDatasetError", "EquivariantizedPredictor", "FixedPoint",
    "GroupElement", "GroupSpec", "IDENTITY", "IncompletePredictionsError",
    "InvalidInputError", "LookupPredictor", "ParseError",
    "PolynomialRegressor", "PoseBiasedVelocity", "RunManifest", "SCORE_L2",
    "SCORE_MAX", "ScoreSet", "SyntheticConfig", "TrajectoryPredictor",
    "TrajectorySample", "VolumeSpec", "apply_input_action",
    "apply_output_action", "build_predictor", "calibrate",
    "calibration_records", "chernoff_bound", "compose", "concentration_bounds",
    "cvar", "cvar_gap_check", "empirical_cgf", "empirical_coverage",
    "enumerate_or_sample", "equivariance_of_sets", "equivariantize",
    "evaluate_orbit_terms", "export_ethucy", "generate", "icx_dominates",
    "lipschitz_gap_bound", "load_ethucy", "load_predictions", "orbit",
    "oracle_orbit_stats", "oracle_symmetrized_score", "prediction_set",
    "rate_function", "score", "score_split", "set_volume", "stop_loss",
    "strong_convexity_lower_bound", "symmetrized_score",
    "variance_decomposition", "volume_gap", "write_report",
    "write_scores_csv",
]
