"""supportlab: a workbench for exact support recovery of sparse signals.

Library layout:

* ``linalg``: measurement matrices, column spans, projection energies.
* ``model``: sparse signals, (snr, mar) parameterization, noisy instances.
* ``estimators``: exhaustive-search and correlation estimators, the
  exhaustive-failure certificate, exact-recovery scoring.
* ``theory``: closed-form measurement-count curves and the Monte Carlo
  verifiers for the order-statistics facts behind them.
* ``harness``: deterministic seeded sweeps, CSV/manifest output, canned
  phase-transition studies.
* ``plotting``: success-rate heatmaps with threshold-curve overlays.
"""

from .errors import (ConfigError, DegenerateColumnError, GuardExceededError,
                     SupportLabError)
from .linalg import (ColumnSpan, MeasMatrix, column_span, gen_matrix,
                     projection_energy, residual_correlation_gain)
from .model import (ProblemInstance, SparseSignal, make_signal, mar_of,
                    snr_of, synthesize)
from .estimators import (CertificateReport, EstimatorKind, SupportEstimate,
                         is_exact_recovery, ml_estimate, ml_failure_certificate,
                         mc_estimate)
from .theory import (CurveKind, ThresholdCurve, VerifierKind, VerifierResult,
                     capacity_bound_m, lasso_m, mc_highsnr_m, mc_sufficient_m,
                     ml_necessary_m, run_verifier, threshold_curve,
                     verify_beta_max, verify_beta_projection,
                     verify_chisq_max_min, verify_max_gauss_sq)
from .harness import (CellResult, SweepConfig, load_config, read_results_csv,
                      repro_config, run_cell, run_sweep, trial_rng,
                      write_results_csv)

__version__ = "0.1.0"

__all__ = [
    "SupportLabError", "GuardExceededError", "DegenerateColumnError", "ConfigError",
    "MeasMatrix", "ColumnSpan", "gen_matrix", "column_span",
    "projection_energy", "residual_correlation_gain",
    "SparseSignal", "ProblemInstance", "make_signal", "mar_of", "snr_of", "synthesize",
    "EstimatorKind", "SupportEstimate", "CertificateReport",
    "ml_estimate", "mc_estimate", "ml_failure_certificate", "is_exact_recovery",
    "CurveKind", "ThresholdCurve", "ml_necessary_m", "mc_sufficient_m",
    "mc_highsnr_m", "lasso_m", "capacity_bound_m", "threshold_curve",
    "VerifierKind", "VerifierResult", "verify_max_gauss_sq", "verify_chisq_max_min",
    "verify_beta_projection", "verify_beta_max", "run_verifier",
    "SweepConfig", "CellResult", "run_cell", "run_sweep", "trial_rng",
    "load_config", "read_results_csv", "write_results_csv", "repro_config",
    "__version__",
]
