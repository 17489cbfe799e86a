"""Bi-level penalized variable selection for longitudinal G-E interaction models.

The package fits marginal gene-environment interaction models to repeated
measurements through quadratic inference functions, applies sparse-group
concave penalties for simultaneous group and within-group selection, and
ships the simulation and evaluation pipeline used to validate the method.
"""

from .correlation import (
    ClusterTransform,
    Correlation,
    apply_transform,
    basis_matrices,
    transform_from_mask,
    true_correlation,
)
from .datamodel import (
    ExpandedDesign,
    LongitudinalDataset,
    Violation,
    design_dim,
    expand_design,
    subset_subjects,
    validate_dataset,
)
from .experiment import (
    BenchRow,
    ExperimentConfig,
    ExperimentResult,
    VariantResult,
    bench,
    format_summary,
    run_experiment,
    run_replicate,
    summarize,
)
from .io import (
    fit_to_dict,
    read_dataset_csv,
    read_fit_json,
    read_truth_json,
    write_dataset_csv,
    write_fit_json,
    write_truth_json,
)
from .penalty import (
    PenaltyKind,
    PenaltySpec,
    assemble_h,
    empirical_group_weights,
    group_norm,
    mcp,
    mcp_deriv,
    penalty_value,
)
from .qif import (
    PINV_RTOL,
    QifEngine,
    QifEvaluation,
    evaluate_qif,
    extended_score,
    qif_derivatives,
    qif_objective,
)
from .screen import ScreenReport, marginal_screen
from .simulate import (
    Scenario,
    ScenarioConfig,
    SimulatedTruth,
    conditional_genotype_matrix,
    delete_observations,
    gen_covariates,
    gen_response,
    gen_truth,
    haplotype_frequencies,
    hardy_weinberg_probs,
    replicate_seed,
    simulate_scenario,
    simulate_validation,
)
from .solver import FitResult, IterationRecord, init_lasso, newton_fit, threshold_select
from .tuning import (
    CellResult,
    CrossValResult,
    GridTuneResult,
    MetricsReport,
    TuningGrid,
    cross_validate,
    default_grid,
    grid_cells,
    grid_tune,
    predict_mse,
    subject_folds,
    tpfp,
)

__version__ = "0.1.0"

__all__ = [
    "BenchRow",
    "CellResult",
    "ClusterTransform",
    "Correlation",
    "CrossValResult",
    "ExpandedDesign",
    "ExperimentConfig",
    "ExperimentResult",
    "FitResult",
    "GridTuneResult",
    "IterationRecord",
    "LongitudinalDataset",
    "MetricsReport",
    "PINV_RTOL",
    "PenaltyKind",
    "PenaltySpec",
    "QifEngine",
    "QifEvaluation",
    "Scenario",
    "ScenarioConfig",
    "ScreenReport",
    "SimulatedTruth",
    "TuningGrid",
    "VariantResult",
    "Violation",
    "apply_transform",
    "assemble_h",
    "basis_matrices",
    "bench",
    "conditional_genotype_matrix",
    "cross_validate",
    "default_grid",
    "delete_observations",
    "design_dim",
    "empirical_group_weights",
    "evaluate_qif",
    "expand_design",
    "extended_score",
    "fit_to_dict",
    "format_summary",
    "gen_covariates",
    "gen_response",
    "gen_truth",
    "grid_cells",
    "grid_tune",
    "group_norm",
    "haplotype_frequencies",
    "hardy_weinberg_probs",
    "init_lasso",
    "marginal_screen",
    "mcp",
    "mcp_deriv",
    "newton_fit",
    "penalty_value",
    "predict_mse",
    "qif_derivatives",
    "qif_objective",
    "read_dataset_csv",
    "read_fit_json",
    "read_truth_json",
    "replicate_seed",
    "run_experiment",
    "run_replicate",
    "simulate_scenario",
    "simulate_validation",
    "subject_folds",
    "subset_subjects",
    "summarize",
    "threshold_select",
    "tpfp",
    "true_correlation",
    "validate_dataset",
    "write_dataset_csv",
    "write_fit_json",
    "write_truth_json",
]
