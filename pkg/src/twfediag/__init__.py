"""Diagnostics for two-way fixed-effects regressions under heterogeneous effects.

The toolkit computes the exact weights a two-way fixed-effects (or
first-difference) regression attaches to each treated cell's effect,
robustness bounds against effect heterogeneity, and a switcher-based DID
estimator with pre-trend placebos and cluster-bootstrap inference.
"""

from .bootstrap import (
    BootstrapReport,
    DifferenceTest,
    JointTestVerdict,
    cluster_bootstrap,
    joint_assumption_test,
)
from .bounds import (
    RobustnessBounds,
    compute_bounds,
    qp_oracle,
    sigma_lower,
    sigma_lower_lower,
)
from .didm import (
    DidmResult,
    PeriodDid,
    PlaceboResult,
    SwitcherCounts,
    did_m,
    did_m_placebo,
    placebo_subsample,
    switcher_counts,
)
from .errors import (
    AllDrawsDegenerateError,
    CollinearError,
    ConstantCovariateError,
    DegenerateNormalizerError,
    DuplicateUnitError,
    EmptyInputError,
    HorizonTooLargeError,
    InfeasibleError,
    InvalidConfigError,
    MissingCellError,
    MissingColumnError,
    MixedTreatmentInCellError,
    NoNegativeWeightError,
    NonBinaryTreatmentError,
    NoPlaceboSwitchersError,
    NoSwitchersError,
    PanelError,
    PreconditionNotMetError,
    TooFewGroupsError,
    ZeroBetaError,
    ZeroDispersionError,
)
from .io import load_cells, weight_table_to_csv
from .panel import (
    CellTable,
    DesignReport,
    Observation,
    aggregate_cells,
    constant_growth_holds,
    validate_design,
)
from .regression import (
    FdResiduals,
    FeResiduals,
    RegressionEstimate,
    beta_fd,
    beta_fe,
    ols_oracle,
    residualize_fd,
    residualize_fe,
)
from .simulate import (
    DgpConfig,
    EffectProfile,
    MonteCarloSummary,
    PanelDesign,
    draw_cells,
    generate_panel,
    monte_carlo,
    parse_config_file,
    planted_att,
    planted_switcher_effect,
    realize_design,
)
from .weights import (
    MonotonicityViolation,
    WeightEntry,
    WeightSummary,
    WeightTable,
    check_prop1_monotonicity,
    correlate_weights,
    fd_weights,
    fe_weights,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # panel
    "Observation",
    "CellTable",
    "DesignReport",
    "aggregate_cells",
    "validate_design",
    "constant_growth_holds",
    # regression
    "FeResiduals",
    "FdResiduals",
    "RegressionEstimate",
    "residualize_fe",
    "residualize_fd",
    "beta_fe",
    "beta_fd",
    "ols_oracle",
    # weights
    "WeightEntry",
    "WeightSummary",
    "WeightTable",
    "MonotonicityViolation",
    "fe_weights",
    "fd_weights",
    "check_prop1_monotonicity",
    "correlate_weights",
    # bounds
    "RobustnessBounds",
    "sigma_lower",
    "sigma_lower_lower",
    "qp_oracle",
    "compute_bounds",
    # didm
    "SwitcherCounts",
    "PeriodDid",
    "DidmResult",
    "PlaceboResult",
    "switcher_counts",
    "did_m",
    "did_m_placebo",
    "placebo_subsample",
    # bootstrap
    "BootstrapReport",
    "DifferenceTest",
    "JointTestVerdict",
    "cluster_bootstrap",
    "joint_assumption_test",
    # simulation
    "DgpConfig",
    "EffectProfile",
    "PanelDesign",
    "MonteCarloSummary",
    "realize_design",
    "draw_cells",
    "generate_panel",
    "monte_carlo",
    "parse_config_file",
    "planted_att",
    "planted_switcher_effect",
    # io
    "load_cells",
    "weight_table_to_csv",
    # errors
    "PanelError",
    "EmptyInputError",
    "DuplicateUnitError",
    "MissingCellError",
    "MixedTreatmentInCellError",
    "NonBinaryTreatmentError",
    "MissingColumnError",
    "CollinearError",
    "DegenerateNormalizerError",
    "PreconditionNotMetError",
    "ConstantCovariateError",
    "ZeroDispersionError",
    "ZeroBetaError",
    "NoNegativeWeightError",
    "InfeasibleError",
    "NoSwitchersError",
    "NoPlaceboSwitchersError",
    "HorizonTooLargeError",
    "TooFewGroupsError",
    "AllDrawsDegenerateError",
    "InvalidConfigError",
]
