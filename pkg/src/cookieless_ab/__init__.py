"""Privacy-preserving cross-site A/B testing toolkit.

Design two-site experiments that need no shared per-user state, correct
the treatment-effect bias that cross-site exposure induces, and measure
everything against known ground truth in simulation.
"""

__version__ = "0.1.0"

from .core import (
    EPS_ALPHA,
    EXPOSURE_PAIRS,
    CellSummary,
    Cluster,
    ConfidenceInterval,
    DesignConfig,
    EffectEstimate,
    EstimatorMethod,
    PotentialOutcomeProfile,
    Site1Treatment,
    Site2Exposure,
    TreatmentExposure,
    UserRecord,
    expected_observed_mean,
    resolve_observed_outcome,
    true_te,
)
from .errors import (
    ConfigError,
    CookielessError,
    EmptyCellError,
    EstimationError,
    MissingBoundsError,
    NoContrastError,
    UnderdeterminedError,
    ValidationError,
)
from .estimators import (
    CellQuartet,
    VarianceBound,
    corrected_cate,
    corrected_te,
    corrected_weights,
    covariate_adjusted_ate,
    hoeffding_ci,
    naive_adjusted_ate,
    naive_ate,
    quartets_by_bin,
    summarize_cells,
    variance_bound,
    variance_multiplier,
)
from .logs import (
    LogRecord,
    RowIssue,
    ingest_log,
    make_keyed_log,
    records_to_site1_log,
    resample_scenario,
    write_records_csv,
    write_site1_csv,
)
from .randomization import (
    AllocationTable,
    Site1Log,
    allocate_treatment,
    assign_macrocluster,
    cluster_bits_for_uids,
    cluster_hash,
    expose_population,
    substream,
)
from .regression import RegressionDataset, RegressionFit, ols_fit
from .runconfig import RunConfig, load_run_config, parse_run_config
from .simulator import (
    DEFAULT_METHODS,
    Population,
    ReplicationSummary,
    SweepResult,
    SyntheticSpec,
    generate_population,
    replicate,
    run_replication,
    sweep,
)
