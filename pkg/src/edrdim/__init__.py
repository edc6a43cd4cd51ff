"""Dimension tests for effective dimension reduction spaces.

Estimates how many linear projections of a functional or high-dimensional
predictor carry the regression information, via sequential chi-square,
adjusted chi-square and adaptive Neyman tests on the between-slice
covariance of standardized principal-component scores.
"""

from .dimtest import (
    DimensionConfig,
    DimensionEstimate,
    NeymanCriticalTable,
    NeymanStatistic,
    TestResult,
    adjusted_chi2_statistic,
    adjusted_chi2_test,
    chi2_statistic,
    chi2_test,
    degrees_of_freedom,
    estimate_dimension,
    neyman_statistic,
    neyman_test,
    sequential_dimension_test,
    simulate_neyman_critical,
    slice_scale_factors,
)
from .errors import (
    DegenerateError,
    DomainError,
    EdrdimError,
    GridError,
    NumericalError,
    ParseError,
    RankError,
    ShapeError,
    SliceError,
)
from .fdata import (
    CurveSet,
    Grid,
    MultivariateSet,
    ResponseVector,
    inner_product,
    load_curves,
    load_multivariate,
    save_curves,
)
from .fpca import (
    EigenSystem,
    ScoreMatrix,
    eigensystem,
    pc_scores,
    sample_mean,
    usable_rank,
)
from .simlab import (
    McReport,
    ModelSpec,
    ProcessSpec,
    ProfileRow,
    Prop1Report,
    TableSetting,
    beta_curves,
    generate_functional,
    generate_model5,
    proposition1_check,
    run_table,
    statistic_profile,
    statistic_sample,
    table_settings,
)
from .sir import (
    SirModel,
    SlicePartition,
    build_sir,
    estimate_edr_directions,
    make_slices,
)

__version__ = "0.1.0"
