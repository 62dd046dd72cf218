"""Photon statistics of conditional photon subtraction from thermal light."""

__version__ = "0.1.0"

from .cps import (
    CpsResult,
    cps_detected,
    cps_fano_closed,
    cps_mean_closed,
    cps_nong_bound,
    cps_photon_state,
    cps_sweep,
    thermal_setup,
)
from .errors import (
    CalibrationError,
    ConditioningError,
    DomainError,
    EmptySelectionError,
    PhotsubError,
    SaturationError,
    ShotFileError,
    UndefinedStatisticError,
)
from .fock import (
    DiagonalState,
    fano,
    fidelity,
    mean,
    shannon_entropy,
    thermal_cutoff,
    thermal_entropy,
    thermal_state,
    variance,
)
from .ips import (
    GaussianState,
    IpsResult,
    bs_symplectic,
    ips_click_probability,
    ips_state,
    ips_state_fock_oracle,
    wigner_ips_grid,
)
from .lab import (
    Condition,
    DetectorModel,
    ExperimentConfig,
    ShotRecord,
    calibrate_gamma,
    condition_records,
    rebin_voltages,
    run_experiment,
    simulate,
)
from .nongauss import NongReport, nong_delta, nong_eps, verify_monotonicity
from .photon_ops import (
    JointDistribution,
    bernoulli_weight,
    joint_general,
    joint_thermal,
    joint_thermal_table,
    lossy_channel,
    split_weight,
)
