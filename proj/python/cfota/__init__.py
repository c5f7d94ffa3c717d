"""Cell-free massive MIMO uplink simulator with an over-the-air fronthaul."""

from ._core import (
    ExperimentResult,
    ParseError,
    SingularMatrixError,
    SystemConfig,
    ValidationError,
    chunk,
    config_from_json,
    expected_precoder_gram,
    ldpc,
    lmmse_detect,
    load_config,
    ls_detect,
    measure_fronthaul_power,
    ml_detect,
    pack_upper,
    phase_energy,
    run_coded_ber,
    run_nmse,
    run_ser,
    run_ser_vs_pmax,
    scale_factor,
    soft_llrs,
    validate_moments,
    zf_precoder,
)

__version__ = "0.1.0"
