"""Training-free massive MIMO detection by annealed Langevin posterior sampling."""
from .baselines import detect_ml, detect_mmse, detect_zf
from .channel import (
    ChannelParams,
    ChannelRealization,
    exp_corr_matrix,
    precompute_spectral,
    sample_kronecker,
    sample_noise,
    sigma0_sq_from_snr,
    to_real_model,
)
from .constellation import Constellation, count_symbol_errors, make_qam, quantize
from .detector import (
    AnnealingSchedule,
    DetectionResult,
    DivergenceError,
    LangevinConfig,
    detect,
    make_schedule,
    run_trajectory,
    step_size_diag,
)
from .estimators import LangevinDetector, MLDetector, MMSEDetector, ZeroForcingDetector
from .harness import SweepConfig, SerReport, emit_csv, parse_config, run_sweep

__version__ = "0.1.0"
