"""Desk-scale workbench for IRS-assisted mmWave MIMO-OFDM cascaded channel estimation."""

from .channel import (
    AngleSpec,
    ChannelRealization,
    PathSet,
    SystemConfig,
    cascaded_channel,
    draw_realization,
    freq_response_g,
    freq_response_hr,
    sample_cdl_params,
    ula_response,
    upa_response,
)
from .config import ConfigError, ExperimentConfig, load_config
from .estimation import RxBlock, augment_zeros, ls_estimate, nmse, nmse_batch, synthesize_rx
from .gradcheck import grad_check
from .network import MbaModel
from .optim import Adam, AdamState, LrSchedule, adam_step
from .pilots import (
    ActivationPattern,
    PhaseMatrix,
    dft_matrix,
    hadamard_matrix,
    ls_mse_objective,
    make_pattern,
    quantize_phases,
    random_unimodular,
    reduce_psi,
)
from .tensor import Tensor, no_grad
from .training import GainReport, gain_report, train_stage, train_two_stage

__version__ = "0.1.0"
