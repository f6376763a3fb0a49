"""CP-OFDM based OTFS transceiver simulation with the Doppler squint effect."""

from .channel import (
    EXACT,
    IGNORANT,
    ChannelRealization,
    PathParams,
    add_awgn,
    build_matrix,
    dse_tap,
    jakes_draw,
    oracle_receive,
)
from .config import FrameConfig, k_of_nu, load_config, nu_max, validate_config
from .equalizer import dd_demod, detect_frame, lmmse_equalize
from .estimator import DSE_AWARE, DSE_IGNORANT, EstimatedCSI, estimate_channel, reconstruct
from .harness import ExperimentSpec, ResultRow, ber, emit_csv, nmse, run_experiment

__version__ = "0.1.0"
