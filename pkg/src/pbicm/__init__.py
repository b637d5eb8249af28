"""Parallel bit-interleaved coded modulation toolkit."""

from .channel import (
    Awgn,
    ChannelModel,
    Dmc,
    RayleighCsi,
    Snr,
    awgn_from_snr,
    bsc,
    density,
    load_dmc,
    make_rng,
    rayleigh_from_snr,
    sample,
    save_dmc,
)
from .codec import (
    BinaryCode,
    make_code,
    EquivalenceReport,
    PbicmSimConfig,
    PbicmState,
    SimulationResult,
    apply_dither,
    deinterleave,
    equivalence_test,
    hamming74,
    interleave,
    make_state,
    ml_decode,
    pbicm_receive,
    pbicm_transmit,
    random_codebook,
    remove_dither_llr,
    repetition,
    simulate,
    wilson_ci,
)
from .constellation import KINDS, Constellation, make_constellation, map_bits
from .infotheory import (
    DispersionReport,
    E0Evaluator,
    ExponentCurve,
    QuadratureConvergenceError,
    capacity_cm,
    capacity_pbicm,
    capacity_subchannel,
    critical_rate,
    dispersion_report,
    e0,
    e0_evaluator,
    exponent_curve,
    exponent_gaussian_approx,
    pbicm_exponent,
    qfunc,
    qinv,
    random_coding_exponent,
    rate_bounds,
    sphere_packing_exponent,
)
from .subchannel import (
    LLR_MAX,
    SubchannelView,
    WbarOutput,
    llr_bit,
    llr_matrix,
    llr_wbar,
    subchannel_prob,
    wbar_as_dmc,
    wbar_to_csv,
)

__version__ = "0.1.0"
