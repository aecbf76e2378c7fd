"""Exact simulation and path analysis of a single-outer-cycle counterfactual
communication protocol."""

from .errors import CfqsimError
from .optics import (
    Absorb,
    Circuit,
    EvolutionTrace,
    Mode,
    Registry,
    Rotation,
    Route,
    StateVector,
    apply_element,
    evolve_backward,
    evolve_forward,
    outcome_distribution,
    sample_outcome,
)
from .protocol import (
    ChannelStats,
    MessageResult,
    ProtocolParams,
    RoundOutcome,
    analytic_round_distribution,
    build_toy_circuit,
    channel_statistics,
    coin_variant_distribution,
    round_distribution,
    run_popescu_no_coin,
    run_round_with_retries,
    send_message_postselected,
    sweep,
)
from .paths import (
    bob_presence_by_weak_trace,
    consistency_report,
    decoherence_functional,
    two_state_trace,
    weak_value_profile,
)

__version__ = "0.1.0"
