"""Quantum walks on engineered spin chains: packet preparation by a linear
field on a perfect-state-transfer slide, and gate widgets probed by scattering.
"""

from .jacobi import JacobiChain, Spectrum, build_chain, eigendecompose, hp_chain
from .analytic import (
    AmplitudeResult,
    GaussianPacket,
    KrawtchoukContext,
    amplitude,
    gaussian_packet,
    gaussian_transmission,
    krawtchouk,
    momentum_theta,
    p_of_a,
    transmission_b,
    weight,
)
from .assembly import WalkGraph, Widget, build_gate_circuit, load_widget, shipped_widget
from .propagate import PacketState, Schedule, evolve, make_switch_schedule
from .scatter import ScatterSolution, solve_plane_wave, sweep_k
from .analysis import (
    GateRunReport,
    MomentumSpectrum,
    gate_report,
    momentum_spectrum,
    packet_stats,
    tune_switch_time,
)

__version__ = "0.1.0"
