"""Joint design of hybrid multi-group multicast precoders and receive combiners
by alternating semidefinite relaxation."""

from .algorithm import LoopConfig, RunResult, accept, default_beta, run_digital, run_hybrid
from .channel import ArrayGeometry, AngleProfile, ChannelSet, array_response, sample_channel
from .conic import SdpProblem, SdpSolution, solve
from .precoding import AnalogPrecoder, GroupAssignment, PhaseAlphabet, QosTargets

__version__ = "0.1.0"

__all__ = [
    "AnalogPrecoder",
    "AngleProfile",
    "ArrayGeometry",
    "ChannelSet",
    "GroupAssignment",
    "LoopConfig",
    "PhaseAlphabet",
    "QosTargets",
    "RunResult",
    "SdpProblem",
    "SdpSolution",
    "accept",
    "array_response",
    "default_beta",
    "run_digital",
    "run_hybrid",
    "sample_channel",
    "solve",
]
