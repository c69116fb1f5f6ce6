"""Money transport on directed inter-firm networks.

Modules: ``graph`` (storage, ingestion, SCCs), ``shuffle`` (edge-swap
null model), ``synth`` (synthetic scale-free digraphs), ``transport``
(Model-1/Model-2 dynamics), ``stats`` (tail fits and binned curves),
``experiments`` (named presets) and ``cli``.
"""
from .graph import DirectedGraph, IngestError, largest_scc, load_edge_list, write_edge_list
from .shuffle import ShuffleConfig, SwapReport, degree_preserving_shuffle
from .synth import SynthConfig, generate
from .transport import (Mode, ModelKind, PreconditionError, TransportConfig, build_kernel,
                        calibrate_injection, estimate_spectral_radius, run_to_steady, step)

__version__ = "0.1.0"

__all__ = [
    "DirectedGraph", "IngestError", "largest_scc", "load_edge_list", "write_edge_list",
    "ShuffleConfig", "SwapReport", "degree_preserving_shuffle",
    "SynthConfig", "generate",
    "Mode", "ModelKind", "PreconditionError", "TransportConfig", "build_kernel",
    "calibrate_injection", "estimate_spectral_radius", "run_to_steady", "step",
]
