"""Hybrid beamforming with phase over-samplers and switch networks (POS-SW) for mmWave MIMO."""
from .channel import (ArrayGeometry, ChannelConfig, ChannelRealization, Path, array_response,
                      channel_from_paths, sample_channel, trial_rng)
from .beamforming import (AnalogBeamformer, DigitalBeamformer, HybridBeamformer, PhaseAlphabet,
                          binary_rank1_design, design_hybrid, exhaustive_analog_search,
                          pe_altmin, phase_matching, quantize_phases, realize, svd_full_digital)
from .metrics import (Architecture, PowerModel, beam_pattern, energy_efficiency,
                      spectral_efficiency, total_power)
from .estimation import (AngleDictionary, SparseEstimate, TrainingDesign, build_sensing_matrix,
                         estimate_channel, generate_training, measure, mutual_coherence, nmse, omp)
from .errors import ConfigError, NumericalError

__version__ = "0.1.0"
