"""Blind gradient-based adaptive receive beamforming and its baselines."""

from .array import (ArrayGeometry, CarrierSpec, ImperfectionSpec, element_delays,
                    imperfect_steering_vector, make_uca, make_ula, steering_vector)
from .baselines import (CmaConfig, CovarianceEstimate, cma_step, music_spectrum, music_weights,
                        oracle_weights, sample_covariance)
from .errors import ConfigError, DimensionMismatch
from .gbf import (BeamformerState, GbfConfig, WeightVector, beamform_output, estimate_power,
                  init_weights, power_gradient, process_frame, update_weights)
from .metrics import (Algorithm, TrialRecord, average_normalized_power, beam_pattern,
                      convergence_frames, normalized_power)
from .signals import (NoiseSpec, SnapshotFrame, WaveformConfig, gen_qpsk, pulse_shape,
                      random_walk_aoa, synth_frame)

__version__ = "0.1.0"
