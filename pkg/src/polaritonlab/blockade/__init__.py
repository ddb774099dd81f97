"""Pulsed Kerr-oscillator model of the polariton blockade."""
from .extraction import (ExtractionReport, blockade_density, blockade_radius, build_report,
                         exciton_constant, extract_interaction, full_blockade_condition)
from .model import (BlockadeParams, BlockadeRun, PulseShape, evolve, flat_top_pulse,
                    gaussian_pulse, pulse_integrated_g2, simulate_g2, steady_state_g2, two_time_g2)
from .sweep import KappaCalibration, SweepCurve, calibrate_kappa, detuning_sweep, find_dip
