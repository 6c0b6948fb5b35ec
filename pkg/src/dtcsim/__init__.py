"""Bit-accurate simulator of a transceiver-based digital-to-time converter."""

__version__ = "0.1.0"

from .analyzer import (IntervalMeasurement, JitterModel, LinearityReport, PulseTrain,
                       decode_intervals, interval_statistics, sequence_period_check,
                       sweep_linearity, synthesize, uniformity_test)
from .encoder import (EncoderState, FrameEncoder, ParameterExhausted, TimingParameter,
                      encode_frame, encode_stream, encoder_new)
from .lfsr import Lfsr, LfsrBank, bank_sample, combined_period, lfsr_step, random_parameters
from .sequence import (CodeMapping, ParameterLut, PhaseAccumulator, accumulator_step,
                       generate_fixed, generate_sequence, load_lut, sequence_length)
from .serdes import Bitstream, LineConfig, edge_times, read_bitstream, serialize, write_bitstream
