"""echotag: decoding passive ultrasonic reflector constellations.

The package covers the full chain: array geometry and steering vectors,
FM-sweep synthesis and matched filtering, multichannel echo simulation,
frequency-domain beamforming with null-steering, gammatone cochleograms,
a from-scratch CNN engine, and dataset/training/evaluation orchestration
behind a scikit-learn style estimator API and a CLI.
"""

from .array import (
    SPEED_OF_SOUND,
    ArrayGeometry,
    Direction,
    build_irregular_geometry,
    load_geometry,
    save_geometry,
    steering_vector,
    unit_propagation_vector,
)
from .beamform import beam_pattern, beamform, constraint_matrix, null_steered_weights, projection_matrix
from .cochlea import Cochleogram, FilterbankSpec, erb_center_frequencies, gammatone_filterbank, to_cochleogram
from .estimators import CnnClassifier, CochleogramFrontEnd
from .simulate import (
    MultiChannelRecording,
    Reflector,
    Scene,
    constellation_layout,
    plane_wave_recording,
    reflector_direction,
    reflector_frequency_response,
    synthesize_scene,
)
from .waveform import Signal, WaveformSpec, fm_sweep, matched_filter

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "CnnClassifier",
    "CochleogramFrontEnd",
    "Cochleogram",
    "Direction",
    "FilterbankSpec",
    "MultiChannelRecording",
    "Reflector",
    "SPEED_OF_SOUND",
    "Scene",
    "Signal",
    "WaveformSpec",
    "beam_pattern",
    "beamform",
    "build_irregular_geometry",
    "constellation_layout",
    "constraint_matrix",
    "erb_center_frequencies",
    "fm_sweep",
    "gammatone_filterbank",
    "load_geometry",
    "matched_filter",
    "null_steered_weights",
    "plane_wave_recording",
    "projection_matrix",
    "reflector_direction",
    "reflector_frequency_response",
    "save_geometry",
    "steering_vector",
    "synthesize_scene",
    "to_cochleogram",
    "unit_propagation_vector",
    "__version__",
]
