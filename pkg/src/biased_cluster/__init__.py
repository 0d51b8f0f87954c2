"""Monte Carlo threshold lab for a repetition code concatenated with the
topological cluster state under dephasing-biased noise."""

from .decoder import MatchingDecoder, decode, decode_reference, min_weight_perfect_matching
from .lattice import build_lattice, build_prep_schedule, extract_syndrome, logical_failure, run_preparation
from .noise import NoiseModel
from .pauli_core import PauliFrame, apply_cz, apply_pauli, measure_x_flip, new_frame
from .rep_code import encoded_cz_schedule, majority_vote, posterior_flip_prob

__version__ = "0.1.0"
