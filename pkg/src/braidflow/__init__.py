"""Braids realized as time-periodic Hamiltonian flows on the annulus."""

from .analysis import burau_matrix, entropy_estimate, poincare_map
from .braid_algebra import (
    BraidWord,
    brute_force_equal,
    format_word,
    left_normal_form,
    parse_word,
    random_word,
    words_equal,
)
from .extraction import verify_braid
from .generating_function import GeneratorShape, certify_rho, certify_twist, g_eval
from .synthesis import WarpSpec, build_schedule, make_layout
from .twist_map import Annulus, MapPoint, half_twist_map, map_backward, map_forward

__version__ = "0.1.0"

__all__ = [
    "Annulus", "BraidWord", "GeneratorShape", "MapPoint", "WarpSpec",
    "brute_force_equal", "build_schedule", "burau_matrix", "certify_rho", "certify_twist",
    "entropy_estimate", "format_word", "g_eval", "half_twist_map", "left_normal_form",
    "make_layout", "map_backward", "map_forward", "parse_word", "poincare_map",
    "random_word", "verify_braid", "words_equal",
]
