"""Direction sequences, permutations and the named constructions on them."""
from .generators import (
    apply_permutation,
    delete_subsequence,
    gaussian_rationals,
    gen_dense,
    gen_kappa,
    gen_square_net_sequence,
    gen_theta,
    homography,
    interleave,
    reciprocal,
    square_net_level,
    square_net_points,
)
from .permutation import Permutation, from_list, identity, transposition
from .sequence import DirectionSequence, dumps_jsonl, from_points, loads_jsonl, read_jsonl
