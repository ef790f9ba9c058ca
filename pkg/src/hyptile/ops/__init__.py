"""Operators on Lipschitz fields over a tiling atlas."""

from .chi import ChiSweep, chi, chi_norm_estimate, cutoff_psi
from .decomposition import (
    TileFunctionSeq,
    compute_S,
    decompose,
    extend_from_tile,
    random_admissible_sequence,
    reconstruct,
)
from .estimate import TileRegion, estimate_lipschitz, estimate_partition_lipschitz
from .fields import ScalarField
from .partition import NetFunction, PartitionOfUnity, extend_from_net, partition_of_unity
from .retract import extend_from_retract

__all__ = [
    "ChiSweep",
    "NetFunction",
    "PartitionOfUnity",
    "ScalarField",
    "TileFunctionSeq",
    "TileRegion",
    "chi",
    "chi_norm_estimate",
    "compute_S",
    "cutoff_psi",
    "decompose",
    "estimate_lipschitz",
    "estimate_partition_lipschitz",
    "extend_from_net",
    "extend_from_retract",
    "extend_from_tile",
    "partition_of_unity",
    "random_admissible_sequence",
    "reconstruct",
]
