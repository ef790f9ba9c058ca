"""Right-angled hyperbolic tilings {p,4} and Lipschitz function decompositions over them."""

from .errors import (
    BoundaryTruncationError,
    HypTileError,
    InvalidArgument,
    NumericalDomainError,
    OutOfAtlasError,
    OutOfCoreError,
    ResourceLimitError,
)
from .hyperbolic import ConvexPolytope, Hyperplane, LorentzIsometry
from .tiling import PolytopeTemplate, Tile, TilingAtlas, build_template, enumerate_tiling, locate_tile

__version__ = "0.1.0"

__all__ = [
    "BoundaryTruncationError",
    "ConvexPolytope",
    "HypTileError",
    "Hyperplane",
    "InvalidArgument",
    "LorentzIsometry",
    "NumericalDomainError",
    "OutOfAtlasError",
    "OutOfCoreError",
    "PolytopeTemplate",
    "ResourceLimitError",
    "Tile",
    "TilingAtlas",
    "build_template",
    "enumerate_tiling",
    "locate_tile",
]
