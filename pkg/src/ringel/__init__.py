"""Constructive machinery for rainbow tree embeddings in K_{2n+1}.

The package builds distance colourings of odd complete graphs, embeds
trees so that every edge colour is distinct, switches colours along
gadget paths, and emits certificates for the resulting cyclic tree
decompositions.
"""

from .ndcolour import (
    Embedding,
    NDColouring,
    colour_of,
    reflect_embedding,
    shift_embedding,
    verify_two_factorization,
)

__all__ = [
    "Embedding",
    "NDColouring",
    "colour_of",
    "reflect_embedding",
    "shift_embedding",
    "verify_two_factorization",
]

__version__ = "0.1.0"
