"""Lossless XOR-network encryption of pruned, quantized weight bit-planes."""

from .codec import (
    EncodedWord,
    MaskedWord,
    XorNetwork,
    decode_word,
    encode_word,
    encode_word_exhaustive,
    make_network,
)
from .errors import CodecError, ConfigError, CorruptStreamError, RejectedInputError
from .gf2 import BitMatrix, BitVector, RrefState, matvec, rref_append, solve
from .tensor import (
    CompressedTensor,
    CompressionStats,
    QuantizedMatrix,
    assign_block_widths,
    compression_stats,
    decode_tensor,
    deserialize,
    encode_tensor,
    serialize,
    slice_words,
)

__all__ = [
    "BitMatrix",
    "BitVector",
    "CodecError",
    "CompressedTensor",
    "CompressionStats",
    "ConfigError",
    "CorruptStreamError",
    "EncodedWord",
    "MaskedWord",
    "QuantizedMatrix",
    "RejectedInputError",
    "RrefState",
    "XorNetwork",
    "assign_block_widths",
    "compression_stats",
    "decode_tensor",
    "decode_word",
    "deserialize",
    "encode_tensor",
    "encode_word",
    "encode_word_exhaustive",
    "make_network",
    "matvec",
    "rref_append",
    "serialize",
    "slice_words",
    "solve",
]
