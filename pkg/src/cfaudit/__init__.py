"""Control-flow log compression, authenticated evidence streaming, and
trace verification toolkit.

The prover side compresses a stream of control-flow transfers online by
replacing occurrences of pre-installed expected sub-paths with one-word
symbols (coalescing adjacent repeats into symbol + count) and transmits
the result as fixed-size, individually MAC'd slices.  The verifier side
defines the sub-path set, authenticates and orders incoming slices,
losslessly reconstructs the raw trace, and checks it against a CFG.
"""

from .codec import (
    blockmem_block_bytes,
    deserialize_blockmem,
    deserialize_log,
    encode_raw,
    parse_spec_document,
    serialize_blockmem,
    serialize_log,
    write_spec_document,
)
from .engine import Engine, compress_trace, expand, slice_compress
from .errors import AuditError
from .model import (
    BlockMemImage,
    EngineConfig,
    Log,
    LogFormat,
    Mode,
    RawDest,
    RawPair,
    RepeatCount,
    SubPathSpec,
    Symbol,
    Transfer,
)
from .oracle import oracle_compress, oracle_slice_compress

__version__ = "0.1.0"

__all__ = [
    "AuditError",
    "BlockMemImage",
    "Engine",
    "EngineConfig",
    "Log",
    "LogFormat",
    "Mode",
    "RawDest",
    "RawPair",
    "RepeatCount",
    "SubPathSpec",
    "Symbol",
    "Transfer",
    "blockmem_block_bytes",
    "compress_trace",
    "deserialize_blockmem",
    "deserialize_log",
    "encode_raw",
    "expand",
    "oracle_compress",
    "oracle_slice_compress",
    "parse_spec_document",
    "serialize_blockmem",
    "serialize_log",
    "slice_compress",
    "write_spec_document",
    "__version__",
]
