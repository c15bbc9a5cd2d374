"""Core domain types: transfers, log elements, sub-path specs, engine config.

The packed ("memory image") log format stores one little-endian word per
element, so the three word classes must occupy disjoint numeric ranges:

* symbol ids live in 1..255,
* code addresses start at ``min_code_addr`` (which must be above 255),
* repeat counters carry the top bit of the word as a tag, reserving the
  upper half of the address space.

Every address accepted by the compressor therefore lies in the half-open
interval ``[min_code_addr, 1 << (addr_width - 1))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence, Union

from .errors import (
    AddressOutOfRange,
    DuplicateId,
    LenOverflow,
    ModeMismatch,
    TooManySpecs,
)

MAX_SYMBOL_ID = 255
MIN_REPEAT_COUNT = 2
MAX_REPEAT_COUNT = 32767
MAX_SPEC_LEN = 255


class Mode(str, Enum):
    """What the matcher compares: full (src, dest) pairs or destinations only."""

    PAIR = "pair"
    DEST = "dest"


class LogFormat(str, Enum):
    """Serialized log layouts: packed words, or tag-byte-prefixed elements."""

    MEMORY_IMAGE = "image"
    PORTABLE_TAGGED = "tagged"


class Transfer(NamedTuple):
    """One control-flow transfer; ``src`` may be None in dest-only data."""

    src: int | None
    dest: int


class RawPair(NamedTuple):
    src: int
    dest: int


class RawDest(NamedTuple):
    dest: int


@dataclass(frozen=True, slots=True)
class Symbol:
    """One-word stand-in for a full occurrence of an installed sub-path."""

    id: int


@dataclass(frozen=True, slots=True)
class RepeatCount:
    """Consecutive-occurrence counter; valid only directly after a Symbol."""

    count: int


LogElement = Union[RawPair, RawDest, Symbol, RepeatCount]


@dataclass(frozen=True)
class EngineConfig:
    mode: Mode = Mode.PAIR
    addr_width: int = 16
    min_code_addr: int = 0x0400
    max_sub_paths: int = 8
    slice_size_bytes: int = 256
    retry_on_mismatch: bool = False

    def __post_init__(self) -> None:
        if self.addr_width not in (16, 32):
            raise ValueError(f"addr_width must be 16 or 32, got {self.addr_width}")
        if not isinstance(self.mode, Mode):
            object.__setattr__(self, "mode", Mode(self.mode))
        if not 1 <= self.max_sub_paths <= 8:
            raise ValueError("max_sub_paths must be in 1..8")
        if self.slice_size_bytes <= 0:
            raise ValueError("slice_size_bytes must be positive")
        if not MAX_SYMBOL_ID < self.min_code_addr < self.counter_tag:
            raise ValueError(
                "min_code_addr must be above the symbol id range and below "
                "the counter tag bit"
            )

    @property
    def word_bytes(self) -> int:
        return self.addr_width // 8

    @property
    def counter_tag(self) -> int:
        """Word bit that marks a repeat counter; also the address upper bound."""
        return 1 << (self.addr_width - 1)

    @property
    def raw_element_bytes(self) -> int:
        """Encoded size of one raw trace element under this config."""
        n = 2 if self.mode is Mode.PAIR else 1
        return n * self.word_bytes


def check_address(value: int, config: EngineConfig) -> int:
    if not config.min_code_addr <= value < config.counter_tag:
        raise AddressOutOfRange(
            f"address {value:#x} outside [{config.min_code_addr:#x}, "
            f"{config.counter_tag:#x})"
        )
    return value


def element_words(element: LogElement) -> int:
    return 2 if isinstance(element, RawPair) else 1


def log_size_bytes(elements: Iterable[LogElement], config: EngineConfig) -> int:
    return sum(element_words(e) for e in elements) * config.word_bytes


@dataclass(frozen=True)
class Log:
    """An ordered element sequence plus its encoded size in bytes."""

    elements: tuple[LogElement, ...]
    size_bytes: int

    def is_raw(self) -> bool:
        return all(isinstance(e, (RawPair, RawDest)) for e in self.elements)


def make_log(elements: Iterable[LogElement], config: EngineConfig) -> Log:
    elems = tuple(elements)
    return Log(elems, log_size_bytes(elems, config))


def raw_transfers(log: Log) -> list[Transfer]:
    """Transfers of a raw-only log; rejects compressed elements."""
    out: list[Transfer] = []
    for e in log.elements:
        if isinstance(e, RawPair):
            out.append(Transfer(e.src, e.dest))
        elif isinstance(e, RawDest):
            out.append(Transfer(None, e.dest))
        else:
            raise ValueError(f"log is not raw: contains {e!r}")
    return out


@dataclass(frozen=True)
class SubPathSpec:
    """A verifier-defined expected sub-path: an id plus 1..255 entries.

    Entries are Transfer tuples in pair mode or bare destination addresses
    in dest mode; the two kinds never mix within one spec.
    """

    id: int
    entries: tuple

    def __post_init__(self) -> None:
        if not 1 <= self.id <= MAX_SYMBOL_ID:
            raise ValueError(f"spec id must be in 1..{MAX_SYMBOL_ID}, got {self.id}")
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("spec entries must be non-empty")
        if len(entries) > MAX_SPEC_LEN:
            raise LenOverflow(f"spec has {len(entries)} entries, max {MAX_SPEC_LEN}")
        if all(isinstance(e, int) for e in entries):
            pass  # dest mode
        else:
            norm = []
            for e in entries:
                try:
                    src, dest = e
                except (TypeError, ValueError):
                    raise ValueError(f"bad spec entry {e!r}") from None
                if src is None:
                    raise ValueError("pair-mode spec entries need a source address")
                norm.append(Transfer(int(src), int(dest)))
            entries = tuple(norm)
        object.__setattr__(self, "entries", entries)

    @property
    def length(self) -> int:
        return len(self.entries)

    @property
    def mode(self) -> Mode:
        return Mode.DEST if isinstance(self.entries[0], int) else Mode.PAIR


@dataclass(frozen=True)
class BlockMemImage:
    """Serialized block memory holding the installed spec set."""

    data: bytes
    capacity_bytes: int

    def __post_init__(self) -> None:
        if len(self.data) > self.capacity_bytes:
            from .errors import CapacityExceeded

            raise CapacityExceeded(
                f"{len(self.data)} bytes exceed capacity {self.capacity_bytes}"
            )


def validate_spec_set(specs: Sequence[SubPathSpec], config: EngineConfig) -> None:
    """Shared install-time checks: count, mode agreement, unique ids, addresses."""
    if len(specs) > config.max_sub_paths:
        raise TooManySpecs(f"{len(specs)} specs, engine supports {config.max_sub_paths}")
    seen: set[int] = set()
    for spec in specs:
        if spec.id in seen:
            raise DuplicateId(f"spec id {spec.id} appears twice")
        seen.add(spec.id)
        if spec.mode is not config.mode:
            raise ModeMismatch(
                f"spec {spec.id} is {spec.mode.value}-mode, engine is {config.mode.value}"
            )
        for e in spec.entries:
            if isinstance(e, int):
                check_address(e, config)
            else:
                check_address(e.src, config)
                check_address(e.dest, config)
