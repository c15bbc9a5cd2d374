"""Trace-driven checker for the block-memory write-protection rule.

A write is blocked (hardware would reset) when it targets the protected
block-memory region and does not originate from trusted code:

    (pc not in TCB  and  w_en  and  d_addr in BlockMem)
    or (dma_en and dma_addr in BlockMem)

DMA writes into the region are blocked unconditionally; reads never
trigger a reset.  Region bounds are closed intervals, matching hardware
comparators.  The checker is advisory: it reports verdicts and never
halts anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple


class Access(str, Enum):
    ALLOW = "allow"
    RESET = "reset"


class Region(NamedTuple):
    lo: int
    hi: int

    def contains(self, addr: int) -> bool:
        return self.lo <= addr <= self.hi


@dataclass(frozen=True)
class RegionMap:
    tcb: Region
    blockmem: Region

    def __post_init__(self) -> None:
        for name, region in (("tcb", self.tcb), ("blockmem", self.blockmem)):
            if region.lo > region.hi:
                raise ValueError(f"{name} region is empty: {region}")


@dataclass(frozen=True)
class AccessEvent:
    pc: int
    w_en: bool = False
    d_addr: int | None = None
    dma_en: bool = False
    dma_addr: int | None = None

    def __post_init__(self) -> None:
        if self.w_en != (self.d_addr is not None):
            raise ValueError("d_addr must be present exactly when w_en is set")
        if self.dma_en != (self.dma_addr is not None):
            raise ValueError("dma_addr must be present exactly when dma_en is set")


def check_access(event: AccessEvent, regions: RegionMap) -> Access:
    cpu_violation = (
        not regions.tcb.contains(event.pc)
        and event.w_en
        and regions.blockmem.contains(event.d_addr)
    )
    dma_violation = event.dma_en and regions.blockmem.contains(event.dma_addr)
    return Access.RESET if cpu_violation or dma_violation else Access.ALLOW


def run_monitor(events: Iterable[AccessEvent], regions: RegionMap) -> int | None:
    """Index of the first event that triggers a reset, or None if all pass."""
    for i, event in enumerate(events):
        if check_access(event, regions) is Access.RESET:
            return i
    return None
