"""Text document formats: trace files, access-event files, key files.

Trace document::

    mode pair
    width 16
    0400 0500
    0500 0600

Dest-mode records carry a single destination address per line.  Blank
lines and ``#`` comments are ignored everywhere.

Access-event document, one event per line::

    <pc_hex> [w=<d_addr_hex>] [dma=<dma_addr_hex>]

Key files hold either 32 raw bytes or 64 hex characters.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .errors import ParseError
from .model import Mode, Transfer
from .monitor import AccessEvent

KEY_BYTES = 32


def write_trace_document(trace: Sequence[Transfer], mode: Mode, addr_width: int) -> str:
    lines = [f"mode {mode.value}", f"width {addr_width}"]
    if mode is Mode.PAIR:
        for t in trace:
            lines.append(f"{t.src:04x} {t.dest:04x}")
    else:
        for t in trace:
            lines.append(f"{t.dest:04x}")
    return "\n".join(lines) + "\n"


def parse_trace_document(text: str) -> tuple[Mode, int, list[Transfer]]:
    mode: Mode | None = None
    width: int | None = None
    trace: list[Transfer] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "mode":
            try:
                mode = Mode(tokens[1])
            except (IndexError, ValueError):
                raise ParseError(lineno, f"bad mode line {line!r}") from None
            continue
        if tokens[0] == "width":
            try:
                width = int(tokens[1])
            except (IndexError, ValueError):
                raise ParseError(lineno, f"bad width line {line!r}") from None
            if width not in (16, 32):
                raise ParseError(lineno, "width must be 16 or 32")
            continue
        if mode is None or width is None:
            raise ParseError(lineno, "records before mode/width header")
        try:
            vals = [int(t, 16) for t in tokens]
        except ValueError:
            raise ParseError(lineno, f"bad hex record {line!r}") from None
        if mode is Mode.PAIR:
            if len(vals) != 2:
                raise ParseError(lineno, "pair-mode records need two addresses")
            trace.append(Transfer(vals[0], vals[1]))
        else:
            if len(vals) != 1:
                raise ParseError(lineno, "dest-mode records need one address")
            trace.append(Transfer(None, vals[0]))
    if mode is None or width is None:
        raise ParseError(1, "missing mode/width header")
    return mode, width, trace


def write_event_document(events: Sequence[AccessEvent]) -> str:
    lines = []
    for e in events:
        parts = [f"{e.pc:04x}"]
        if e.w_en:
            parts.append(f"w={e.d_addr:04x}")
        if e.dma_en:
            parts.append(f"dma={e.dma_addr:04x}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_event_document(text: str) -> list[AccessEvent]:
    events: list[AccessEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            pc = int(tokens[0], 16)
        except ValueError:
            raise ParseError(lineno, f"bad pc {tokens[0]!r}") from None
        d_addr = dma_addr = None
        for tok in tokens[1:]:
            if tok.startswith("w="):
                d_addr = _hex_field(tok[2:], lineno)
            elif tok.startswith("dma="):
                dma_addr = _hex_field(tok[4:], lineno)
            else:
                raise ParseError(lineno, f"unknown field {tok!r}")
        events.append(
            AccessEvent(
                pc=pc,
                w_en=d_addr is not None,
                d_addr=d_addr,
                dma_en=dma_addr is not None,
                dma_addr=dma_addr,
            )
        )
    return events


def _hex_field(text: str, lineno: int) -> int:
    try:
        return int(text, 16)
    except ValueError:
        raise ParseError(lineno, f"bad hex value {text!r}") from None


def load_key(path: str | Path) -> bytes:
    data = Path(path).read_bytes()
    if len(data) == KEY_BYTES:
        return data
    text = data.decode("ascii", errors="strict").strip()
    key = bytes.fromhex(text)
    if len(key) != KEY_BYTES:
        raise ValueError(f"key must be {KEY_BYTES} bytes, got {len(key)}")
    return key


def save_key(path: str | Path, key: bytes) -> None:
    if len(key) != KEY_BYTES:
        raise ValueError(f"key must be {KEY_BYTES} bytes")
    Path(path).write_text(key.hex() + "\n")
