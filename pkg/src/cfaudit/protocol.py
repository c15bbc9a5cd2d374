"""Challenge-response protocol: authenticated spec installation, MAC'd
evidence-slice streaming, and verifier-side assembly and validation.

Wire format (little-endian integers, length-prefixed frames on the
channel; every frame ends with a 32-byte HMAC-SHA256 tag):

    request :=  challenge(16) mode(1) width(1) slice_size(4)
                blockmem_len(4) blockmem mac(32)
    slice   :=  seq(4) final(1) payload_len(4) payload
                [image_digest(32) if final] mac(32)

Request MACs cover the whole frame body; slice MACs additionally cover
the session challenge, so evidence produced under one challenge never
verifies in another session.  Slice payloads are memory-image log bytes.
An empty request blockmem means "keep the currently installed specs".
"""

from __future__ import annotations

import hmac
import hashlib
import secrets
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .cfg import CFG
from .codec import deserialize_blockmem, deserialize_log, serialize_blockmem, serialize_log
from .engine import expand, slice_compress
from .errors import (
    AuthError,
    ConfigMismatch,
    MalformedFrame,
    ProtocolError,
)
from .model import (
    EngineConfig,
    Log,
    LogFormat,
    Mode,
    RawDest,
    RawPair,
    SubPathSpec,
    Transfer,
    make_log,
)

CHALLENGE_BYTES = 16
MAC_BYTES = 32
DIGEST_BYTES = 32
ZERO_DIGEST = b"\x00" * DIGEST_BYTES

_REQUEST_DOMAIN = b"\x01"
_SLICE_DOMAIN = b"\x02"


def _mac(key: bytes, domain: bytes, payload: bytes) -> bytes:
    return hmac.new(key, domain + payload, hashlib.sha256).digest()


def new_challenge() -> bytes:
    return secrets.token_bytes(CHALLENGE_BYTES)


@dataclass(frozen=True)
class Request:
    challenge: bytes
    blockmem: bytes
    mode: Mode
    addr_width: int
    slice_size_bytes: int
    mac: bytes

    def body(self) -> bytes:
        return (
            self.challenge
            + bytes([0 if self.mode is Mode.PAIR else 1, self.addr_width])
            + self.slice_size_bytes.to_bytes(4, "little")
            + len(self.blockmem).to_bytes(4, "little")
            + self.blockmem
        )

    def encode(self) -> bytes:
        return self.body() + self.mac

    @classmethod
    def decode(cls, frame: bytes) -> "Request":
        if len(frame) < CHALLENGE_BYTES + 10 + MAC_BYTES:
            raise MalformedFrame("request frame too short")
        challenge = frame[:16]
        mode = Mode.PAIR if frame[16] == 0 else Mode.DEST
        width = frame[17]
        slice_size = int.from_bytes(frame[18:22], "little")
        blob_len = int.from_bytes(frame[22:26], "little")
        if len(frame) != 26 + blob_len + MAC_BYTES:
            raise MalformedFrame("request frame length mismatch")
        blockmem = frame[26 : 26 + blob_len]
        mac = frame[26 + blob_len :]
        return cls(challenge, blockmem, mode, width, slice_size, mac)


@dataclass(frozen=True)
class EvidenceSlice:
    seq: int
    is_final: bool
    payload: bytes
    mac: bytes
    image_digest: bytes | None = None

    def body(self) -> bytes:
        out = (
            self.seq.to_bytes(4, "little")
            + bytes([1 if self.is_final else 0])
            + len(self.payload).to_bytes(4, "little")
            + self.payload
        )
        if self.is_final:
            out += self.image_digest or ZERO_DIGEST
        return out

    def encode(self) -> bytes:
        return self.body() + self.mac

    @classmethod
    def decode(cls, frame: bytes) -> "EvidenceSlice":
        if len(frame) < 9 + MAC_BYTES:
            raise MalformedFrame("slice frame too short")
        seq = int.from_bytes(frame[:4], "little")
        flag = frame[4]
        if flag not in (0, 1):
            raise MalformedFrame("bad final flag")
        is_final = bool(flag)
        payload_len = int.from_bytes(frame[5:9], "little")
        tail = DIGEST_BYTES if is_final else 0
        if len(frame) != 9 + payload_len + tail + MAC_BYTES:
            raise MalformedFrame("slice frame length mismatch")
        payload = frame[9 : 9 + payload_len]
        digest = frame[9 + payload_len : 9 + payload_len + tail] if is_final else None
        mac = frame[9 + payload_len + tail :]
        return cls(seq, is_final, payload, mac, digest)


def make_request(
    key: bytes,
    challenge: bytes,
    specs: Sequence[SubPathSpec],
    config: EngineConfig,
    capacity_bytes: int | None = None,
) -> Request:
    if len(challenge) != CHALLENGE_BYTES:
        raise ValueError(f"challenge must be {CHALLENGE_BYTES} bytes")
    blockmem = serialize_blockmem(specs, config, capacity_bytes).data if specs else b""
    req = Request(
        challenge,
        blockmem,
        config.mode,
        config.addr_width,
        config.slice_size_bytes,
        b"",
    )
    mac = _mac(key, _REQUEST_DOMAIN, req.body())
    return Request(challenge, blockmem, config.mode, config.addr_width,
                   config.slice_size_bytes, mac)


def _slice_mac(key: bytes, challenge: bytes, body: bytes) -> bytes:
    return _mac(key, _SLICE_DOMAIN, challenge + body)


class Prover:
    """Device side: installs authenticated spec sets, then streams MAC'd
    compressed evidence slices for a trace."""

    def __init__(self, key: bytes, config: EngineConfig, specs: Sequence[SubPathSpec] = ()):
        self._key = key
        self.config = config
        self.specs: tuple[SubPathSpec, ...] = tuple(specs)
        self.challenge: bytes | None = None
        self._next_seq = 0

    def handle_request(self, request: Request | bytes) -> None:
        if isinstance(request, (bytes, bytearray)):
            request = Request.decode(bytes(request))
        expected = _mac(self._key, _REQUEST_DOMAIN, request.body())
        if not hmac.compare_digest(expected, request.mac):
            raise AuthError("bad_mac", "request authentication failed")
        if (
            request.mode is not self.config.mode
            or request.addr_width != self.config.addr_width
            or request.slice_size_bytes != self.config.slice_size_bytes
        ):
            raise ConfigMismatch("request config echo disagrees with engine config")
        if request.blockmem:
            self.specs = deserialize_blockmem(request.blockmem, self.config)
        self.challenge = request.challenge
        self._next_seq = 0

    def run(
        self, trace: Iterable[Transfer], image_digest: bytes = ZERO_DIGEST
    ) -> list[EvidenceSlice]:
        if self.challenge is None:
            raise ProtocolError("no authenticated request installed")
        if len(image_digest) != DIGEST_BYTES:
            raise ValueError(f"image digest must be {DIGEST_BYTES} bytes")
        logs = slice_compress(trace, self.specs, self.config)
        slices: list[EvidenceSlice] = []
        for i, log in enumerate(logs):
            final = i == len(logs) - 1
            payload = serialize_log(log, self.config, LogFormat.MEMORY_IMAGE)
            s = EvidenceSlice(
                self._next_seq, final, payload, b"", image_digest if final else None
            )
            slices.append(
                EvidenceSlice(
                    s.seq,
                    final,
                    payload,
                    _slice_mac(self._key, self.challenge, s.body()),
                    s.image_digest,
                )
            )
            self._next_seq += 1
        return slices


class Outcome(str, Enum):
    AUTHENTIC_AND_VALID = "authentic_and_valid"
    AUTHENTIC_BUT_INVALID_PATH = "authentic_but_invalid_path"
    AUTH_FAILURE = "auth_failure"
    INCOMPLETE = "incomplete"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    invalid_index: int | None = None
    reason: str | None = None
    raw_log: Log | None = None
    image_digest: bytes | None = None


ACCEPT = "accept"


class Verifier:
    """Remote side: opens challenge-bound sessions, checks slice sequence
    and authenticity, reconstructs the full raw log, and judges it."""

    def __init__(self, key: bytes, config: EngineConfig):
        self._key = key
        self.config = config
        self.session_specs: tuple[SubPathSpec, ...] = ()
        self.challenge: bytes | None = None
        self._expected_seq = 0
        self._payloads: list[bytes] = []
        self._final_seen = False
        self._image_digest: bytes | None = None
        self.rejections: list[tuple[int | None, str]] = []

    def open_session(
        self,
        specs: Sequence[SubPathSpec] = (),
        challenge: bytes | None = None,
        capacity_bytes: int | None = None,
    ) -> Request:
        self.session_specs = tuple(specs)
        self.challenge = challenge or new_challenge()
        self._expected_seq = 0
        self._payloads = []
        self._final_seen = False
        self._image_digest = None
        self.rejections = []
        return make_request(self._key, self.challenge, self.session_specs,
                            self.config, capacity_bytes)

    def verify_slice(self, frame: EvidenceSlice | bytes) -> str:
        """Returns "accept" or a rejection reason; state only advances on
        accepted slices."""
        if self.challenge is None:
            raise ProtocolError("no open session")
        if isinstance(frame, (bytes, bytearray)):
            try:
                frame = EvidenceSlice.decode(bytes(frame))
            except MalformedFrame:
                self.rejections.append((None, "malformed"))
                return "malformed"
        if self._final_seen:
            self.rejections.append((frame.seq, "after_final"))
            return "after_final"
        if frame.seq != self._expected_seq:
            self.rejections.append((frame.seq, "bad_seq"))
            return "bad_seq"
        expected = _slice_mac(self._key, self.challenge, frame.body())
        if not hmac.compare_digest(expected, frame.mac):
            self.rejections.append((frame.seq, "bad_mac"))
            return "bad_mac"
        self._payloads.append(frame.payload)
        self._expected_seq += 1
        if frame.is_final:
            self._final_seen = True
            self._image_digest = frame.image_digest
        return ACCEPT

    def assemble(
        self,
        cfg: CFG | None = None,
        expected_digest: bytes | None = None,
    ) -> Verdict:
        """Expand accepted slices into one raw log and judge the session."""
        if not self._final_seen:
            if self.rejections:
                return Verdict(Outcome.AUTH_FAILURE, reason=self.rejections[0][1])
            return Verdict(Outcome.INCOMPLETE, reason="final slice not received")
        if expected_digest is not None and self._image_digest != expected_digest:
            return Verdict(Outcome.AUTH_FAILURE, reason="bad_digest")
        elements: list = []
        for payload in self._payloads:
            log = deserialize_log(payload, self.config, LogFormat.MEMORY_IMAGE)
            elements.extend(expand(log, self.session_specs, self.config).elements)
        raw = make_log(elements, self.config)
        if cfg is not None:
            bad = validate_against_cfg(raw, cfg)
            if bad is not None:
                return Verdict(
                    Outcome.AUTHENTIC_BUT_INVALID_PATH,
                    invalid_index=bad,
                    raw_log=raw,
                    image_digest=self._image_digest,
                )
        return Verdict(
            Outcome.AUTHENTIC_AND_VALID, raw_log=raw, image_digest=self._image_digest
        )


def validate_against_cfg(raw_log: Log, cfg: CFG) -> int | None:
    """Index of the first transfer that is not a CFG edge, or None."""
    pairs = cfg.valid_pairs()
    dests = cfg.valid_dests()
    for i, el in enumerate(raw_log.elements):
        if isinstance(el, RawPair):
            if (el.src, el.dest) not in pairs:
                return i
        elif isinstance(el, RawDest):
            if el.dest not in dests:
                return i
        else:
            raise ValueError("validate_against_cfg expects a fully expanded log")
    return None


@dataclass
class ChannelFaults:
    """Faults applied by send index on one channel direction."""

    drop: set[int] = field(default_factory=set)
    flip: dict[int, int] = field(default_factory=dict)  # frame index -> bit index
    replay: set[int] = field(default_factory=set)
    reorder: set[int] = field(default_factory=set)  # swap frame i with i+1


class Channel:
    """In-process ordered message channel with fault-injection hooks."""

    def __init__(self, faults: ChannelFaults | None = None):
        self.faults = faults or ChannelFaults()
        self._sent: list[bytes] = []

    def send(self, frame: bytes) -> None:
        self._sent.append(bytes(frame))

    def drain(self) -> list[bytes]:
        delivered: list[tuple[int, bytes]] = []
        for i, frame in enumerate(self._sent):
            if i in self.faults.drop:
                continue
            if i in self.faults.flip:
                bit = self.faults.flip[i]
                buf = bytearray(frame)
                buf[(bit // 8) % len(buf)] ^= 1 << (bit % 8)
                frame = bytes(buf)
            delivered.append((i, frame))
            if i in self.faults.replay:
                delivered.append((i, frame))
        for i in sorted(self.faults.reorder):
            positions = [p for p, (orig, _) in enumerate(delivered) if orig == i]
            for p in positions:
                if p + 1 < len(delivered):
                    delivered[p], delivered[p + 1] = delivered[p + 1], delivered[p]
        self._sent = []
        return [frame for _, frame in delivered]
