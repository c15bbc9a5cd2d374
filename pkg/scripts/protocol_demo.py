#!/usr/bin/env python3
"""End-to-end protocol demonstration: one benign session plus the three
classic tampering attempts, printing the verifier's verdict for each.
"""

import sys

from cfaudit.codec import encode_raw
from cfaudit.fixtures import DEMO_KEY, SENSOR_LEN_RANGE, sensor_cfg, sensor_profile
from cfaudit.model import EngineConfig, Mode, Transfer
from cfaudit.protocol import Channel, ChannelFaults, Prover, Verifier
from cfaudit.selection import enumerate_candidates, policy_top
from cfaudit.workload import generate_trace


def run_session(cfg, trace, specs, config, faults=None):
    verifier = Verifier(DEMO_KEY, config)
    request = verifier.open_session(specs)
    prover = Prover(DEMO_KEY, config)
    prover.handle_request(request.encode())
    channel = Channel(faults)
    for s in prover.run(trace):
        channel.send(s.encode())
    for frame in channel.drain():
        verifier.verify_slice(frame)
    return verifier.assemble(cfg=cfg)


def main() -> int:
    config = EngineConfig()
    cfg = sensor_cfg()
    trace = generate_trace(cfg, sensor_profile())
    log = encode_raw(trace, config)
    specs = policy_top(
        enumerate_candidates([log], SENSOR_LEN_RANGE, mode=Mode.PAIR), 2
    )

    verdict = run_session(cfg, trace, specs, config)
    print(f"benign run            -> {verdict.outcome.value}")

    verdict = run_session(cfg, trace, specs, config, ChannelFaults(flip={0: 80}))
    print(f"corrupted slice       -> {verdict.outcome.value} ({verdict.reason})")

    verdict = run_session(cfg, trace, specs, config, ChannelFaults(drop={0}))
    print(f"dropped slice         -> {verdict.outcome.value} ({verdict.reason})")

    hijacked = list(trace)
    hijacked.insert(40, Transfer(0x0400, 0x0508))  # edge absent from the CFG
    verdict = run_session(cfg, hijacked, specs, config)
    print(
        f"injected rogue edge   -> {verdict.outcome.value} "
        f"(first bad transfer at {verdict.invalid_index})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
