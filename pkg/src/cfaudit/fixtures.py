"""Built-in synthetic workloads used by tests, scripts, and the docs.

Two trace-generation fixtures stand in for real firmware runs:

* ``sensor``: one dominant loop whose body is exactly ten transfers per
  iteration, with a strong bias on the back edge, so nearly every step of
  a generated trace sits inside that body.  Mining this workload at
  iteration length (len range 10..16) yields a single spec that collapses
  whole bursts of iterations into ``[symbol, count]``.
* ``branchy``: a ring of four uniform-weight diamonds, so savings arrive
  steadily as more specs are installed rather than from one pattern.

``static_demo_cfg`` is a hand-built program for exercising the static
ranking rules: one loop (in ``sense``), one max-branching function
(``decide``), one branch-free callee (``leaf``), and one function that is
never called (``dead``).
"""

from __future__ import annotations

from pathlib import Path

from .cfg import CFG, Block, Edge
from .files import save_key, write_trace_document
from .model import Mode
from .workload import WorkloadProfile, generate_trace

SENSOR_LEN_RANGE = (10, 16)
BRANCHY_LEN_RANGE = (2, 16)

DEMO_KEY = bytes(range(32))


def _cfg(functions, blocks, edges) -> CFG:
    return CFG(
        tuple(functions),
        {b[0]: Block(*b) for b in blocks},
        tuple(Edge(*e) for e in edges),
    )


def sensor_cfg() -> CFG:
    blocks = [("e0", 0x0400, 0x0406, "sense"), ("h", 0x0410, 0x041A, "sense")]
    for i in range(1, 10):
        base = 0x0410 + 0x10 * i
        blocks.append((f"b{i}", base, base + 6, "sense"))
    blocks.append(("x", 0x0500, 0x0508, "sense"))
    edges = [("e0", "h", "fallthrough"), ("h", "b1", "fallthrough")]
    for i in range(1, 9):
        edges.append((f"b{i}", f"b{i+1}", "fallthrough"))
    edges += [("b9", "h", "cond_true"), ("b9", "x", "cond_false"), ("x", "e0", "jump")]
    return _cfg([("sense", "e0")], blocks, edges)


def sensor_profile(seed: int = 2024, steps: int = 2600) -> WorkloadProfile:
    return WorkloadProfile(seed=seed, steps=steps, loop_bias=60.0)


def branchy_cfg() -> CFG:
    names = ["w0"]
    for i in range(1, 5):
        names += [f"d{i}", f"a{i}", f"b{i}", f"j{i}"]
    blocks = []
    for i, name in enumerate(names):
        base = 0x1000 + 0x10 * i
        blocks.append((name, base, base + 6, "work"))
    edges = [("w0", "d1", "fallthrough")]
    for i in range(1, 5):
        edges += [
            (f"d{i}", f"a{i}", "cond_true"),
            (f"d{i}", f"b{i}", "cond_false"),
            (f"a{i}", f"j{i}", "jump"),
            (f"b{i}", f"j{i}", "jump"),
        ]
        if i < 4:
            edges.append((f"j{i}", f"d{i+1}", "fallthrough"))
    edges.append(("j4", "w0", "jump"))
    return _cfg([("work", "w0")], blocks, edges)


def branchy_profile(seed: int = 5, steps: int = 4000) -> WorkloadProfile:
    return WorkloadProfile(seed=seed, steps=steps)


def static_demo_cfg() -> CFG:
    blocks = [
        ("m0", 0x2000, 0x2006, "main"),
        ("m1", 0x2010, 0x2016, "main"),
        ("m2", 0x2020, 0x2026, "main"),
        ("m3", 0x2030, 0x2036, "main"),
        ("m4", 0x2040, 0x2046, "main"),
        ("s0", 0x2100, 0x2106, "sense"),
        ("s1", 0x2110, 0x2116, "sense"),
        ("s2", 0x2120, 0x2126, "sense"),
        ("s3", 0x2130, 0x2136, "sense"),
        ("s4", 0x2140, 0x2146, "sense"),
        ("d0", 0x2200, 0x2206, "decide"),
        ("d1", 0x2210, 0x2216, "decide"),
        ("d2", 0x2220, 0x2226, "decide"),
        ("d3", 0x2230, 0x2236, "decide"),
        ("d4", 0x2240, 0x2246, "decide"),
        ("d5", 0x2250, 0x2256, "decide"),
        ("d6", 0x2260, 0x2266, "decide"),
        ("l0", 0x2300, 0x2306, "leaf"),
        ("l1", 0x2310, 0x2316, "leaf"),
        ("z0", 0x2400, 0x2406, "dead"),
        ("z1", 0x2410, 0x2416, "dead"),
        ("z2", 0x2420, 0x2426, "dead"),
    ]
    edges = [
        ("m0", "m1", "fallthrough"),
        ("m1", "s0", "call"),
        ("s4", "m2", "return"),
        ("m2", "d0", "call"),
        ("d6", "m3", "return"),
        ("m3", "l0", "call"),
        ("l1", "m4", "return"),
        ("s0", "s1", "fallthrough"),
        ("s1", "s2", "cond_true"),
        ("s2", "s3", "fallthrough"),
        ("s3", "s1", "jump"),
        ("s1", "s4", "cond_false"),
        ("d0", "d1", "cond_true"),
        ("d0", "d2", "cond_false"),
        ("d1", "d3", "jump"),
        ("d2", "d3", "jump"),
        ("d3", "d4", "cond_true"),
        ("d3", "d5", "cond_false"),
        ("d4", "d6", "jump"),
        ("d5", "d6", "jump"),
        ("l0", "l1", "fallthrough"),
        ("z0", "z1", "cond_true"),
        ("z0", "z2", "cond_false"),
    ]
    functions = [
        ("main", "m0"),
        ("sense", "s0"),
        ("decide", "d0"),
        ("leaf", "l0"),
        ("dead", "z0"),
    ]
    return _cfg(functions, blocks, edges)


def write_fixture_files(directory: str | Path) -> dict[str, Path]:
    """Materialize fixture documents for CLI use; returns name -> path."""
    from .cfg import write_cfg_document

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out: dict[str, Path] = {}
    for name, cfg, profile in (
        ("sensor", sensor_cfg(), sensor_profile()),
        ("branchy", branchy_cfg(), branchy_profile()),
    ):
        cfg_path = directory / f"{name}.cfg"
        cfg_path.write_text(write_cfg_document(cfg))
        out[f"{name}.cfg"] = cfg_path
        trace_path = directory / f"{name}.trace"
        trace = generate_trace(cfg, profile)
        trace_path.write_text(write_trace_document(trace, Mode.PAIR, 16))
        out[f"{name}.trace"] = trace_path
    demo_path = directory / "static_demo.cfg"
    demo_path.write_text(write_cfg_document(static_demo_cfg()))
    out["static_demo.cfg"] = demo_path
    key_path = directory / "demo.key"
    save_key(key_path, DEMO_KEY)
    out["demo.key"] = key_path
    return out
