"""Control-flow graphs: document parsing, natural loops, segmentation,
and per-segment path enumeration.

The CFG document is line-based text:

    function <name> <entry_block_id>
    block <id> <start_hex> <end_hex> <function_name>
    edge <src_id> <dest_id> <kind>

with kinds jump, cond_true, cond_false, call, return, fallthrough.  The
first function line names the program entry.  A CFG edge maps to the
transfer (src block end address, dest block start address).

Segmentation cuts the graph at back edges, at call and return edges, and
at every edge whose endpoints differ in loop membership, so each segment
is a forward-edge subgraph whose blocks share one loop context.  Merging
fuses a segment into its unique successor when the connecting edges are
plain forward edges that do not enter a loop header.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import MalformedCFG, ParseError, PathExplosion
from .model import Transfer

EDGE_KINDS = ("jump", "cond_true", "cond_false", "call", "return", "fallthrough")
CROSS_FUNCTION_KINDS = frozenset({"call", "return"})

DEFAULT_PATH_CAP = 10_000


@dataclass(frozen=True)
class Block:
    id: str
    start: int
    end: int
    function: str


@dataclass(frozen=True)
class Edge:
    src: str
    dest: str
    kind: str


@dataclass(frozen=True)
class CFG:
    functions: tuple[tuple[str, str], ...]  # (name, entry block id), document order
    blocks: Mapping[str, Block]
    edges: tuple[Edge, ...]

    @property
    def entry_function(self) -> str:
        return self.functions[0][0]

    def entry_block(self, function: str | None = None) -> Block:
        name = function or self.entry_function
        for fn, entry in self.functions:
            if fn == name:
                return self.blocks[entry]
        raise KeyError(name)

    def function_blocks(self, function: str) -> list[Block]:
        return [b for b in self.blocks.values() if b.function == function]

    def out_edges(self, block_id: str) -> list[Edge]:
        return [e for e in self.edges if e.src == block_id]

    def transfer_of(self, edge: Edge) -> Transfer:
        return Transfer(self.blocks[edge.src].end, self.blocks[edge.dest].start)

    def valid_pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            (self.blocks[e.src].end, self.blocks[e.dest].start) for e in self.edges
        )

    def valid_dests(self) -> frozenset[int]:
        return frozenset(self.blocks[e.dest].start for e in self.edges)


def build_cfg(document: str) -> CFG:
    functions: list[tuple[str, str]] = []
    blocks: dict[str, Block] = {}
    edges: list[Edge] = []
    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind, args = tokens[0], tokens[1:]
        if kind == "function":
            if len(args) != 2:
                raise ParseError(lineno, "function lines need <name> <entry_block>")
            if any(fn == args[0] for fn, _ in functions):
                raise ParseError(lineno, f"duplicate function {args[0]}")
            functions.append((args[0], args[1]))
        elif kind == "block":
            if len(args) != 4:
                raise ParseError(lineno, "block lines need <id> <start> <end> <function>")
            bid, start_s, end_s, fn = args
            if bid in blocks:
                raise ParseError(lineno, f"duplicate block {bid}")
            try:
                start, end = int(start_s, 16), int(end_s, 16)
            except ValueError:
                raise ParseError(lineno, f"bad hex address in {line!r}") from None
            blocks[bid] = Block(bid, start, end, fn)
        elif kind == "edge":
            if len(args) != 3 or args[2] not in EDGE_KINDS:
                raise ParseError(lineno, "edge lines need <src> <dest> <kind>")
            edges.append(Edge(args[0], args[1], args[2]))
        else:
            raise ParseError(lineno, f"unknown directive {kind!r}")

    if not functions:
        raise MalformedCFG("document defines no functions")
    fn_names = {fn for fn, _ in functions}
    for fn, entry in functions:
        if entry not in blocks:
            raise MalformedCFG(f"function {fn} entry block {entry} does not exist")
        if blocks[entry].function != fn:
            raise MalformedCFG(f"entry block {entry} belongs to {blocks[entry].function}, not {fn}")
    for b in blocks.values():
        if b.function not in fn_names:
            raise MalformedCFG(f"block {b.id} references unknown function {b.function}")
        if b.start > b.end:
            raise MalformedCFG(f"block {b.id} has start > end")
    for e in edges:
        if e.src not in blocks or e.dest not in blocks:
            raise MalformedCFG(f"edge {e.src}->{e.dest} has a dangling endpoint")
    return CFG(tuple(functions), dict(blocks), tuple(edges))


def write_cfg_document(cfg: CFG) -> str:
    lines = [f"function {fn} {entry}" for fn, entry in cfg.functions]
    for b in cfg.blocks.values():
        lines.append(f"block {b.id} {b.start:04x} {b.end:04x} {b.function}")
    for e in cfg.edges:
        lines.append(f"edge {e.src} {e.dest} {e.kind}")
    return "\n".join(lines) + "\n"


# --- dominators and natural loops -------------------------------------------

def _intra_edges(cfg: CFG, function: str) -> list[Edge]:
    return [
        e
        for e in cfg.edges
        if e.kind not in CROSS_FUNCTION_KINDS
        and cfg.blocks[e.src].function == function
        and cfg.blocks[e.dest].function == function
    ]


def _dominators(nodes: list[str], entry: str, preds: Mapping[str, list[str]]) -> dict[str, set[str]]:
    """Iterative set-intersection dominator computation over reachable nodes."""
    doms: dict[str, set[str]] = {entry: {entry}}
    everything = set(nodes)
    for n in nodes:
        if n != entry:
            doms[n] = set(everything)
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n == entry:
                continue
            incoming = [doms[p] for p in preds.get(n, []) if p in doms]
            new = set.intersection(*incoming) | {n} if incoming else {n}
            if new != doms[n]:
                doms[n] = new
                changed = True
    return doms


@dataclass(frozen=True)
class LoopInfo:
    back_edges: frozenset[tuple[str, str]]
    loops: Mapping[str, frozenset[str]]  # header block id -> member block ids
    membership: Mapping[str, frozenset[str]]  # block id -> headers of containing loops


def find_loops(cfg: CFG) -> LoopInfo:
    back_edges: set[tuple[str, str]] = set()
    loops: dict[str, set[str]] = {}
    for fn, entry in cfg.functions:
        edges = _intra_edges(cfg, fn)
        succs: dict[str, list[str]] = {}
        preds: dict[str, list[str]] = {}
        for e in edges:
            succs.setdefault(e.src, []).append(e.dest)
            preds.setdefault(e.dest, []).append(e.src)
        # reachable blocks only; unreachable code cannot form natural loops
        reach = [entry]
        seen = {entry}
        for n in reach:
            for s in succs.get(n, []):
                if s not in seen:
                    seen.add(s)
                    reach.append(s)
        doms = _dominators(reach, entry, preds)
        for e in edges:
            if e.src in seen and e.dest in doms.get(e.src, set()):
                back_edges.add((e.src, e.dest))
                members = loops.setdefault(e.dest, {e.dest})
                # walk predecessors from the latch without crossing the header
                stack = [e.src]
                while stack:
                    n = stack.pop()
                    if n in members:
                        continue
                    members.add(n)
                    stack.extend(p for p in preds.get(n, []) if p in seen)
    membership: dict[str, set[str]] = {b: set() for b in cfg.blocks}
    for header, members in loops.items():
        for b in members:
            membership[b].add(header)
    return LoopInfo(
        frozenset(back_edges),
        {h: frozenset(m) for h, m in loops.items()},
        {b: frozenset(m) for b, m in membership.items()},
    )


# --- segmentation ------------------------------------------------------------

@dataclass(frozen=True)
class SegmentLink:
    dest: int
    kind: str
    fusable: bool


@dataclass
class Segment:
    id: int
    blocks: frozenset[str]
    boundary_kind: str
    edges: tuple[Edge, ...] = ()  # internal forward edges only
    links: tuple[SegmentLink, ...] = ()

    def successors(self) -> frozenset[int]:
        return frozenset(l.dest for l in self.links)


def _is_cut(edge: Edge, loops: LoopInfo) -> bool:
    if edge.kind in CROSS_FUNCTION_KINDS:
        return True
    if (edge.src, edge.dest) in loops.back_edges:
        return True
    return loops.membership[edge.src] != loops.membership[edge.dest]


def segment_cfg(cfg: CFG, loops: LoopInfo | None = None) -> list[Segment]:
    loops = loops or find_loops(cfg)
    cut = [e for e in cfg.edges if _is_cut(e, loops)]
    keep = [e for e in cfg.edges if not _is_cut(e, loops)]

    parent: dict[str, str] = {b: b for b in cfg.blocks}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in keep:
        parent[find(e.src)] = find(e.dest)

    roots = sorted({find(b) for b in cfg.blocks})
    seg_of = {b: roots.index(find(b)) for b in cfg.blocks}
    members: dict[int, set[str]] = {i: set() for i in range(len(roots))}
    for b, s in seg_of.items():
        members[s].add(b)

    entry_blocks = {entry for _, entry in cfg.functions}
    loop_headers = set(loops.loops)
    incoming_kinds: dict[int, set[str]] = {i: set() for i in members}
    from_loop: dict[int, bool] = {i: False for i in members}
    links: dict[int, list[SegmentLink]] = {i: [] for i in members}
    for e in cut:
        a, b = seg_of[e.src], seg_of[e.dest]
        fusable = (
            e.kind not in CROSS_FUNCTION_KINDS
            and (e.src, e.dest) not in loops.back_edges
            and e.dest not in loop_headers
        )
        links[a].append(SegmentLink(b, e.kind, fusable))
        incoming_kinds[b].add(e.kind)
        if loops.membership[e.src]:
            from_loop[b] = True

    segments = []
    for i, blks in members.items():
        if blks & entry_blocks:
            kind = "graph_first"
        elif all(loops.membership[b] for b in blks):
            kind = "loop_first"
        elif "return" in incoming_kinds[i]:
            kind = "return"
        elif "call" in incoming_kinds[i]:
            kind = "call"
        elif from_loop[i]:
            kind = "loop_last"
        elif not links[i]:
            kind = "graph_last"
        else:
            kind = "graph_first"
        internal = tuple(e for e in keep if seg_of[e.src] == i)
        segments.append(Segment(i, frozenset(blks), kind, internal, tuple(links[i])))
    return segments


def merge_segments(segments: Iterable[Segment]) -> list[Segment]:
    """Fuse each segment with exactly one (fusable, non-self) successor into
    that successor, repeated to fixpoint."""
    segs: dict[int, Segment] = {
        s.id: Segment(s.id, s.blocks, s.boundary_kind, s.edges, s.links)
        for s in segments
    }
    changed = True
    while changed:
        changed = False
        for a in list(segs.values()):
            dests = {l.dest for l in a.links if l.dest != a.id}
            if len(dests) != 1:
                continue
            b_id = dests.pop()
            connecting = [l for l in a.links if l.dest == b_id]
            if not all(l.fusable for l in connecting):
                continue
            b = segs.pop(b_id)
            keep_links = [l for l in a.links if l.dest not in (a.id, b_id)]
            self_links = [l for l in a.links if l.dest == a.id]
            merged_links = tuple(self_links + keep_links + list(b.links))
            segs[a.id] = Segment(
                a.id,
                a.blocks | b.blocks,
                a.boundary_kind,
                a.edges + b.edges,
                merged_links,
            )
            # repoint every link that targeted the absorbed segment
            for s in list(segs.values()):
                if any(l.dest == b_id for l in s.links):
                    segs[s.id] = Segment(
                        s.id,
                        s.blocks,
                        s.boundary_kind,
                        s.edges,
                        tuple(
                            SegmentLink(a.id if l.dest == b_id else l.dest, l.kind, l.fusable)
                            for l in s.links
                        ),
                    )
            changed = True
            break
    return sorted(segs.values(), key=lambda s: s.id)


# --- per-segment path enumeration --------------------------------------------

@dataclass(frozen=True)
class SegmentPath:
    blocks: tuple[str, ...]
    transfers: tuple[Transfer, ...]
    function: str


def enumerate_segment_paths(
    segment: Segment, cfg: CFG, max_paths: int = DEFAULT_PATH_CAP
) -> list[SegmentPath]:
    """All source-to-sink block paths of the segment's internal DAG,
    as transfer sequences; single-block paths carry no transfers and
    are dropped."""
    succs: dict[str, list[str]] = {b: [] for b in segment.blocks}
    indeg: dict[str, int] = {b: 0 for b in segment.blocks}
    for e in segment.edges:
        succs[e.src].append(e.dest)
        indeg[e.dest] += 1
    sources = sorted(b for b in segment.blocks if indeg[b] == 0)

    # count source-to-sink paths first so explosion is caught before listing
    counts: dict[str, int] = {}

    def count_from(b: str) -> int:
        if b in counts:
            return counts[b]
        if not succs[b]:
            counts[b] = 1
        else:
            counts[b] = sum(count_from(s) for s in succs[b])
        return counts[b]

    total = sum(count_from(s) for s in sources)
    if total > max_paths:
        raise PathExplosion(f"segment {segment.id} has {total} paths, cap {max_paths}")

    paths: list[SegmentPath] = []

    def walk(b: str, acc: list[str]) -> None:
        acc.append(b)
        if not succs[b]:
            if len(acc) > 1:
                transfers = tuple(
                    Transfer(cfg.blocks[acc[i]].end, cfg.blocks[acc[i + 1]].start)
                    for i in range(len(acc) - 1)
                )
                paths.append(
                    SegmentPath(tuple(acc), transfers, cfg.blocks[acc[0]].function)
                )
        else:
            for s in sorted(succs[b]):
                walk(s, acc)
        acc.pop()

    for s in sources:
        walk(s, [])
    return paths
