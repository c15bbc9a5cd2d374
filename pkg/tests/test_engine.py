import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfaudit.codec import encode_raw, serialize_log
from cfaudit.engine import Engine, Phase, compress_trace, expand, slice_compress
from cfaudit.errors import (
    AddressOutOfRange,
    MalformedLog,
    ModeMismatch,
    SliceTooSmall,
    TooManySpecs,
    UnknownSymbol,
)
from cfaudit.model import (
    EngineConfig,
    RepeatCount,
    RawPair,
    SubPathSpec,
    Symbol,
    Transfer,
    make_log,
)

from conftest import random_instance

PAIR16 = EngineConfig()
A, B, D, G, X, Y = 0x0400, 0x0500, 0x0600, 0x0700, 0x0410, 0x0510

ABD_SPEC = SubPathSpec(1, (Transfer(A, B), Transfer(B, D), Transfer(D, G)))
ABD_TRACE = [Transfer(A, B), Transfer(B, D), Transfer(D, G)]


def pairs(*addrs):
    return [Transfer(s, d) for s, d in addrs]


class TestEngineBasics:
    def test_no_specs_equals_encode_raw(self):
        trace = pairs((A, B), (B, D))
        assert compress_trace(trace, [], PAIR16) == encode_raw(trace, PAIR16)

    def test_eight_specs_accepted_nine_rejected(self):
        mk = lambda i: SubPathSpec(i, (Transfer(0x0400 + i, 0x0500),))
        Engine([mk(i) for i in range(1, 9)], PAIR16)
        with pytest.raises(TooManySpecs):
            Engine([mk(i) for i in range(1, 10)], PAIR16)

    def test_mode_mismatch(self):
        with pytest.raises(ModeMismatch):
            Engine([SubPathSpec(1, (0x0400,))], PAIR16)

    def test_address_out_of_range(self):
        eng = Engine([], PAIR16)
        with pytest.raises(AddressOutOfRange):
            eng.step(Transfer(0x0100, 0x0400))

    def test_single_occurrence_replaced(self):
        log = compress_trace(ABD_TRACE, [ABD_SPEC], PAIR16)
        assert log.elements == (Symbol(1),)
        assert log.size_bytes == 2

    def test_double_occurrence_coalesces(self):
        log = compress_trace(ABD_TRACE * 2, [ABD_SPEC], PAIR16)
        assert log.elements == (Symbol(1), RepeatCount(2))
        assert log.size_bytes == 4

    def test_detectors_idle_after_replacement(self):
        eng = Engine([ABD_SPEC], PAIR16)
        for t in ABD_TRACE:
            eng.step(t)
        assert all(d.phase is Phase.IDLE and d.block_ptr == 0 for d in eng.detectors())

    def test_repeat_state_view(self):
        eng = Engine([ABD_SPEC], PAIR16)
        for t in ABD_TRACE * 2:
            eng.step(t)
        rs = eng.repeat_state()
        assert rs.last_id == 1 and rs.count == 2 and rs.tail_is_countable
        eng.step(Transfer(G, X))
        assert not eng.repeat_state().tail_is_countable


class TestLogGrowthStages:
    """Golden sequence: detect, replace, grow, detect again, grow."""

    def test_stage_by_stage(self):
        eng = Engine([ABD_SPEC], PAIR16)
        # (a) the sub-path streams in raw, then (b) collapses on its last transfer
        eng.step(Transfer(A, B))
        assert eng.snapshot() == (RawPair(A, B),)
        eng.step(Transfer(B, D))
        assert eng.snapshot() == (RawPair(A, B), RawPair(B, D))
        eng.step(Transfer(D, G))
        assert eng.snapshot() == (Symbol(1),)
        # (c) unrelated transfers append without touching the symbol
        eng.step(Transfer(G, X))
        eng.step(Transfer(X, Y))
        assert eng.snapshot() == (Symbol(1), RawPair(G, X), RawPair(X, Y))
        # (d)->(e) the next occurrence collapses as well
        for t in ABD_TRACE:
            eng.step(t)
        assert eng.snapshot() == (
            Symbol(1),
            RawPair(G, X),
            RawPair(X, Y),
            Symbol(1),
        )
        # (f) and execution continues normally
        eng.step(Transfer(G, Y))
        assert eng.snapshot()[-1] == RawPair(G, Y)


class TestPriority:
    def test_lower_index_wins_on_tie(self):
        s1 = SubPathSpec(1, pairs((A, B), (B, D)))
        s2 = SubPathSpec(2, pairs((A, B), (B, D), (D, G)))
        log = compress_trace(pairs((A, B), (B, D)), [s1, s2], PAIR16)
        assert log.elements == (Symbol(1),)

    def test_completion_resets_other_mid_matches(self):
        s1 = SubPathSpec(1, pairs((A, B), (B, D)))
        s2 = SubPathSpec(2, pairs((A, B), (B, D), (D, G)))
        # after s1 fires on (B, D), s2 must restart; the following (D, G)
        # alone cannot complete it
        log = compress_trace(pairs((A, B), (B, D), (D, G)), [s1, s2], PAIR16)
        assert log.elements == (Symbol(1), RawPair(D, G))

    def test_len1_lower_index_beats_longer_completion(self):
        s1 = SubPathSpec(1, pairs((B, D)))
        s2 = SubPathSpec(2, pairs((A, B), (B, D)))
        log = compress_trace(pairs((A, B), (B, D)), [s1, s2], PAIR16)
        assert log.elements == (RawPair(A, B), Symbol(1))

    def test_permuting_specs_without_ties_is_stable(self):
        sa = SubPathSpec(1, pairs((A, B), (B, D)))
        sb = SubPathSpec(2, pairs((X, Y),))
        trace = pairs((A, B), (B, D), (G, G), (X, Y))
        la = compress_trace(trace, [sa, sb], PAIR16)
        sa2 = SubPathSpec(1, pairs((X, Y),))
        sb2 = SubPathSpec(2, pairs((A, B), (B, D)))
        lb = compress_trace(trace, [sa2, sb2], PAIR16)
        ids_a = [e.id for e in la.elements if isinstance(e, Symbol)]
        ids_b = [e.id for e in lb.elements if isinstance(e, Symbol)]
        # same replacement structure, ids renamed by position
        assert len(ids_a) == len(ids_b) == 2
        assert [type(e) for e in la.elements] == [type(e) for e in lb.elements]


class TestMismatchSemantics:
    def test_no_retry_by_default(self):
        spec = SubPathSpec(1, pairs((A, B), (B, D)))
        # the second (A, B) arrives while monitoring, mismatches entry 1,
        # and is consumed without a re-test against entry 0 — so the match
        # never restarts and everything stays raw
        trace = pairs((A, B), (A, B), (B, D))
        log = compress_trace(trace, [spec], PAIR16)
        assert log.is_raw()

    def test_mismatching_transfer_feeds_idle_detectors(self):
        s1 = SubPathSpec(1, pairs((A, B), (B, D)))
        s2 = SubPathSpec(2, pairs((G, X), (A, B)))
        # (G, X) mismatches s1 mid-match but starts idle detector s2, which
        # then completes on the following (A, B)
        trace = pairs((A, B), (G, X), (A, B))
        log = compress_trace(trace, [s1, s2], PAIR16)
        assert log.elements == (RawPair(A, B), Symbol(2))

    def test_retry_variant_retests_position_zero(self):
        config = EngineConfig(retry_on_mismatch=True)
        spec = SubPathSpec(1, pairs((A, B), (B, D)))
        # with retry, the mismatching (A, B) restarts the match and the
        # following (B, D) completes it; without retry the trace stays raw
        trace = pairs((A, B), (A, B), (B, D))
        log = compress_trace(trace, [spec], config)
        assert log.elements == (RawPair(A, B), Symbol(1))
        assert compress_trace(trace, [spec], PAIR16).is_raw()


class TestFinalize:
    def test_partial_match_stays_raw(self):
        trace = ABD_TRACE[:2]
        assert compress_trace(trace, [ABD_SPEC], PAIR16) == encode_raw(trace, PAIR16)

    def test_occurrence_plus_partial(self):
        trace = ABD_TRACE + ABD_TRACE[:1]
        log = compress_trace(trace, [ABD_SPEC], PAIR16)
        assert log.elements == (Symbol(1), RawPair(A, B))

    def test_empty_trace(self):
        log = compress_trace([], [ABD_SPEC], PAIR16)
        assert log.elements == () and log.size_bytes == 0


class TestRepeatCoalescing:
    @pytest.mark.parametrize("k", [2, 3, 10, 100])
    def test_k_occurrences_two_words(self, k):
        log = compress_trace(ABD_TRACE * k, [ABD_SPEC], PAIR16)
        assert log.elements == (Symbol(1), RepeatCount(k))
        assert log.size_bytes == 4

    def test_interrupted_runs_restart(self):
        trace = ABD_TRACE * 2 + pairs((G, X)) + ABD_TRACE
        log = compress_trace(trace, [ABD_SPEC], PAIR16)
        assert log.elements == (
            Symbol(1),
            RepeatCount(2),
            RawPair(G, X),
            Symbol(1),
        )

    def test_counter_saturates_at_15_bits(self):
        spec = SubPathSpec(1, pairs((A, B)))
        trace = pairs((A, B)) * 32769
        log = compress_trace(trace, [spec], PAIR16)
        assert log.elements == (
            Symbol(1),
            RepeatCount(32767),
            Symbol(1),
            RepeatCount(2),
        )
        # the serialized form stays well-formed
        assert serialize_log(log, PAIR16)

    def test_adjacent_runs_of_different_ids(self):
        s1 = SubPathSpec(1, pairs((A, B)))
        s2 = SubPathSpec(2, pairs((B, D)))
        trace = pairs((A, B), (A, B), (B, D), (B, D))
        log = compress_trace(trace, [s1, s2], PAIR16)
        assert log.elements == (Symbol(1), RepeatCount(2), Symbol(2), RepeatCount(2))


class TestExpand:
    def test_symbol_expands_to_entries(self):
        log = make_log([Symbol(1)], PAIR16)
        assert expand(log, [ABD_SPEC], PAIR16) == encode_raw(ABD_TRACE, PAIR16)

    def test_symbol_with_count_three(self):
        log = make_log([Symbol(1), RepeatCount(3)], PAIR16)
        out = expand(log, [ABD_SPEC], PAIR16)
        assert out == encode_raw(ABD_TRACE * 3, PAIR16)
        assert len(out.elements) == 9

    def test_raw_only_passthrough(self):
        log = encode_raw(pairs((A, B), (B, D)), PAIR16)
        assert expand(log, [ABD_SPEC], PAIR16) == log

    def test_unknown_symbol(self):
        log = make_log([Symbol(9)], PAIR16)
        with pytest.raises(UnknownSymbol):
            expand(log, [ABD_SPEC], PAIR16)

    def test_malformed_count_placement(self):
        log = make_log([RawPair(A, B), RepeatCount(2)], PAIR16)
        with pytest.raises(MalformedLog):
            expand(log, [ABD_SPEC], PAIR16)

    def test_round_trip_property(self):
        for seed in range(60):
            trace, specs, config = random_instance(seed)
            compressed = compress_trace(trace, specs, config)
            assert expand(compressed, specs, config) == encode_raw(trace, config)

    def test_monotone_benefit(self):
        for seed in range(60, 120):
            trace, specs, config = random_instance(seed)
            compressed = compress_trace(trace, specs, config)
            assert compressed.size_bytes <= encode_raw(trace, config).size_bytes


class TestSliceCompress:
    def test_100_pairs_at_256_bytes(self):
        trace = [Transfer(0x0400, 0x0500)] * 100
        slices = slice_compress(trace, [], PAIR16)
        assert [len(s.elements) for s in slices] == [64, 36]
        assert [s.size_bytes for s in slices] == [256, 144]

    def test_short_trace_single_slice(self):
        slices = slice_compress(pairs((A, B)), [], PAIR16)
        assert len(slices) == 1

    def test_empty_trace_single_empty_slice(self):
        slices = slice_compress([], [], PAIR16)
        assert len(slices) == 1 and slices[0].elements == ()

    def test_slice_too_small(self):
        with pytest.raises(SliceTooSmall):
            slice_compress([], [], EngineConfig(slice_size_bytes=3))

    def test_match_never_spans_boundary(self):
        # slice budget of 2 pairs; a 3-entry spec occurrence straddling the
        # boundary must stay raw in both slices
        config = EngineConfig(slice_size_bytes=8)
        trace = pairs((G, X)) + ABD_TRACE
        slices = slice_compress(trace, [ABD_SPEC], config)
        assert all(s.is_raw() for s in slices)
        assert all(s.size_bytes <= 8 for s in slices)

    def test_aligned_match_is_replaced(self):
        config = EngineConfig(slice_size_bytes=12)
        slices = slice_compress(ABD_TRACE * 2, [ABD_SPEC], config)
        assert slices[0].elements[0] == Symbol(1)

    def test_concatenated_expansion_equals_raw(self):
        for seed in range(40):
            trace, specs, config = random_instance(seed, max_trace=200)
            config = EngineConfig(
                mode=config.mode,
                addr_width=config.addr_width,
                slice_size_bytes=32,
                retry_on_mismatch=config.retry_on_mismatch,
            )
            slices = slice_compress(trace, specs, config)
            elements = []
            for s in slices:
                assert s.size_bytes <= config.slice_size_bytes
                elements.extend(expand(s, specs, config).elements)
            assert tuple(elements) == encode_raw(trace, config).elements


def test_engine_rejects_pair_transfer_without_source():
    eng = Engine([], PAIR16)
    with pytest.raises(ModeMismatch):
        eng.step(Transfer(None, 0x0400))


# --- property tests -----------------------------------------------------------

_ADDRS = st.sampled_from([0x0400, 0x0410, 0x0500, 0x0510])
_TRANSFERS = st.tuples(_ADDRS, _ADDRS).map(lambda p: Transfer(*p))


@st.composite
def traces_with_specs(draw):
    """Small-alphabet traces plus specs drawn mostly from their windows,
    so replacements actually fire."""
    trace = draw(st.lists(_TRANSFERS, max_size=80))
    specs, seen = [], set()
    for _ in range(draw(st.integers(0, 4))):
        if trace and draw(st.booleans()):
            length = draw(st.integers(1, min(6, len(trace))))
            start = draw(st.integers(0, len(trace) - length))
            entries = tuple(trace[start : start + length])
        else:
            entries = tuple(draw(st.lists(_TRANSFERS, min_size=1, max_size=4)))
        if entries not in seen:
            seen.add(entries)
            specs.append(SubPathSpec(len(specs) + 1, entries))
    return trace, specs


@given(traces_with_specs())
@settings(max_examples=150, deadline=None)
def test_lossless_and_monotone_property(ts):
    trace, specs = ts
    raw = encode_raw(trace, PAIR16)
    compressed = compress_trace(trace, specs, PAIR16)
    assert expand(compressed, specs, PAIR16) == raw
    assert compressed.size_bytes <= raw.size_bytes
    assert compressed.size_bytes == len(serialize_log(compressed, PAIR16))


@given(traces_with_specs(), st.integers(8, 40))
@settings(max_examples=80, deadline=None)
def test_sliced_expansion_property(ts, slice_size):
    trace, specs = ts
    config = EngineConfig(slice_size_bytes=slice_size)
    elements = []
    for s in slice_compress(trace, specs, config):
        assert s.size_bytes <= slice_size
        elements.extend(expand(s, specs, config).elements)
    assert tuple(elements) == encode_raw(trace, config).elements
