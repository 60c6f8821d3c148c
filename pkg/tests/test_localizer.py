import io
import itertools
import random

import pytest

from valoc.localizer import emit_cut_spec, lookup_span, write_cut_specs

from conftest import make_segments


def brute_force_span(segments):
    """Oracle: scan labeled segments for min start and max start + that
    segment's duration; all-zero falls back to the top-probability segment."""
    labeled = [s for s in segments if s.label == 1]
    fallback = not labeled
    if fallback:
        best = None
        for s in segments:
            if best is None or s.predicted_prob > best.predicted_prob:
                best = s
        labeled = [best]
    start = min(s.start_s for s in labeled)
    arg = None
    for s in labeled:
        if arg is None or s.start_s > arg.start_s:
            arg = s
    return start, arg.start_s + arg.duration_s, fallback


class TestLookup:
    def test_contiguous_block(self):
        segs = make_segments(
            [(0, 5), (5, 5), (10, 5), (15, 5)], labels=[0, 1, 1, 0], probs=[0.1, 0.9, 0.8, 0.2]
        )
        res = lookup_span(segs)
        assert (res.span.start_s, res.span.end_s) == (5, 15)
        assert res.fallback_used is False

    def test_single_positive(self):
        segs = make_segments([(2.5, 1.5)], labels=[1], probs=[0.9])
        res = lookup_span(segs)
        assert (res.span.start_s, res.span.end_s) == (2.5, 4.0)

    def test_all_zero_uses_highest_probability(self):
        segs = make_segments([(0, 5), (5, 5), (10, 5)], labels=[0, 0, 0], probs=[0.1, 0.9, 0.2])
        res = lookup_span(segs)
        assert (res.span.start_s, res.span.end_s) == (5, 10)
        assert res.fallback_used is True

    def test_all_zero_probability_tie_prefers_smaller_seg_id(self):
        segs = make_segments([(0, 5), (5, 5)], labels=[0, 0], probs=[0.4, 0.4])
        res = lookup_span(segs)
        assert res.span.start_s == 0

    def test_non_contiguous_positives_bridge_gaps(self):
        segs = make_segments([(0, 5), (5, 5), (10, 5)], labels=[1, 0, 1], probs=[0.9, 0.1, 0.9])
        res = lookup_span(segs)
        assert (res.span.start_s, res.span.end_s) == (0, 15)

    def test_empty_list_errors(self):
        with pytest.raises(ValueError):
            lookup_span([])

    def test_missing_prob_errors(self):
        segs = make_segments([(0, 5)], labels=[1])
        with pytest.raises(ValueError, match="missing"):
            lookup_span(segs)

    def test_per_segment_ordered_by_id(self):
        segs = make_segments([(0, 5), (5, 5)], labels=[0, 1], probs=[0.2, 0.8])
        res = lookup_span(tuple(reversed(segs)))
        assert [sid for sid, _, _ in res.per_segment] == [0, 1]

    def test_exhaustive_against_oracle_over_12_segments(self):
        rng = random.Random(0)
        starts = []
        t = 0.0
        for _ in range(12):
            starts.append((t, rng.uniform(1.0, 8.0)))
            t = starts[-1][0] + starts[-1][1] + rng.uniform(0.0, 2.0)
        probs = [rng.random() for _ in range(12)]
        for bits in itertools.product((0, 1), repeat=12):
            segs = make_segments(starts, labels=list(bits), probs=probs)
            res = lookup_span(segs)
            want_start, want_end, want_fb = brute_force_span(segs)
            assert res.span.start_s == want_start
            assert res.span.end_s == want_end
            assert res.fallback_used == want_fb
            assert res.fallback_used == (sum(bits) == 0)
            # span stays inside the video bounds
            assert res.span.start_s >= segs[0].start_s
            assert res.span.end_s <= segs[-1].start_s + segs[-1].duration_s


class TestCutSpec:
    def test_formatting(self):
        segs = make_segments([(5, 5), (10, 5)], video_id="v1", labels=[1, 1], probs=[0.9, 0.9])
        res = lookup_span(segs)
        assert emit_cut_spec(res, "a.mp4") == "v1,a.mp4,5.000,15.000"

    def test_fractional_seconds(self):
        segs = make_segments([(2.5, 1.5)], video_id="v2", labels=[1], probs=[0.9])
        res = lookup_span(segs)
        assert emit_cut_spec(res, "b.mp4").endswith(",2.500,4.000")

    def test_batch_preserves_order_and_terminates_lines(self):
        results = []
        for vid, start in (("a", 0), ("b", 5), ("c", 10)):
            segs = make_segments([(start, 5)], video_id=vid, labels=[1], probs=[0.9])
            results.append((lookup_span(segs), f"{vid}.mp4"))
        buf = io.StringIO()
        write_cut_specs(results, buf)
        lines = buf.getvalue().split("\n")
        assert lines[-1] == ""  # newline-terminated
        assert [l.split(",")[0] for l in lines[:-1]] == ["a", "b", "c"]
