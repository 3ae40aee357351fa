import warnings

import numpy as np
import pytest

from wfbench import DataQualityWarning, Direction, Packet, Trace
from wfbench.morph import (
    Decision, MorphParams, MorphState, StreamMorpher,
    jaccard, packet_morph, gf_morph, morph_trace,
)
from wfbench.synth import synth_generate


def random_trace(rng, site_id='x', max_len=60):
    n = int(rng.integers(1, max_len + 1))
    return Trace(
        site_id,
        rng.choice([-1, 1], n),
        np.round(rng.exponential(5.0, n), 3),
        rng.choice([52, 100, 576, 1000, 1500, int(rng.integers(1, 3000))], n),
    )


def incoming(*sizes, site_id='x'):
    return Trace(site_id, [1] * len(sizes), [1.0] * len(sizes), sizes)


@pytest.fixture(scope='module')
def corpus():
    return synth_generate(n_sites=4, traces_per_site=3, seed=11)


class TestJaccard:

    @pytest.mark.parametrize('a, b, expected', [
        ([100, 200, 300], [200, 300, 400], 0.5),
        ([100, 100], [100], 1.0),
        ([], [], 1.0),
        ([1], [], 0.0),
    ])
    def test_values(self, a, b, expected):
        assert jaccard(a, b) == expected

    def test_packets(self):
        p = [Packet(1, 0, 100), Packet(-1, 0, 200)]
        assert jaccard(p, [100]) == 0.5


class TestPacketMorph:

    def test_pad(self):
        out = packet_morph(Packet(1, 2.0, 100), Packet(1, 5.0, 576))
        assert out == [Packet(1, 5.0, 576)]

    def test_fragment(self):
        out = packet_morph(Packet(1, 7.0, 1500), Packet(1, 1.0, 576))
        assert [q.size_bytes for q in out] == [576, 576, 576]
        assert [q.time_delta_ms for q in out] == [7.0, 1.0, 1.0]

    def test_exact_multiple(self):
        out = packet_morph(Packet(-1, 0.0, 1000), Packet(-1, 0.0, 500))
        assert [q.size_bytes for q in out] == [500, 500]

    def test_direction_mismatch(self):
        with pytest.raises(ValueError):
            packet_morph(Packet(1, 0, 100), Packet(-1, 0, 100))


class TestGoalFunction:

    def test_pass_wins_without_prefix(self):
        state = MorphState()
        score_pass, score_morph = gf_morph(state, Packet(1, 0, 100), Packet(1, 0, 1500), MorphParams())
        assert score_pass == 0
        assert score_morph < score_pass

    def test_morph_wins_on_matching_prefix(self):
        state = MorphState()
        state.add_prefix(1500)
        score_pass, score_morph = gf_morph(state, Packet(1, 0, 100), Packet(1, 0, 1500), MorphParams(alpha=1e-4))
        assert score_morph > score_pass

    def test_larger_d_weakens_penalty(self):
        state = MorphState()
        state.add_prefix(1500)
        p, target = Packet(1, 0, 100), Packet(1, 0, 1500)
        _, low = gf_morph(state, p, target, MorphParams(d=1))
        _, high = gf_morph(state, p, target, MorphParams(d=9))
        assert high > low

    def test_incremental_similarity(self):
        state = MorphState()
        for s in (100, 200):
            state.add_prefix(s)
        for s in (200, 300, 300):
            state.add_output(s)
        assert state.inter / state.union == pytest.approx(jaccard([200, 300], [100, 200]))


class TestMorphParams:

    def test_budget(self):
        assert MorphParams(d=3).overhead_budget == 75

    @pytest.mark.parametrize('kwargs', [
        dict(d=0), dict(sim_thresh=1.5), dict(m=0), dict(alpha=0), dict(bw_d_factor=-1),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            MorphParams(**kwargs)


class TestMorphTrace:

    def test_self_morph_is_identity(self, corpus):
        for ws in corpus:
            t = ws.traces[0]
            r = morph_trace(t, t)
            assert r.output == t
            assert r.overhead_percent == 0
            assert r.added_delay_ms == 0
            assert set(r.decisions) == {Decision.MORPHED}
            assert all(s == 1.0 for s in r.slice_similarity)

    @pytest.mark.parametrize('m', [1, 10])
    def test_properties_on_random_triples(self, m):
        rng = np.random.default_rng(m)
        for _ in range(500):
            src, dst = random_trace(rng), random_trace(rng, 'y')
            params = MorphParams(d=int(rng.integers(1, 10)), sim_thresh=float(rng.random()), m=m)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DataQualityWarning)
                r = morph_trace(src, dst, params)
            out = r.output
            before, after = src.stats(), out.stats()
            assert after.bytes_up >= before.bytes_up
            assert after.bytes_down >= before.bytes_down
            assert np.all(out.time_deltas >= 0)
            assert r.added_delay_ms >= -1e-9
            assert out.site_id == src.site_id
            assert len(r.decisions) == len(src)
            assert r.overhead_percent == pytest.approx(
                100 * (after.total_bytes - before.total_bytes) / before.total_bytes)
            again = morph_trace(src, dst, params, seed=123)
            assert again.output == out

    def test_unmatched_direction_passes(self):
        src = Trace('x', [-1, -1], [0, 1], [52, 52])
        r = morph_trace(src, incoming(1500), MorphParams(m=1))
        assert r.decisions == (Decision.PASSED, Decision.PASSED)
        assert r.output == src

    def test_exhausted_destination_wraps(self):
        params = MorphParams(m=1, sim_thresh=0.0, bw_d_factor=1e9)
        r = morph_trace(incoming(1500, 1500, 1500), incoming(1500), params)
        assert r.decisions == (Decision.MORPHED,) * 3
        assert r.cover_packets == 0

    def test_long_source_keeps_no_own_sizes(self):
        params = MorphParams(m=1, sim_thresh=0.0, alpha=1e-6, bw_d_factor=1e9)
        r = morph_trace(incoming(700, 700, 700, 700), incoming(1500, 1000), params)
        assert r.decisions == (Decision.MORPHED,) * 4
        assert r.output.sizes.tolist() == [1500, 1000, 1500, 1000]

    def test_source_sizes_do_not_survive(self, corpus):
        params = MorphParams(d=9, sim_thresh=0.0)
        dst = corpus['site003'].traces[0]
        for src in corpus['site000'].traces:
            own = set(src.sizes.tolist()) - set(dst.sizes.tolist())
            survived = own & set(morph_trace(src, dst, params).output.sizes.tolist())
            assert len(survived) <= 0.25 * len(own)

    @pytest.mark.parametrize('d, sizes', [(1, [1500, 1500]), (3, [1500] * 4)])
    def test_cover_within_budget(self, d, sizes):
        params = MorphParams(d=d, m=1, bw_d_factor=100)
        r = morph_trace(incoming(1500), incoming(1500, 1500, 1500, 1500), params)
        assert r.decisions == (Decision.MORPHED,)
        assert r.output.sizes.tolist() == sizes
        assert r.cover_packets == len(sizes) - 1
        assert r.overhead_percent == pytest.approx(100 * (len(sizes) - 1))

    def test_no_cover_past_budget(self):
        params = MorphParams(d=1, sim_thresh=1.0, m=1, alpha=1e-9, bw_d_factor=1e-6)
        r = morph_trace(incoming(100), incoming(1500, 1400), params)
        assert r.cover_packets == 0
        assert r.output.sizes.tolist() == [1500]

    def test_overhead_budget_aborts_slice(self):
        params = MorphParams(d=1, sim_thresh=1.0, m=1, alpha=1e-9, bw_d_factor=1e-6)
        r = morph_trace(incoming(100, 100, 100, 100), incoming(1500, 1400, 1300), params)
        assert r.decisions == (Decision.MORPHED,) + (Decision.SLICE_ABORTED,) * 3
        assert r.output.sizes.tolist() == [1500, 100, 100, 100]
        assert r.overhead_percent == pytest.approx(350.0)
        assert r.slice_similarity == pytest.approx((1 / 4,))

    def test_generous_budget_morphs(self):
        params = MorphParams(d=1, sim_thresh=1.0, m=1, alpha=1e-9, bw_d_factor=1e9)
        r = morph_trace(incoming(100, 100, 100), incoming(1500, 1400, 1300), params)
        assert r.output.sizes.tolist() == [1500, 1400, 1300]
        assert r.slice_similarity == (1.0,)

    def test_short_destination_reduces_slices(self):
        with pytest.warns(DataQualityWarning):
            r = morph_trace(incoming(100, 200, 300), incoming(100, 200), MorphParams(m=10))
        assert len(r.slice_similarity) <= 2

    def test_empty_destination(self):
        with pytest.raises(ValueError):
            morph_trace(incoming(100), Trace('y', [], [], []))

    def test_empty_source(self):
        r = morph_trace(Trace('x', [], [], []), incoming(100))
        assert len(r.output) == 0
        assert r.overhead_percent == 0

    def test_stream_matches_batch(self, corpus):
        src, dst = corpus['site000'].traces[0], corpus['site002'].traces[1]
        params = MorphParams(d=5)
        morpher = StreamMorpher(dst, params)
        streamed = [q for p in src for q in morpher.push(p)] + morpher.close()
        batch = morph_trace(iter(src.packets), dst, params, site_id='site000')
        assert Trace.from_packets('site000', streamed) == batch.output

    def test_closed_stream(self):
        morpher = StreamMorpher(incoming(1500, 1500), MorphParams(m=1, bw_d_factor=100))
        morpher.push(Packet(1, 0, 1500))
        assert len(morpher.close()) == 1
        assert morpher.close() == []
        with pytest.raises(ValueError):
            morpher.push(Packet(1, 0, 1500))

    def test_first_delay_not_counted(self):
        dst = Trace('y', [1, 1], [0, 50], [1500, 1500])
        r = morph_trace(incoming(1500, 1500), dst, MorphParams(m=1))
        assert r.output.time_deltas.tolist() == [0, 50]
        assert r.added_delay_ms == pytest.approx(49.0)
        assert r.output.stats().duration_ms - incoming(1500, 1500).stats().duration_ms == \
            pytest.approx(r.added_delay_ms)
        assert Direction(r.output.directions[0]) is Direction.INCOMING
