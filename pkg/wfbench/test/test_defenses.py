import numpy as np
import pytest

from wfbench import Direction, Trace
from wfbench.defenses import (
    MTU, DefenseKind, DefenseConfig, apply_defense,
    pad_random, pad_mtu, traffic_morph, buflo, tamaraw,
)
from wfbench.synth import synth_generate


@pytest.fixture(scope='module')
def corpus():
    return synth_generate(n_sites=3, traces_per_site=4, seed=2)


def random_trace(rng):
    n = int(rng.integers(1, 80))
    return Trace('x', rng.choice([-1, 1], n), rng.exponential(3.0, n), rng.integers(1, 3000, n))


def per_direction(trace, direction):
    mask = trace.directions == int(direction)
    return trace.timestamps()[mask], trace.sizes[mask]


class TestPadding:

    def test_pad_random_range(self, corpus):
        t = corpus['site000'].traces[0]
        out = pad_random(t, seed=4)
        assert np.all(out.sizes >= np.minimum(t.sizes, MTU))
        assert np.all(out.sizes[t.sizes <= MTU] <= MTU)
        np.testing.assert_equal(out.time_deltas, t.time_deltas)
        np.testing.assert_equal(out.directions, t.directions)

    def test_pad_random_mtu_unchanged(self):
        t = Trace('x', [1, 1], [0, 1], [MTU, MTU])
        assert pad_random(t, 0) == t

    def test_pad_random_seeded(self, corpus):
        t = corpus['site001'].traces[0]
        assert pad_random(t, 3) == pad_random(t, 3)
        assert pad_random(t, 3) != pad_random(t, 4)

    def test_pad_mtu(self):
        out = pad_mtu(Trace('x', [1], [0], [100]))
        assert out.sizes.tolist() == [1500]

    def test_pad_mtu_overhead(self, corpus):
        t = corpus['site002'].traces[1]
        out = pad_mtu(t)
        expected = 100 * (1500 * len(t) - t.sizes.sum()) / t.sizes.sum()
        overhead = 100 * (out.stats().total_bytes - t.stats().total_bytes) / t.stats().total_bytes
        assert overhead == pytest.approx(expected)
        assert len(out) == len(t)

    def test_pad_mtu_identity(self):
        t = Trace('x', [1, -1], [0, 2], [MTU, MTU])
        assert pad_mtu(t) == t


class TestTrafficMorph:

    def test_zero_threshold_is_identity(self, corpus):
        t = corpus['site000'].traces[0]
        assert traffic_morph(t, corpus['site001'].traces[0], sim_thresh=0.0) == t

    def test_own_distribution(self, corpus):
        for seed in range(50):
            t = corpus['site000'].traces[seed % 4]
            assert traffic_morph(t, t, sim_thresh=1.0, seed=seed) == t

    def test_samples_target_sizes(self, corpus):
        src, dst = corpus['site000'].traces[0], corpus['site001'].traces[0]
        out = traffic_morph(src, dst, sim_thresh=1.0, seed=1)
        first = out.packets[0]
        _, target_sizes = per_direction(dst, first.direction)
        if len(target_sizes):
            assert first.size_bytes in target_sizes.tolist()
        assert out.stats().bytes_up >= src.stats().bytes_up
        assert out.stats().bytes_down >= src.stats().bytes_down

    def test_seeded(self, corpus):
        src, dst = corpus['site000'].traces[1], corpus['site002'].traces[0]
        assert traffic_morph(src, dst, 0.9, seed=5) == traffic_morph(src, dst, 0.9, seed=5)

    def test_missing_direction_passes(self):
        src = Trace('x', [-1, 1], [0, 1], [52, 700])
        dst = Trace('y', [1], [0], [1500])
        out = traffic_morph(src, dst, sim_thresh=1.0)
        assert out.sizes.tolist() == [52, 1500]


class TestBuFLO:

    def test_tiny_payload(self):
        out = buflo(Trace('x', [1], [0], [1]), tau=10000, rho=20, d=1000)
        assert len(out) >= 500
        assert set(out.directions.tolist()) == {int(Direction.INCOMING)}

    def test_exact_fill_without_tau(self):
        out = buflo(Trace('x', [1, 1, 1], [0, 1, 1], [1000, 1000, 1000]), tau=0, rho=40, d=1000)
        assert len(out) == 3
        assert out.stats().total_bytes == 3000

    @pytest.mark.parametrize('tau, rho, d', [
        (10000, 20, 1000), (0, 40, 1000), (10000, 40, 1000), (0, 20, 1000),
    ])
    def test_uniform(self, tau, rho, d):
        rng = np.random.default_rng(int(tau + rho))
        for _ in range(100):
            t = random_trace(rng)
            out = buflo(t, tau, rho, d)
            assert np.all(out.sizes == d)
            assert out.stats().duration_ms >= tau
            assert out.stats().total_bytes >= t.stats().total_bytes
            for direction in Direction:
                times, _ = per_direction(out, direction)
                np.testing.assert_allclose(np.diff(times), rho)

    def test_depends_only_on_volume(self):
        a = Trace('x', [1, -1, 1], [0, 5, 80], [700, 300, 800])
        b = Trace('x', [-1, 1], [0, 2], [300, 1500])
        assert buflo(a, 500, 20, 1000) == buflo(b, 500, 20, 1000)

    def test_invalid(self):
        with pytest.raises(ValueError):
            buflo(Trace('x', [1], [0], [10]), tau=0, rho=0, d=1000)


class TestTamaraw:

    def test_pads_count_to_multiple(self):
        t = Trace('x', [1] * 7, [0] * 7, [1000] * 7)
        out = tamaraw(t, d=1000, L=10)
        assert len(out) == 10
        assert len(tamaraw(t, d=1000, L=1)) == 7

    @pytest.mark.parametrize('L', [1, 100, 500])
    def test_counts_multiple_of_L(self, L):
        rng = np.random.default_rng(L)
        for _ in range(50):
            out = tamaraw(random_trace(rng), rho_out=40, rho_in=10, d=1000, L=L)
            for direction in Direction:
                assert np.sum(out.directions == int(direction)) % L == 0

    def test_direction_intervals(self, corpus):
        out = tamaraw(corpus['site000'].traces[0], rho_out=40, rho_in=10, d=600, L=20)
        times, _ = per_direction(out, Direction.OUTGOING)
        np.testing.assert_allclose(np.diff(times), 40)
        times, _ = per_direction(out, Direction.INCOMING)
        np.testing.assert_allclose(np.diff(times), 10)
        assert np.all(out.sizes == 600)


class TestDefenseConfig:

    def test_defaults(self):
        c = DefenseConfig('tamaraw')
        assert c.kind is DefenseKind.TAMARAW
        assert dict(c.parameters) == {'rho_out': 40.0, 'rho_in': 10.0, 'd': 1000, 'L': 100}

    def test_label(self):
        assert DefenseConfig('tgpsm', {'d': 5}).label() == 'd=5, sim_thresh=0.7, m=10, alpha=0.01, bw_d_factor=25'

    def test_parameters_read_only(self):
        c = DefenseConfig('buflo')
        with pytest.raises(TypeError):
            c.parameters['tau'] = 1

    @pytest.mark.parametrize('kind, params', [
        ('buflo', {'rho': 0}),
        ('buflo', {'d': 70000}),
        ('buflo', {'tau': -1}),
        ('tamaraw', {'L': 0}),
        ('tgpsm', {'d': 0}),
        ('traffic_morph', {'sim_thresh': 2}),
        ('pad_mtu', {'tau': 1}),
        ('bogus', {}),
    ])
    def test_invalid(self, kind, params):
        with pytest.raises(ValueError):
            DefenseConfig(kind, params)

    def test_morph_params(self):
        p = DefenseConfig('tgpsm', {'d': 7, 'alpha': 1}).morph_params()
        assert (p.d, p.alpha) == (7, 1.0)
        with pytest.raises(ValueError):
            DefenseConfig('buflo').morph_params()


class TestApplyDefense:

    def test_none_is_identity(self, corpus):
        t = corpus['site000'].traces[0]
        assert apply_defense(t, DefenseConfig('none')) is t

    @pytest.mark.parametrize('kind', ['pad_random', 'pad_mtu', 'buflo', 'tamaraw'])
    def test_dispatch(self, corpus, kind):
        t = corpus['site000'].traces[0]
        out = apply_defense(t, DefenseConfig(kind), seed=1)
        assert out.stats().total_bytes >= t.stats().total_bytes
        assert out.site_id == t.site_id

    @pytest.mark.parametrize('kind', ['traffic_morph', 'tgpsm'])
    def test_targets(self, corpus, kind):
        t = corpus['site000'].traces[0]
        with pytest.raises(ValueError):
            apply_defense(t, DefenseConfig(kind))
        out = apply_defense(t, DefenseConfig(kind), seed=1, target=corpus['site001'].traces[0])
        assert out.site_id == 'site000'
        assert out.stats().total_bytes >= t.stats().total_bytes

    def test_tgpsm_self_target(self, corpus):
        t = corpus['site002'].traces[0]
        assert apply_defense(t, DefenseConfig('tgpsm', {'d': 3}), target=t) == t
