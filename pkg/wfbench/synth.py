"""
.. currentmodule:: wfbench.synth

==========================================
synthetic datasets (:mod:`wfbench.synth`)
==========================================

A seeded generator of page-load traces, so that experiments run without a
crawled dataset.

Every site gets a latent page profile: a list of objects, each with a
response size, a request size and a gap before it is requested. A visit
replays the profile with some noise: objects may be missing, a share of
the objects (the "dynamic" ones) change size slightly, and all timings
jitter. Responses are cut into MTU-sized incoming packets acknowledged by
small outgoing packets.

.. autosummary::
    :toctree: generated/

    SynthProfile
    synth_generate

"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ._trace import Trace, Website, Dataset, Provenance, POOL_SIZE


@dataclass(frozen=True)
class SynthProfile:
    """ Parameters of the synthetic page model.

    The defaults give realistically skewed sites that a classifier without
    any defense tells apart easily.
    """
    objects_range: Tuple[int, int] = (5, 50)
    object_size_mu: float = 9.0
    object_size_sigma: float = 1.0
    object_size_bounds: Tuple[int, int] = (100, 65535)
    request_size_range: Tuple[int, int] = (300, 700)
    mtu: int = 1500
    ack_size: int = 52
    ack_every: int = 2
    #: share of objects whose size is identical in every visit
    static_fraction: float = 0.7
    #: sigma of the multiplicative log-normal noise on dynamic object sizes
    size_noise: float = 0.05
    #: mean gap before an object is requested, before the per-site scaling
    gap_scale: float = 40.0
    gap_noise: float = 0.3
    packet_gap_ms: float = 0.8
    drop_prob: float = 0.05

    def __post_init__(self):
        lo, hi = self.objects_range
        if not 1 <= lo <= hi:
            raise ValueError('invalid objects_range {}'.format(self.objects_range))
        if not 0 <= self.static_fraction <= 1 or not 0 <= self.drop_prob < 1:
            raise ValueError('fractions must lie in [0, 1)')
        if self.mtu < 1 or self.ack_every < 1:
            raise ValueError('mtu and ack_every must be positive')


DEFAULT_PROFILE = SynthProfile()


class _PageModel:
    """ The latent profile of one site, drawn once per (seed, site). """
    def __init__(self, profile: SynthProfile, rng: np.random.Generator):
        lo, hi = profile.objects_range
        n = int(rng.integers(lo, hi + 1))
        smin, smax = profile.object_size_bounds
        self.sizes = np.clip(np.rint(rng.lognormal(profile.object_size_mu, profile.object_size_sigma, n)),
                             smin, smax).astype(np.int64)
        rlo, rhi = profile.request_size_range
        self.requests = rng.integers(rlo, rhi + 1, n)
        self.static = rng.random(n) < profile.static_fraction
        self.gaps = rng.exponential(profile.gap_scale * rng.lognormal(0.0, 0.5), n)
        self.hello = int(rng.integers(200, 600))
        self.certificate = int(rng.integers(1000, 5000))


def _visit(site_id, page: _PageModel, profile: SynthProfile, rng: np.random.Generator) -> Trace:
    directions, deltas, sizes = [], [], []

    def emit(d, t, s):
        directions.append(d)
        deltas.append(round(t, 3))
        sizes.append(s)

    def response(total, gap):
        full, rem = divmod(int(total), profile.mtu)
        chunks = [profile.mtu] * full + ([rem] if rem else [])
        for i, chunk in enumerate(chunks):
            emit(1, gap if i == 0 else rng.exponential(profile.packet_gap_ms), chunk)
            if (i + 1) % profile.ack_every == 0:
                emit(-1, rng.exponential(profile.packet_gap_ms / 4), profile.ack_size)

    # connection setup
    emit(-1, 0.0, page.hello)
    response(page.certificate, rng.exponential(20.0))

    smin, smax = profile.object_size_bounds
    for j in range(len(page.sizes)):
        if rng.random() < profile.drop_prob:
            continue
        size = page.sizes[j]
        if not page.static[j]:
            size = int(np.clip(round(size * rng.lognormal(0.0, profile.size_noise)), smin, smax))
        gap = page.gaps[j] * rng.lognormal(0.0, profile.gap_noise)
        emit(-1, gap, int(page.requests[j]))
        response(size, rng.exponential(10.0))
    return Trace(site_id, directions, deltas, sizes)


def synth_generate(profile: SynthProfile = DEFAULT_PROFILE, n_sites: int = 32,
                   traces_per_site: int = 20, seed: int = 0) -> Dataset:
    """
    Generates a synthetic dataset.

    The result is a pure function of the arguments: site ``i`` draws its page
    model from ``(seed, i)`` and its ``j``-th trace from ``(seed, i, j)``, so
    changing ``n_sites`` or ``traces_per_site`` never alters the traces that
    both runs share.

    Parameters
    ----------
    profile : SynthProfile
    n_sites : int
        At least 2.
    traces_per_site : int
        At least 1; experiments need ``t_train + t_test`` of them.
    seed : int
    """
    if not 2 <= n_sites <= POOL_SIZE:
        raise ValueError('n_sites must lie in [2, {}], not {}'.format(POOL_SIZE, n_sites))
    if traces_per_site < 1:
        raise ValueError('traces_per_site must be positive, not {}'.format(traces_per_site))
    if seed < 0:
        raise ValueError('seed must be non-negative')
    websites = {}
    for i in range(n_sites):
        site_id = 'site{:03d}'.format(i)
        page = _PageModel(profile, np.random.default_rng([seed, i]))
        traces = [
            _visit(site_id, page, profile, np.random.default_rng([seed, i, j]))
            for j in range(traces_per_site)
        ]
        websites[site_id] = Website(site_id, traces)
    return Dataset(websites, Provenance.SYNTHETIC, seed)
