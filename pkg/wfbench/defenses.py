"""
.. currentmodule:: wfbench.defenses

========================================
countermeasures (:mod:`wfbench.defenses`)
========================================

Trace-to-trace countermeasures, all working on virtual time: they rewrite
sizes and time deltas and never sleep.

Padding
-------

.. autosummary::
    :toctree: generated/

    pad_random
    pad_mtu

Morphing
--------

.. autosummary::
    :toctree: generated/

    traffic_morph

:func:`wfbench.morph.morph_trace` is reached through :func:`apply_defense`
with :attr:`DefenseKind.TGPSM`.

Uniformization
--------------

Both defenses below assume the whole payload of a direction is queued when
the page load starts, so their output depends on the payload volume and the
parameters only.

.. autosummary::
    :toctree: generated/

    buflo
    tamaraw

Configuration
-------------

.. autosummary::
    :toctree: generated/

    DefenseKind
    DefenseConfig
    apply_defense

"""
import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import List, Mapping, Optional

import numpy as np

from ._trace import Direction, Packet, Trace, MAX_PACKET_SIZE
from .morph import MorphParams, jaccard, morph_trace, packet_morph, DEFAULT_SIM_THRESH

#: maximum transmission unit of the padding defenses
MTU = 1500

DEFAULT_BUFLO_TAU = 10000.0
DEFAULT_BUFLO_RHO = 20.0
DEFAULT_CELL_SIZE = 1000
DEFAULT_TAMARAW_RHO_OUT = 40.0
DEFAULT_TAMARAW_RHO_IN = 10.0
#: the two count-padding operating points
TAMARAW_L1 = 100
TAMARAW_L2 = 500


class DefenseKind(enum.Enum):
    NONE = 'none'
    PAD_RANDOM = 'pad_random'
    PAD_MTU = 'pad_mtu'
    TRAFFIC_MORPH = 'traffic_morph'
    BUFLO = 'buflo'
    TAMARAW = 'tamaraw'
    TGPSM = 'tgpsm'

    @property
    def needs_target(self) -> bool:
        return self in (DefenseKind.TRAFFIC_MORPH, DefenseKind.TGPSM)


_DEFAULTS = {
    DefenseKind.NONE: {},
    DefenseKind.PAD_RANDOM: {},
    DefenseKind.PAD_MTU: {},
    DefenseKind.TRAFFIC_MORPH: {'sim_thresh': DEFAULT_SIM_THRESH},
    DefenseKind.BUFLO: {'tau': DEFAULT_BUFLO_TAU, 'rho': DEFAULT_BUFLO_RHO, 'd': DEFAULT_CELL_SIZE},
    DefenseKind.TAMARAW: {
        'rho_out': DEFAULT_TAMARAW_RHO_OUT, 'rho_in': DEFAULT_TAMARAW_RHO_IN,
        'd': DEFAULT_CELL_SIZE, 'L': TAMARAW_L1,
    },
    DefenseKind.TGPSM: {
        'd': MorphParams.d, 'sim_thresh': MorphParams.sim_thresh, 'm': MorphParams.m,
        'alpha': MorphParams.alpha, 'bw_d_factor': MorphParams.bw_d_factor,
    },
}

_INTEGER_PARAMETERS = {'d', 'L', 'm'}


@dataclass(frozen=True)
class DefenseConfig:
    """ A countermeasure and its parameters.

    Missing parameters take the kind's defaults; unknown ones are rejected.

    >>> DefenseConfig('buflo', {'tau': 0, 'rho': 40}).label()
    'tau=0, rho=40, d=1000'
    """
    kind: DefenseKind
    parameters: Mapping = field(default_factory=dict)

    def __post_init__(self):
        kind = DefenseKind(self.kind)
        defaults = _DEFAULTS[kind]
        unknown = set(self.parameters) - set(defaults)
        if unknown:
            raise ValueError('unknown {} parameters: {}'.format(kind.value, ', '.join(sorted(unknown))))
        params = dict(defaults)
        for name, value in self.parameters.items():
            params[name] = int(value) if name in _INTEGER_PARAMETERS else float(value)
        _validate(kind, params)
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'parameters', MappingProxyType(params))

    def __getitem__(self, name):
        return self.parameters[name]

    def label(self) -> str:
        """ The parameters as ``name=value`` pairs, in declaration order """
        return ', '.join('{}={:g}'.format(k, v) for k, v in self.parameters.items())

    def morph_params(self) -> MorphParams:
        if self.kind is not DefenseKind.TGPSM:
            raise ValueError('{} has no morphing parameters'.format(self.kind.value))
        return MorphParams(**self.parameters)


def _validate(kind: DefenseKind, params: dict):
    for name in ('rho', 'rho_in', 'rho_out'):
        if name in params and not params[name] > 0:
            raise ValueError('{} must be positive, not {}'.format(name, params[name]))
    if kind in (DefenseKind.BUFLO, DefenseKind.TAMARAW) and not 1 <= params['d'] <= MAX_PACKET_SIZE:
        raise ValueError('d must lie in [1, {}], not {}'.format(MAX_PACKET_SIZE, params['d']))
    if params.get('tau', 0) < 0:
        raise ValueError('tau must be non-negative')
    if params.get('L', 1) < 1:
        raise ValueError('L must be at least 1')
    if kind is DefenseKind.TGPSM:
        MorphParams(**params)
    if kind is DefenseKind.TRAFFIC_MORPH and not 0 <= params['sim_thresh'] <= 1:
        raise ValueError('sim_thresh must lie in [0, 1]')


def pad_random(trace: Trace, seed: int = 0) -> Trace:
    """ Pads each packet by a uniform amount that keeps it within the MTU """
    rng = np.random.default_rng(seed)
    room = np.maximum(MTU - trace.sizes, 0)
    return Trace(trace.site_id, trace.directions, trace.time_deltas, trace.sizes + rng.integers(0, room + 1))


def pad_mtu(trace: Trace) -> Trace:
    """ Pads every packet to the MTU; larger packets keep their size """
    return Trace(trace.site_id, trace.directions, trace.time_deltas, np.maximum(trace.sizes, MTU))


def _rank_sampler(source_sizes: np.ndarray, target_sizes: np.ndarray, rng: np.random.Generator):
    """
    Draws a target size for each source size by rank: a uniform point of the
    source size's interval of the source distribution function is read off
    the target's quantile function. Marginally the draws follow the target
    distribution, and a target equal to the source maps every size to itself.
    """
    src = np.sort(source_sizes)
    tgt = np.sort(target_sizes)

    def sample(size: int) -> int:
        lo = np.searchsorted(src, size, side='left') / len(src)
        hi = np.searchsorted(src, size, side='right') / len(src)
        u = rng.uniform(lo, hi)
        return int(tgt[min(int(u * len(tgt)), len(tgt) - 1)])
    return sample


def traffic_morph(trace: Trace, target: Trace, sim_thresh: float = DEFAULT_SIM_THRESH, seed: int = 0) -> Trace:
    """
    Reshapes packets to sizes drawn from ``target``'s per-direction size distribution.

    Packets are padded or fragmented onto the drawn size as in
    :func:`~wfbench.morph.packet_morph`, without extra delay. Once the sizes
    emitted so far reach Jaccard similarity ``sim_thresh`` with the target's
    sizes, the remaining packets pass; ``sim_thresh = 0`` therefore morphs
    nothing. Directions the target never uses pass unchanged.
    """
    rng = np.random.default_rng(seed)
    samplers = {}
    for direction in Direction:
        mask_src = trace.directions == int(direction)
        mask_tgt = target.directions == int(direction)
        if mask_src.any() and mask_tgt.any():
            samplers[direction] = _rank_sampler(trace.sizes[mask_src], target.sizes[mask_tgt], rng)
    target_sizes = set(target.sizes.tolist())

    emitted: List[Packet] = []
    out_sizes = set()
    done = jaccard(out_sizes, target_sizes) >= sim_thresh
    for p in trace:
        sampler = samplers.get(p.direction)
        if done or sampler is None:
            out = [p]
        else:
            out = packet_morph(p, Packet(p.direction, 0.0, sampler(p.size_bytes)))
        emitted.extend(out)
        out_sizes.update(q.size_bytes for q in out)
        if not done:
            done = jaccard(out_sizes, target_sizes) >= sim_thresh
    return Trace.from_packets(trace.site_id, emitted)


def _uniform_schedule(n_packets: int, rho: float) -> np.ndarray:
    return np.arange(n_packets) * rho


def _merge_schedules(site_id, schedules, d: int) -> Trace:
    """ Interleaves per-direction send times into one trace, outgoing first on ties """
    times, directions = [], []
    for direction in (Direction.OUTGOING, Direction.INCOMING):
        t = schedules.get(direction)
        if t is not None and len(t):
            times.append(t)
            directions.append(np.full(len(t), int(direction), dtype=np.int8))
    if not times:
        return Trace(site_id, [], [], [])
    times = np.concatenate(times)
    directions = np.concatenate(directions)
    order = np.lexsort((directions, times))
    times = times[order]
    deltas = np.diff(times, prepend=times[0])
    return Trace(site_id, directions[order], deltas, np.full(len(times), d))


def buflo(trace: Trace, tau: float = DEFAULT_BUFLO_TAU, rho: float = DEFAULT_BUFLO_RHO,
          d: int = DEFAULT_CELL_SIZE) -> Trace:
    """
    Sends one ``d``-byte packet every ``rho`` ms in each active direction.

    A direction keeps sending until its payload is carried and at least
    ``tau`` ms have passed, so it sends ``max(ceil(B / d), ceil(tau / rho) + 1)``
    packets for a payload of ``B`` bytes.
    """
    DefenseConfig(DefenseKind.BUFLO, {'tau': tau, 'rho': rho, 'd': d})
    stats = trace.stats()
    minimum = math.ceil(tau / rho) + 1
    schedules = {}
    for direction, payload in ((Direction.OUTGOING, stats.bytes_up), (Direction.INCOMING, stats.bytes_down)):
        if payload:
            schedules[direction] = _uniform_schedule(max(-(-payload // d), minimum), rho)
    return _merge_schedules(trace.site_id, schedules, d)


def tamaraw(trace: Trace, rho_out: float = DEFAULT_TAMARAW_RHO_OUT, rho_in: float = DEFAULT_TAMARAW_RHO_IN,
            d: int = DEFAULT_CELL_SIZE, L: int = TAMARAW_L1) -> Trace:
    """
    Like :func:`buflo` with a separate interval per direction, and each
    direction's packet count padded up to a multiple of ``L``.
    """
    DefenseConfig(DefenseKind.TAMARAW, {'rho_out': rho_out, 'rho_in': rho_in, 'd': d, 'L': L})
    stats = trace.stats()
    schedules = {}
    for direction, payload, rho in (
        (Direction.OUTGOING, stats.bytes_up, rho_out),
        (Direction.INCOMING, stats.bytes_down, rho_in),
    ):
        if payload:
            n = -(-payload // d)
            schedules[direction] = _uniform_schedule(-(-n // L) * L, rho)
    return _merge_schedules(trace.site_id, schedules, d)


def apply_defense(trace: Trace, config: DefenseConfig, seed: int = 0, target: Optional[Trace] = None) -> Trace:
    """
    Applies ``config`` to ``trace``.

    ``target`` is the destination trace of the morphing kinds and is ignored
    by the others.
    """
    kind = config.kind
    if kind.needs_target and target is None:
        raise ValueError('{} needs a target trace'.format(kind.value))
    if kind is DefenseKind.NONE:
        return trace
    if kind is DefenseKind.PAD_RANDOM:
        return pad_random(trace, seed)
    if kind is DefenseKind.PAD_MTU:
        return pad_mtu(trace)
    if kind is DefenseKind.TRAFFIC_MORPH:
        return traffic_morph(trace, target, config['sim_thresh'], seed)
    if kind is DefenseKind.BUFLO:
        return buflo(trace, **config.parameters)
    if kind is DefenseKind.TAMARAW:
        return tamaraw(trace, **config.parameters)
    return morph_trace(trace, target, config.morph_params(), seed).output
