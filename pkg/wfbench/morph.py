"""
.. currentmodule:: wfbench.morph

=====================================
stream morphing (:mod:`wfbench.morph`)
=====================================

Greedy, slice-by-slice morphing of a source packet stream toward a
destination trace.

The destination is cut into ``m`` slices (see :func:`~wfbench.features.slice_bounds`)
and the source stream is grouped into ``m`` slices. Since the source length
is unknown while streaming, the next source slice gets as many packets as
its destination slice, scaled by the ratio of source bytes to destination
bytes of the slices done so far; the first slice is as long as the first
destination slice. The estimate only decides where slices change, so a
source slice may well run longer or shorter than its destination slice.

Within a slice every source packet is either passed unchanged or morphed
onto the next destination packet of the same direction, by padding,
fragmentation and delaying (:func:`packet_morph`). When the source slice
outlasts the destination slice, the cursor wraps around and morphing goes on
over the same destination packets. The choice compares the goal function
:func:`gf_morph` of both actions: the Jaccard similarity between the packet
sizes emitted so far in the slice and the destination slice prefix, minus
``alpha / d`` times the cumulative byte overhead in percent. Equal scores
morph.

Once the overhead exceeds the budget ``d * bw_d_factor`` percent while the
current slice's similarity to its destination slice is still below
``sim_thresh``, the rest of the source slice passes unchanged.

When the source stream ends, destination packets that no source slice
reached are sent as cover packets, in destination order, for as long as
the overhead stays within the budget. A larger ``d`` therefore buys an
output whose volume is closer to the destination's.

Incoming and outgoing packets keep separate destination cursors, and
source packets are emitted in source order.

.. autosummary::
    :toctree: generated/

    MorphParams
    MorphState
    MorphedTrace
    Decision
    StreamMorpher
    jaccard
    packet_morph
    gf_morph
    morph_trace

"""
import enum
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple, Union

from . import DataQualityWarning
from ._trace import Direction, Packet, Trace
from .features import slice_bounds, DEFAULT_M

DEFAULT_ALPHA = 0.01
DEFAULT_BW_D_FACTOR = 25.0
DEFAULT_SIM_THRESH = 0.7


class Decision(enum.Enum):
    PASSED = 'passed'
    MORPHED = 'morphed'
    SLICE_ABORTED = 'slice_aborted'


@dataclass(frozen=True)
class MorphParams:
    """ Tuning of the morphing engine.

    Parameters
    ----------
    d : int
        Tuning factor; weakens the overhead penalty and raises the budget.
    sim_thresh : float
        Slice similarity at which morphing a slice counts as sufficient.
    m : int
        Slice count. ``m = 1`` morphs the whole trace as one slice.
    alpha : float
        Weight of the overhead penalty.
    bw_d_factor : float
        Overhead budget per unit of ``d``, in percent.
    """
    d: int = 1
    sim_thresh: float = DEFAULT_SIM_THRESH
    m: int = DEFAULT_M
    alpha: float = DEFAULT_ALPHA
    bw_d_factor: float = DEFAULT_BW_D_FACTOR

    def __post_init__(self):
        if self.d < 1:
            raise ValueError('d must be at least 1, not {}'.format(self.d))
        if not 0 <= self.sim_thresh <= 1:
            raise ValueError('sim_thresh must lie in [0, 1], not {}'.format(self.sim_thresh))
        if self.m < 1:
            raise ValueError('m must be at least 1, not {}'.format(self.m))
        if not self.alpha > 0 or not self.bw_d_factor > 0:
            raise ValueError('alpha and bw_d_factor must be positive')

    @property
    def overhead_budget(self) -> float:
        """ Overhead, in percent, above which unsimilar slices are abandoned """
        return self.d * self.bw_d_factor


def _sizes(items) -> set:
    return {p.size_bytes if isinstance(p, Packet) else int(p) for p in items}


def jaccard(a: Iterable, b: Iterable) -> float:
    """
    Jaccard similarity of the distinct packet sizes of ``a`` and ``b``.

    Items are :class:`~wfbench.Packet` objects or sizes. Two empty
    collections have similarity 1.

    >>> jaccard([100, 200, 300], [200, 300, 400])
    0.5
    """
    a, b = _sizes(a), _sizes(b)
    union = len(a | b)
    if union == 0:
        return 1.0
    return len(a & b) / union


def packet_morph(p: Packet, target: Packet) -> List[Packet]:
    """
    Reshapes ``p`` into packets of ``target``'s size.

    A smaller packet is padded up to the target size; a larger one is split
    into ``ceil(p / target)`` fragments of the target size, the last one
    padded. The first packet leaves no earlier than either packet's delay,
    further fragments follow at the target's delay.
    """
    if p.direction != target.direction:
        raise ValueError('cannot morph a {} packet onto a {} packet'.format(
            p.direction.name.lower(), target.direction.name.lower()))
    count = max(1, -(-p.size_bytes // target.size_bytes))
    first = Packet(p.direction, max(p.time_delta_ms, target.time_delta_ms), target.size_bytes)
    rest = [Packet(p.direction, target.time_delta_ms, target.size_bytes)] * (count - 1)
    return [first] + rest


def _emitted_bytes(p: Packet, target: Packet) -> int:
    return max(1, -(-p.size_bytes // target.size_bytes)) * target.size_bytes


@dataclass
class MorphState:
    """ Bookkeeping of one morphed flow.

    ``out_sizes`` and ``prefix_sizes`` are the packet size multisets emitted
    in the current slice and of the destination slice prefix seen so far;
    ``inter`` and ``union`` are the sizes of the intersection and union of
    their supports. ``cursor`` counts the morphs per direction in the slice
    and is read modulo the slice's packets of that direction.
    """
    slice_index: int = 0
    slice_length: int = 0
    src_in_slice: int = 0
    cursor: Dict[Direction, int] = field(default_factory=lambda: {Direction.OUTGOING: 0, Direction.INCOMING: 0})
    src_bytes: int = 0
    out_bytes: int = 0
    out_sizes: Counter = field(default_factory=Counter)
    prefix_sizes: Counter = field(default_factory=Counter)
    prefix_length: int = 0
    inter: int = 0
    union: int = 0
    aborting: bool = False

    @property
    def overhead_percent(self) -> float:
        if self.src_bytes == 0:
            return 0.0
        return 100.0 * (self.out_bytes - self.src_bytes) / self.src_bytes

    def _similarity_with(self, size: int) -> float:
        inter, union = self.inter, self.union
        if size not in self.out_sizes:
            if size in self.prefix_sizes:
                inter += 1
            else:
                union += 1
        return inter / union if union else 1.0

    def add_output(self, size: int):
        if size not in self.out_sizes:
            if size in self.prefix_sizes:
                self.inter += 1
            else:
                self.union += 1
        self.out_sizes[size] += 1

    def add_prefix(self, size: int):
        if size not in self.prefix_sizes:
            if size in self.out_sizes:
                self.inter += 1
            else:
                self.union += 1
        self.prefix_sizes[size] += 1
        self.prefix_length += 1

    def reset_slice(self, slice_index: int, slice_length: int):
        self.slice_index = slice_index
        self.slice_length = slice_length
        self.src_in_slice = 0
        self.cursor = {Direction.OUTGOING: 0, Direction.INCOMING: 0}
        self.out_sizes = Counter()
        self.prefix_sizes = Counter()
        self.prefix_length = 0
        self.inter = 0
        self.union = 0
        self.aborting = False


def gf_morph(state: MorphState, p: Packet, target: Packet, params: MorphParams) -> Tuple[float, float]:
    """
    Goal function values of passing ``p`` and of morphing it onto ``target``.

    Each is the slice-prefix similarity the action would leave behind minus
    ``alpha / d`` times the cumulative overhead in percent it would leave
    behind.
    """
    weight = params.alpha / params.d
    src = state.src_bytes + p.size_bytes
    ov_pass = 100.0 * (state.out_bytes + p.size_bytes - src) / src
    ov_morph = 100.0 * (state.out_bytes + _emitted_bytes(p, target) - src) / src
    score_pass = state._similarity_with(p.size_bytes) - weight * ov_pass
    score_morph = state._similarity_with(target.size_bytes) - weight * ov_morph
    return score_pass, score_morph


class _DestinationSlice(object):
    __slots__ = ('packets', 'sizes', 'by_direction', 'size_set', 'n_bytes')

    def __init__(self, dst: Trace, start: int, stop: int):
        self.sizes = dst.sizes[start:stop].tolist()
        self.packets = []
        self.by_direction = {Direction.OUTGOING: [], Direction.INCOMING: []}
        for d, t, s in zip(dst.directions[start:stop].tolist(), dst.time_deltas[start:stop].tolist(), self.sizes):
            p = Packet(Direction(d), t, s)
            self.packets.append(p)
            self.by_direction[p.direction].append(p)
        self.size_set = set(self.sizes)
        self.n_bytes = sum(self.sizes)


@dataclass(frozen=True)
class MorphedTrace:
    """ Result of morphing one source trace.

    ``slice_similarity`` holds, per visited slice, the Jaccard similarity of
    the sizes emitted in it to its destination slice. ``cover_packets``
    counts the destination packets sent after the source ended.
    """
    output: Trace
    overhead_percent: float
    added_delay_ms: float
    decisions: Tuple[Decision, ...]
    slice_similarity: Tuple[float, ...] = ()
    cover_packets: int = 0


class StreamMorpher(object):
    """ Morphs one packet stream toward ``dst``, one packet at a time.

    :meth:`push` consumes the next source packet and returns the packets to
    send in its place; nothing is held back beyond the packet in hand.
    :meth:`close` ends the stream and returns the cover packets.
    """
    def __init__(self, dst: Trace, params: MorphParams = MorphParams()):
        if len(dst) == 0:
            raise ValueError('destination trace is empty')
        m = params.m
        if len(dst) < m:
            warnings.warn('destination has {} packets; using {} slices instead of {}'.format(
                len(dst), len(dst), m), DataQualityWarning)
            m = len(dst)
        bounds = slice_bounds(len(dst), m)
        self.params = params
        self.m = m
        self._slices = [_DestinationSlice(dst, a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        self._dst_bytes_done = 0
        # destination packets of closed slices that the source never reached
        self._unreached: List[Packet] = []
        self.state = MorphState()
        self.state.reset_slice(0, len(self._slices[0].sizes))
        self.decisions: List[Decision] = []
        self.slice_similarity: List[float] = []
        self.src_duration = 0.0
        self.out_duration = 0.0
        self.closed = False

    def _current(self) -> _DestinationSlice:
        return self._slices[self.state.slice_index]

    def slice_similarity_now(self) -> float:
        """ Similarity of the current output slice to its whole destination slice """
        return jaccard(self.state.out_sizes, self._current().size_set)

    def _advance(self):
        st = self.state
        sl = self._current()
        self.slice_similarity.append(self.slice_similarity_now())
        self._unreached.extend(sl.packets[st.prefix_length:])
        self._dst_bytes_done += sl.n_bytes
        nxt = st.slice_index + 1
        ratio = st.src_bytes / self._dst_bytes_done
        length = max(1, math.ceil(len(self._slices[nxt].sizes) * ratio))
        st.reset_slice(nxt, length)

    def _emit(self, q: Packet):
        self.state.out_bytes += q.size_bytes
        self.out_duration += q.time_delta_ms

    def push(self, p: Packet) -> List[Packet]:
        if self.closed:
            raise ValueError('stream already closed')
        st = self.state
        sl = self._current()
        st.src_in_slice += 1
        while st.prefix_length < min(st.src_in_slice, len(sl.sizes)):
            st.add_prefix(sl.sizes[st.prefix_length])

        out = [p]
        if st.aborting:
            decision = Decision.SLICE_ABORTED
        else:
            decision = Decision.PASSED
            candidates = sl.by_direction[p.direction]
            if candidates:
                target = candidates[st.cursor[p.direction] % len(candidates)]
                score_pass, score_morph = gf_morph(st, p, target, self.params)
                if not score_pass > score_morph:
                    out = packet_morph(p, target)
                    st.cursor[p.direction] += 1
                    decision = Decision.MORPHED

        st.src_bytes += p.size_bytes
        for q in out:
            self._emit(q)
            st.add_output(q.size_bytes)
        self.src_duration += p.time_delta_ms
        self.decisions.append(decision)

        if st.slice_index < self.m - 1 and st.src_in_slice >= st.slice_length:
            self._advance()
        elif (not st.aborting and st.overhead_percent > self.params.overhead_budget
              and self.slice_similarity_now() < self.params.sim_thresh):
            st.aborting = True
        return out

    def close(self) -> List[Packet]:
        """
        Ends the stream and returns the cover packets to send.

        These are the destination packets no source slice reached, taken in
        destination order until the next one would push the overhead past
        the budget. An empty stream gets no cover.
        """
        if self.closed:
            return []
        self.closed = True
        st = self.state
        if st.src_bytes == 0:
            return []
        pending = self._unreached + self._current().packets[st.prefix_length:]
        for sl in self._slices[st.slice_index + 1:]:
            pending.extend(sl.packets)
        limit = st.src_bytes * (1 + self.params.overhead_budget / 100.0)
        cover = []
        for q in pending:
            if st.out_bytes + q.size_bytes > limit:
                break
            self._emit(q)
            cover.append(q)
        return cover

    def finish(self) -> Tuple[float, ...]:
        """ Closes the current slice and returns the per-slice similarities """
        if self.decisions:
            self.slice_similarity.append(self.slice_similarity_now())
        return tuple(self.slice_similarity)


def morph_trace(src: Union[Trace, Iterable[Packet]], dst: Trace, params: MorphParams = MorphParams(),
                seed: int = 0, site_id=None) -> MorphedTrace:
    """
    Morphs a source trace (or any packet stream) toward ``dst``.

    The output keeps the source's site id and ends with the cover packets
    of :meth:`StreamMorpher.close`. The engine makes no random choices, so
    the output is fully determined by ``src``, ``dst`` and ``params``;
    ``seed`` is accepted so every defense is called the same way.

    Parameters
    ----------
    src : Trace or iterable of Packet
    dst : Trace
    params : MorphParams
    seed : int
    site_id : str, optional
        Label of the output; defaults to ``src.site_id`` or ``''``.
    """
    del seed
    if site_id is None:
        site_id = src.site_id if isinstance(src, Trace) else ''
    morpher = StreamMorpher(dst, params)
    emitted: List[Packet] = []
    for p in src:
        emitted.extend(morpher.push(p))
    cover = morpher.close()
    emitted.extend(cover)
    similarities = morpher.finish()
    output = Trace.from_packets(site_id, emitted)
    first_delay = emitted[0].time_delta_ms if emitted else 0.0
    # the first output packet's delay is dropped by the trace normalization
    added_delay = (morpher.out_duration - first_delay) - morpher.src_duration
    return MorphedTrace(
        output=output,
        overhead_percent=morpher.state.overhead_percent,
        added_delay_ms=float(added_delay),
        decisions=tuple(morpher.decisions),
        slice_similarity=similarities,
        cover_packets=len(cover),
    )
