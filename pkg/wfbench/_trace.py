import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Tuple

import numpy as np


#: Largest legal packet size in bytes.
MAX_PACKET_SIZE = 65535

#: Website pool size of the reference evaluation; a dataset never holds more sites.
POOL_SIZE = 775


class Direction(enum.IntEnum):
    """ Packet direction, as seen from the client. """
    OUTGOING = -1
    INCOMING = 1

    @property
    def label(self) -> str:
        """ ``"up"`` for outgoing packets, ``"down"`` for incoming ones """
        return 'up' if self is Direction.OUTGOING else 'down'


class Provenance(enum.Enum):
    LOADED = 'loaded'
    SYNTHETIC = 'synthetic'


@dataclass(frozen=True)
class Packet:
    """ A single observed packet.

    Parameters
    ----------
    direction : Direction
        ``-1`` for outgoing and ``+1`` for incoming packets.
    time_delta_ms : float
        Milliseconds elapsed since the previous packet of the trace.
    size_bytes : int
        Packet size, ``1 <= size_bytes <= 65535``.
    """
    direction: Direction
    time_delta_ms: float
    size_bytes: int

    def __post_init__(self):
        try:
            direction = Direction(int(self.direction))
        except ValueError:
            raise ValueError('direction must be -1 or +1, not {!r}'.format(self.direction)) from None
        object.__setattr__(self, 'direction', direction)
        if not 1 <= self.size_bytes <= MAX_PACKET_SIZE:
            raise ValueError('packet size {} out of range'.format(self.size_bytes))
        if not self.time_delta_ms >= 0:
            raise ValueError('time delta must be non-negative, not {}'.format(self.time_delta_ms))


@dataclass(frozen=True)
class TraceStats:
    """ Per-direction volume and timing summary of a trace. """
    bytes_up: int
    bytes_down: int
    count_up: int
    count_down: int
    duration_ms: float

    @property
    def total_bytes(self) -> int:
        return self.bytes_up + self.bytes_down

    @property
    def total_count(self) -> int:
        return self.count_up + self.count_down


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Trace(object):
    """ A site-labelled, ordered sequence of packets.

    Packets are stored column-wise in three read-only numpy arrays, which is
    what every consumer (featurizers, defenses, the morphing engine) iterates
    over. Use :meth:`from_packets` to build a trace from :class:`Packet`
    objects, and :attr:`packets` to get them back.

    The time delta of the first packet is normalized to 0.

    Parameters
    ----------
    site_id : str
        Opaque website identifier.
    directions, time_deltas, sizes : array_like
        Equal-length columns; see :class:`Packet` for the legal values.
    """
    __slots__ = ('site_id', 'directions', 'time_deltas', 'sizes')

    def __init__(self, site_id, directions, time_deltas, sizes):
        directions = np.array(directions, dtype=np.int8).reshape(-1)
        time_deltas = np.array(time_deltas, dtype=np.float64).reshape(-1)
        sizes = np.array(sizes, dtype=np.int64).reshape(-1)
        if not (len(directions) == len(time_deltas) == len(sizes)):
            raise ValueError('packet columns have different lengths')
        if np.any(np.abs(directions) != 1):
            raise ValueError('direction must be -1 or +1')
        if np.any(sizes < 1) or np.any(sizes > MAX_PACKET_SIZE):
            raise ValueError('packet size out of range')
        if not np.all(time_deltas >= 0):
            raise ValueError('time deltas must be non-negative')
        if len(time_deltas):
            time_deltas[0] = 0.0
        self.site_id = str(site_id)
        self.directions = _frozen(directions)
        self.time_deltas = _frozen(time_deltas)
        self.sizes = _frozen(sizes)

    @classmethod
    def from_packets(cls, site_id, packets: Iterable[Packet]) -> 'Trace':
        packets = list(packets)
        return cls(
            site_id,
            [int(p.direction) for p in packets],
            [p.time_delta_ms for p in packets],
            [p.size_bytes for p in packets],
        )

    @property
    def packets(self) -> Tuple[Packet, ...]:
        return tuple(iter(self))

    def __iter__(self) -> Iterator[Packet]:
        for d, t, s in zip(self.directions.tolist(), self.time_deltas.tolist(), self.sizes.tolist()):
            yield Packet(Direction(d), t, s)

    def __len__(self) -> int:
        return len(self.sizes)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.site_id == other.site_id
            and np.array_equal(self.directions, other.directions)
            and np.array_equal(self.time_deltas, other.time_deltas)
            and np.array_equal(self.sizes, other.sizes)
        )

    __hash__ = None

    def __repr__(self):
        return '<Trace site_id={!r} packets={}>'.format(self.site_id, len(self))

    def timestamps(self) -> np.ndarray:
        """ Absolute packet times in milliseconds (prefix sums of the deltas) """
        return np.cumsum(self.time_deltas)

    def with_site(self, site_id) -> 'Trace':
        """ The same packets under another label """
        return Trace(site_id, self.directions, self.time_deltas, self.sizes)

    def stats(self) -> TraceStats:
        return trace_stats(self)


def trace_stats(trace: Trace) -> TraceStats:
    """ Volume, packet count and duration of a trace, split by direction. """
    up = trace.directions == int(Direction.OUTGOING)
    return TraceStats(
        bytes_up=int(trace.sizes[up].sum()),
        bytes_down=int(trace.sizes[~up].sum()),
        count_up=int(up.sum()),
        count_down=int((~up).sum()),
        duration_ms=float(trace.time_deltas.sum()),
    )


@dataclass(frozen=True)
class Website:
    """ All traces recorded for one site, in a fixed order. """
    site_id: str
    traces: Tuple[Trace, ...]

    def __post_init__(self):
        object.__setattr__(self, 'traces', tuple(self.traces))
        for t in self.traces:
            if t.site_id != self.site_id:
                raise ValueError('trace labelled {!r} does not belong to website {!r}'.format(
                    t.site_id, self.site_id))

    def __len__(self) -> int:
        return len(self.traces)


@dataclass(frozen=True)
class Dataset:
    """ A pool of websites.

    Parameters
    ----------
    websites : Mapping[str, Website]
        Keyed by site id. Stored as a read-only mapping.
    provenance : Provenance
        Whether the traces were loaded from disk or generated.
    seed : int, optional
        Generator seed, for synthetic datasets.
    """
    websites: Mapping[str, Website]
    provenance: Provenance = Provenance.LOADED
    seed: Optional[int] = None
    _order: Tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        websites = dict(self.websites)
        for key, ws in websites.items():
            if key != ws.site_id:
                raise ValueError('website {!r} stored under key {!r}'.format(ws.site_id, key))
        if len(websites) > POOL_SIZE:
            raise ValueError('a dataset holds at most {} websites, got {}'.format(POOL_SIZE, len(websites)))
        object.__setattr__(self, 'websites', MappingProxyType(websites))
        object.__setattr__(self, '_order', tuple(sorted(websites)))

    def sites(self) -> Tuple[str, ...]:
        """ Site ids in sorted order """
        return self._order

    def __len__(self) -> int:
        return len(self.websites)

    def __getitem__(self, site_id) -> Website:
        return self.websites[site_id]

    def __iter__(self) -> Iterator[Website]:
        for s in self._order:
            yield self.websites[s]

    def subset(self, site_ids: Sequence[str]) -> 'Dataset':
        return Dataset({s: self.websites[s] for s in site_ids}, self.provenance, self.seed)

    def min_traces(self) -> int:
        return min((len(ws) for ws in self), default=0)
