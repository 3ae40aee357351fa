"""
.. currentmodule:: wfbench.io

=============================
file formats (:mod:`wfbench.io`)
=============================

Readers and writers for every on-disk artifact.

Trace files are CSV, one packet per line as ``direction,time_delta_ms,size_bytes``.
Lines starting with ``#`` are comments. A dataset is a directory tree
``<root>/<site_id>/<trace_index>.csv``.

Time deltas are written in the shortest decimal form that reads back to the
same float. Deltas recorded with up to 6 fractional digits are written with
at most 6; a delta such as ``1/3`` that no short decimal represents keeps
all the digits it needs: the round trip stays exact.

.. autosummary::
    :toctree: generated/

    parse_trace_file
    write_trace_file
    read_trace
    write_trace
    load_dataset
    save_dataset
    write_dataset_h5
    read_dataset_h5
    write_json_file
    read_json_file

"""
import json
import os
import warnings
from pathlib import Path
from typing import Union

import h5py
import numpy as np

from . import DataQualityWarning
from ._trace import Trace, Website, Dataset, Provenance, MAX_PACKET_SIZE

FORMAT_VERSION = '0.0.1'

PathLike = Union[str, os.PathLike]


class TraceParseError(ValueError):
    """ A trace file could not be parsed.

    ``line_number`` is 1-based, or ``None`` when the error is not tied to a line.
    """
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = 'line {}: {}'.format(line_number, message)
        super().__init__(message)
        self.line_number = line_number


class DatasetLoadError(ValueError):
    """ A dataset directory or archive is missing or holds no usable website. """


def _format_time(t: float) -> str:
    # shortest representation that parses back to the same float
    return np.format_float_positional(t, unique=True, trim='-')


def parse_trace_file(text, site_id='') -> Trace:
    """
    Parses the CSV trace format into a :class:`~wfbench.Trace`.

    Accepts ``bytes`` or ``str``. The first packet's time delta is forced to 0.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = text.decode('utf-8')
        except UnicodeDecodeError as e:
            line_number = text[:e.start].count(b'\n') + 1
            raise TraceParseError('not UTF-8 text', line_number) from None
    directions, deltas, sizes = [], [], []
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        fields = line.split(',')
        if len(fields) != 3:
            raise TraceParseError('expected 3 fields, found {}'.format(len(fields)), line_number)
        try:
            d = int(fields[0])
            t = float(fields[1])
            s = int(fields[2])
        except ValueError:
            raise TraceParseError('non-numeric field in {!r}'.format(line), line_number) from None
        if d not in (-1, 1):
            raise TraceParseError('direction must be -1 or +1, not {}'.format(d), line_number)
        if not np.isfinite(t) or t < 0:
            raise TraceParseError('time delta out of range: {}'.format(fields[1]), line_number)
        if not 1 <= s <= MAX_PACKET_SIZE:
            raise TraceParseError('size out of range: {}'.format(s), line_number)
        directions.append(d)
        deltas.append(t)
        sizes.append(s)
    if not sizes:
        raise TraceParseError('empty trace')
    return Trace(site_id, directions, deltas, sizes)


def write_trace_file(trace: Trace) -> bytes:
    """
    Serializes a trace to the CSV trace format.

    Time deltas are written losslessly, so
    ``parse_trace_file(write_trace_file(t), t.site_id) == t``.
    """
    lines = [
        '{},{},{}\n'.format(d, _format_time(t), s)
        for d, t, s in zip(trace.directions.tolist(), trace.time_deltas.tolist(), trace.sizes.tolist())
    ]
    return ''.join(lines).encode('utf-8')


def read_trace(file_name: PathLike, site_id=None) -> Trace:
    """ Reads a trace file; the site id defaults to the parent directory name """
    path = Path(file_name)
    if site_id is None:
        site_id = path.parent.name
    return parse_trace_file(path.read_bytes(), site_id)


def write_trace(file_name: PathLike, trace: Trace):
    Path(file_name).write_bytes(write_trace_file(trace))


def _trace_sort_key(path: Path):
    stem = path.stem
    if stem.isdigit():
        return (0, int(stem), path.name)
    return (1, 0, path.name)


def load_dataset(root: PathLike) -> Dataset:
    """
    Loads ``<root>/<site_id>/<trace_index>.csv`` into a :class:`~wfbench.Dataset`.

    Trace files that fail to parse are skipped, each with a
    :class:`~wfbench.DataQualityWarning`; a website left without traces is
    dropped.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetLoadError('dataset root {} does not exist'.format(root))
    websites = {}
    for site_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        traces = []
        for path in sorted(site_dir.glob('*.csv'), key=_trace_sort_key):
            try:
                traces.append(read_trace(path, site_dir.name))
            except TraceParseError as e:
                warnings.warn('skipping {}: {}'.format(path, e), DataQualityWarning)
        if traces:
            websites[site_dir.name] = Website(site_dir.name, traces)
        else:
            warnings.warn('skipping website {}: no valid traces'.format(site_dir.name), DataQualityWarning)
    if not websites:
        raise DatasetLoadError('no valid website under {}'.format(root))
    return Dataset(websites, Provenance.LOADED)


def save_dataset(dataset: Dataset, root: PathLike):
    """ Writes a dataset in the layout read by :func:`load_dataset` """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for ws in dataset:
        site_dir = root / ws.site_id
        site_dir.mkdir(exist_ok=True)
        for i, trace in enumerate(ws.traces):
            write_trace(site_dir / '{}.csv'.format(i), trace)


def write_dataset_h5(file_name: PathLike, dataset: Dataset, compression=True, compression_opts=1):
    """
    Writes a dataset archive of format version 0.0.1

    Each site is a group holding the concatenated packet columns of all its
    traces plus an ``offsets`` array delimiting them.
    """
    kw = dict(compression="gzip", compression_opts=compression_opts) if compression else {}
    with h5py.File(str(file_name), "w") as f:
        f.attrs['version'] = FORMAT_VERSION
        f.attrs['provenance'] = dataset.provenance.value
        f.attrs['seed'] = -1 if dataset.seed is None else dataset.seed
        sites = f.create_group('sites')
        for i, ws in enumerate(dataset):
            g = sites.create_group('site_{:05d}'.format(i))
            g.attrs['site_id'] = ws.site_id
            offsets = np.cumsum([0] + [len(t) for t in ws.traces])
            g.create_dataset('offsets', data=offsets.astype(np.int64))
            g.create_dataset('directions', data=np.concatenate([t.directions for t in ws.traces]), **kw)
            g.create_dataset('time_deltas', data=np.concatenate([t.time_deltas for t in ws.traces]), **kw)
            g.create_dataset('sizes', data=np.concatenate([t.sizes for t in ws.traces]), **kw)


def read_dataset_h5(file_name: PathLike) -> Dataset:
    """
    Reads a dataset archive of format version 0.0.1
    """
    if not Path(file_name).is_file():
        raise DatasetLoadError('dataset archive {} does not exist'.format(file_name))
    with h5py.File(str(file_name), "r") as f:
        if f.attrs['version'] != FORMAT_VERSION:
            raise DatasetLoadError('unsupported archive version {}'.format(f.attrs['version']))
        websites = {}
        for key in sorted(f['sites']):
            g = f['sites'][key]
            site_id = g.attrs['site_id']
            if isinstance(site_id, bytes):
                site_id = site_id.decode('utf-8')
            offsets = g['offsets'][:]
            directions = g['directions'][:]
            deltas = g['time_deltas'][:]
            sizes = g['sizes'][:]
            traces = [
                Trace(site_id, directions[a:b], deltas[a:b], sizes[a:b])
                for a, b in zip(offsets[:-1], offsets[1:])
            ]
            websites[site_id] = Website(site_id, traces)
        seed = int(f.attrs['seed'])
        provenance = Provenance(f.attrs['provenance'])
    if not websites:
        raise DatasetLoadError('no website in {}'.format(file_name))
    return Dataset(websites, provenance, None if seed < 0 else seed)


def write_json_file(file_name: PathLike, kind: str, payload: dict):
    """
    Writes a versioned json file of format version 0.0.1

    ``kind`` names the payload (``"clustering"``, ``"model"``) and is checked on read.
    """
    data_dict = {'version': FORMAT_VERSION, 'kind': kind}
    data_dict.update(payload)
    with open(str(file_name), "w") as fp:
        json.dump(data_dict, fp, indent=1, sort_keys=True)


def read_json_file(file_name: PathLike, kind: str) -> dict:
    """
    Reads a versioned json file of format version 0.0.1
    """
    with open(str(file_name), "r") as fp:
        f = json.load(fp)
    if f.get('version') != FORMAT_VERSION:
        raise ValueError('unsupported file version {!r}'.format(f.get('version')))
    if f.get('kind') != kind:
        raise ValueError('expected a {} file, found {!r}'.format(kind, f.get('kind')))
    return f
