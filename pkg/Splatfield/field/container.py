"""
GridField serialization.

Binary layout (all little endian):

    magic     4 bytes   b'SPLF'
    version   u32       1
    d         u32
    res       d × u32
    C         u32
    lower     d × f64
    upper     d × f64
    values    prod(res) × C × f64, row-major (axis 0 slowest, channel fastest)

The CSV export has one row per cell: x1..xd followed by c0..c{C-1}.
"""
import csv
import struct

import numpy as np

from Splatfield.exceptions import ContainerFormatError
from .domain import Domain
from .grid import GridField

MAGIC = b'SPLF'
VERSION = 1
FLOAT_FORMAT = '%.17g'


def dumps(grid):
    d = len(grid.resolution)
    header = struct.pack(f'<4sII{d}II', MAGIC, VERSION, d, *grid.resolution, grid.channels)
    bounds = np.asarray(grid.domain.lower + grid.domain.upper, dtype='<f8').tobytes()
    return header + bounds + np.ascontiguousarray(grid.values, dtype='<f8').tobytes()


def loads(payload):
    if len(payload) < 12 or payload[:4] != MAGIC:
        raise ContainerFormatError('missing SPLF magic bytes')
    version, d = struct.unpack_from('<II', payload, 4)
    if version != VERSION:
        raise ContainerFormatError(f'unsupported container version {version}')
    if d not in (2, 3):
        raise ContainerFormatError(f'unsupported dimension {d}')
    offset = 12
    *resolution, channels = struct.unpack_from(f'<{d}II', payload, offset)
    offset += 4 * (d + 1)
    bounds = np.frombuffer(payload, dtype='<f8', count=2 * d, offset=offset)
    offset += 16 * d
    count = int(np.prod(resolution)) * channels
    if len(payload) - offset != 8 * count:
        raise ContainerFormatError(
            f'expected {8 * count} value bytes, found {len(payload) - offset}'
        )
    values = np.frombuffer(payload, dtype='<f8', count=count, offset=offset)
    domain = Domain(tuple(bounds[:d]), tuple(bounds[d:]))
    return GridField(domain, tuple(resolution), values.reshape(tuple(resolution) + (channels,)))


def write_grid(path, grid):
    with open(path, 'wb') as handle:
        handle.write(dumps(grid))


def read_grid(path):
    with open(path, 'rb') as handle:
        return loads(handle.read())


def write_matrix(path, matrix):
    """Dump a 2D matrix as a single-channel container on [0, rows] × [0, cols]."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    rows, cols = matrix.shape
    domain = Domain((0.0, 0.0), (float(rows), float(cols)))
    write_grid(path, GridField(domain, (rows, cols), matrix[:, :, None]))


def write_csv(path, grid):
    d = len(grid.resolution)
    header = [f'x{i + 1}' for i in range(d)] + [f'c{c}' for c in range(grid.channels)]
    rows = np.hstack([grid.nodes, grid.flat()])
    with open(path, 'w', newline='\n', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([FLOAT_FORMAT % v for v in row])
