"""
Binary field snapshots passed between CLI subcommands.

Layout: magic ``CVIF``, then little-endian header (version u32, N u32,
M u32, rank u32, time-sampled u32, T f64), then the coefficient array as
interleaved little-endian float64 (real, imag) pairs in C order.
"""
import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from errors import InvalidParameterError
from spectral.field import GridSpec, SpectralField

logger = logging.getLogger(__name__)

MAGIC = b"CVIF"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIId")


def save_snapshot(f: SpectralField, path: Union[str, Path]) -> Path:
    """Write a field to ``path``."""
    path = Path(path)
    header = _HEADER.pack(MAGIC, VERSION, f.grid.n, f.grid.time_samples, f.rank,
                          int(f.time_sampled), float(f.grid.period))
    payload = np.ascontiguousarray(f.coeffs).view(np.float64).astype('<f8', copy=False)
    with open(path, 'wb') as fh:
        fh.write(header)
        fh.write(payload.tobytes())
    logger.info("Saved %s to %s", f, path)
    return path


def load_snapshot(path: Union[str, Path]) -> SpectralField:
    """Read a field written by :func:`save_snapshot`."""
    path = Path(path)
    if not path.is_file():
        raise InvalidParameterError(f"No snapshot at {path}")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidParameterError(f"Snapshot {path} is truncated")
    magic, version, n, m, rank, timed, period = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise InvalidParameterError(f"{path} is not a field snapshot")
    if version != VERSION:
        raise InvalidParameterError(f"Unsupported snapshot version {version}")
    grid = GridSpec(n, m, period)
    values = np.frombuffer(raw, dtype='<f8', offset=_HEADER.size)
    shape = (3,) * rank + grid.spectral_shape
    if timed:
        shape = (m,) + shape
    expected = 2 * int(np.prod(shape))
    if values.size != expected:
        raise InvalidParameterError(f"Snapshot {path} holds {values.size} values, expected {expected}")
    coeffs = values.astype(np.float64).view(np.complex128).reshape(shape)
    return SpectralField(coeffs.copy(), grid, rank, bool(timed))
