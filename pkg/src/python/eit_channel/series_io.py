import csv
import io
import struct
from typing import Optional

import numpy as np

from .errors import ParameterError
from .fileio import atomic_write
from .synth import TimeSeries

MAGIC = b"EITS"
NO_SEED = -1


class SeriesHeader:
    """
    Represents the 28-byte binary record header.
    [Magic (4) | Sample rate, float64 (8) | Length, uint64 (8) | Seed, int64 (8)]
    All fields little-endian; a seed of -1 means the record has no seed.
    Samples follow as ``length`` little-endian float64 values.
    """
    _STRUCT = struct.Struct("<4sdQq")
    SIZE = _STRUCT.size

    def __init__(self, sample_rate: float, length: int, seed: Optional[int]):
        self.sample_rate = sample_rate
        self.length = length
        self.seed = seed

    def serialize(self) -> bytes:
        seed = NO_SEED if self.seed is None else self.seed
        return self._STRUCT.pack(MAGIC, self.sample_rate, self.length, seed)

    @classmethod
    def deserialize(cls, data: bytes) -> 'SeriesHeader':
        if len(data) < cls.SIZE:
            raise ParameterError(f"header needs {cls.SIZE} bytes, got {len(data)}")
        magic, rate, length, seed = cls._STRUCT.unpack(data[:cls.SIZE])
        if magic != MAGIC:
            raise ParameterError(f"bad magic {magic!r}")
        return cls(rate, length, None if seed == NO_SEED else seed)


def encode_series(series: TimeSeries) -> bytes:
    header = SeriesHeader(series.sample_rate, len(series), series.seed)
    return header.serialize() + series.samples.astype("<f8").tobytes()


def decode_series(data: bytes) -> TimeSeries:
    header = SeriesHeader.deserialize(data)
    body = data[SeriesHeader.SIZE:]
    if len(body) != 8 * header.length:
        raise ParameterError(f"expected {header.length} samples, got {len(body) // 8}")
    samples = np.frombuffer(body, dtype="<f8").astype(float)
    return TimeSeries(samples, header.sample_rate, header.seed)


def write_series_binary(series: TimeSeries, path: str):
    atomic_write(path, encode_series(series))


def read_series_binary(path: str) -> TimeSeries:
    with open(path, "rb") as f:
        return decode_series(f.read())


def write_series_csv(series: TimeSeries, path: str):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time_s", "value"])
    for i, v in enumerate(series.samples):
        writer.writerow([repr(i / series.sample_rate), repr(float(v))])
    atomic_write(path, buf.getvalue())


def read_series_csv(path: str, seed: Optional[int] = None) -> TimeSeries:
    """The sample rate is recovered from the time column."""
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["time_s", "value"]:
            raise ParameterError(f"{path}: expected header time_s,value, got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParameterError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ParameterError(f"{path}:{lineno}: non-numeric value") from None
    if len(rows) < 2:
        raise ParameterError(f"{path}: need at least two samples")
    times = np.array([r[0] for r in rows])
    if not np.all(np.diff(times) > 0):
        raise ParameterError(f"{path}: time column must be strictly increasing")
    span = times[-1] - times[0]
    rate = (len(rows) - 1) / span
    return TimeSeries(np.array([r[1] for r in rows]), float(rate), seed)
