"""Deterministic workload generation and on-disk formats.

All randomness comes from SplitMix64 (Steele, Lea & Flood 2014) driven in
counter mode, so any slice of a stream is reproducible from (seed, index)
alone using only unsigned 64-bit integer arithmetic. Outputs are specified
byte-for-byte given (seed, parameters); golden tests pin them.

File formats
------------
* text: raw bytes, no header.
* grid ("GOLB"): 16-byte header — magic ``GOLB``, u32-LE width, u32-LE
  height, u32-LE reserved zero — then row-packed 64-bit-LE words, rows in
  order.
* points ("PTS2"): 16-byte header — magic ``PTS2``, u32-LE count, u64-LE
  reserved zero — then ``count`` pairs of 64-bit-LE IEEE-754 (x, y).
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError
from .gol import ByteGrid, RowPackedGrid, encode_grid, unpack_rows
from .histogram import CharRange
from .knn import PointCloud

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

GRID_MAGIC = b"GOLB"
POINTS_MAGIC = b"PTS2"

_RNG_CHUNK = 1 << 24


def splitmix64(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Outputs ``start .. start+count`` of the SplitMix64 stream for ``seed``.

    Output i equals the (i+1)-th value of the sequential generator, i.e.
    ``mix(seed + (i+1) * gamma)``.
    """
    if count < 0:
        raise ParameterError(f"count must be >= 0, got {count}")
    i = np.arange(start, start + count, dtype=np.uint64)
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (i + np.uint64(1)) * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, stream: int) -> int:
    """Child seed for an independent substream (output ``stream`` of the parent)."""
    return int(splitmix64(seed, 1, start=stream)[0])


def random_floats(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Uniform float64 in [0, 1) with 53-bit resolution."""
    return (splitmix64(seed, count, start) >> np.uint64(11)) * (2.0 ** -53)


# ---------------------------------------------------------------------------
# generators

_WORD_LEN_STREAM = 1
_SENTENCE_STREAM = 2
_LETTER_STREAM = 3

_SPACE = 0x20
_PERIOD = 0x2E
_NEWLINE = 0x0A


def gen_lorem(seed: int, nbytes: int) -> bytes:
    """Latin-like filler text: lowercase words of 2-12 letters separated by
    single spaces, sentences of 4-11 words starting with a capital and
    ending with a period, a newline replacing the space nearest each
    80-column boundary. Exactly ``nbytes`` bytes (the tail may cut a word).
    """
    if nbytes < 0:
        raise ParameterError(f"nbytes must be >= 0, got {nbytes}")
    if nbytes == 0:
        return b""

    len_seed = derive_seed(seed, _WORD_LEN_STREAM)
    sent_seed = derive_seed(seed, _SENTENCE_STREAM)
    letter_seed = derive_seed(seed, _LETTER_STREAM)

    # draw word lengths until they cover the requested size
    parts = []
    covered = 0
    start = 0
    while covered < nbytes + 13:
        chunk = max(16, (nbytes - covered) // 6 + 16)
        lens = (splitmix64(len_seed, chunk, start) % np.uint64(11)).astype(np.int64) + 2
        parts.append(lens)
        covered += int(lens.sum()) + lens.size
        start += chunk
    lens = np.concatenate(parts) if len(parts) > 1 else parts[0]
    nwords = lens.size

    sentence_lens = (
        splitmix64(sent_seed, nwords // 4 + 2) % np.uint64(8)
    ).astype(np.int64) + 4
    sentence_starts = np.concatenate(([0], np.cumsum(sentence_lens)))
    sentence_starts = sentence_starts[sentence_starts < nwords]
    is_start = np.zeros(nwords, dtype=bool)
    is_start[sentence_starts] = True
    is_final = np.zeros(nwords, dtype=bool)
    finals = sentence_starts[1:] - 1
    is_final[finals] = True

    body = lens + is_final  # letters plus the period on sentence-final words
    starts = np.concatenate(([0], np.cumsum(body + 1)))[:-1]
    total = int(starts[-1] + body[-1] + 1)

    # letters everywhere first; separators and punctuation overwrite
    out = np.empty(total, dtype=np.uint8)
    for lo in range(0, total, _RNG_CHUNK):
        n = min(_RNG_CHUNK, total - lo)
        out[lo : lo + n] = (
            splitmix64(letter_seed, n, lo) % np.uint64(26)
        ).astype(np.uint8) + ord("a")

    separators = starts + body
    out[separators] = _SPACE
    out[starts[is_final] + lens[is_final]] = _PERIOD
    out[starts[is_start]] -= 32  # capitalize
    crossings = np.flatnonzero(np.diff(separators // 80) > 0) + 1
    out[separators[crossings]] = _NEWLINE
    return out[:nbytes].tobytes()


def to_hexdump(text: bytes) -> bytes:
    """Two lowercase hex digits per byte, space-separated, a newline after
    every completed group of 16 bytes (no separator after a partial tail)."""
    arr = np.frombuffer(bytes(text), dtype=np.uint8)
    n = arr.size
    if n == 0:
        return b""
    digits = np.frombuffer(b"0123456789abcdef", dtype=np.uint8)
    cells = np.empty((n, 3), dtype=np.uint8)
    cells[:, 0] = digits[arr >> 4]
    cells[:, 1] = digits[arr & 0x0F]
    cells[:, 2] = _SPACE
    cells[15::16, 2] = _NEWLINE
    flat = cells.reshape(-1)
    if n % 16 != 0:
        flat = flat[:-1]
    return flat.tobytes()


def repeated_byte(value: int, nbytes: int) -> bytes:
    """``nbytes`` copies of a single byte value (the adversarial histogram input)."""
    if not 0 <= value <= 255:
        raise ParameterError(f"byte value must be in [0, 255], got {value}")
    if nbytes < 0:
        raise ParameterError(f"nbytes must be >= 0, got {nbytes}")
    return bytes([value]) * nbytes


def repeat_to_size(data: bytes, nbytes: int) -> bytes:
    """Tile ``data`` until it is exactly ``nbytes`` long."""
    if nbytes < 0:
        raise ParameterError(f"nbytes must be >= 0, got {nbytes}")
    if nbytes == 0:
        return b""
    if not data:
        raise ParameterError("cannot repeat empty data to a positive size")
    reps = -(-nbytes // len(data))
    return (data * reps)[:nbytes]


def gen_grid(seed: int, width: int, height: int, density: float) -> ByteGrid:
    """Random board; each cell independently alive with probability ``density``."""
    if width < 64 or width % 64:
        raise ParameterError(f"width must be a positive multiple of 64, got {width}")
    if height < 1:
        raise ParameterError(f"height must be >= 1, got {height}")
    if not 0.0 <= density <= 1.0:
        raise ParameterError(f"density must be in [0, 1], got {density}")
    u = random_floats(seed, width * height)
    cells = (u < density).astype(np.uint8).reshape(height, width)
    return ByteGrid(width, height, cells)


def gen_points(seed: int, n: int, lo: float = 0.0, hi: float = 1.0) -> PointCloud:
    """``n`` points uniform in [lo, hi) x [lo, hi)."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not lo < hi:
        raise ParameterError(f"need lo < hi, got {lo} >= {hi}")
    u = random_floats(seed, 2 * n)
    pts = (lo + u * (hi - lo)).reshape(n, 2)
    return PointCloud(pts)


# ---------------------------------------------------------------------------
# file I/O


def write_grid_file(path, grid) -> None:
    """Write a grid (any encoding) in the GOLB row-packed format."""
    packed = encode_grid(grid, RowPackedGrid)
    header = GRID_MAGIC + struct.pack("<III", packed.width, packed.height, 0)
    Path(path).write_bytes(header + packed.words.astype("<u8").tobytes())


def read_grid_file(path) -> RowPackedGrid:
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise FormatError(
            f"grid file truncated: {len(data)} bytes is shorter than the header",
            offset=len(data),
        )
    if data[:4] != GRID_MAGIC:
        raise FormatError(f"bad grid magic {data[:4]!r}, expected {GRID_MAGIC!r}", offset=0)
    width, height, reserved = struct.unpack_from("<III", data, 4)
    if reserved != 0:
        raise FormatError(f"reserved header field must be zero, got {reserved}", offset=12)
    if width < 64 or width % 64:
        raise FormatError(f"width {width} is not a positive multiple of 64", offset=4)
    if height < 1:
        raise FormatError(f"height must be >= 1, got {height}", offset=8)
    expected = 16 + height * (width // 64) * 8
    if len(data) < expected:
        raise FormatError(
            f"grid file truncated: header implies {expected} bytes, file has {len(data)}",
            offset=len(data),
        )
    if len(data) > expected:
        raise FormatError(f"trailing data after {expected} expected bytes", offset=expected)
    words = (
        np.frombuffer(data, dtype="<u8", offset=16)
        .reshape(height, width // 64)
        .astype(np.uint64)
    )
    return RowPackedGrid(width, height, words)


def read_grid_file_bytes(path) -> ByteGrid:
    return unpack_rows(read_grid_file(path))


def write_points_file(path, cloud: PointCloud) -> None:
    header = POINTS_MAGIC + struct.pack("<IQ", len(cloud), 0)
    Path(path).write_bytes(header + cloud.points.astype("<f8").tobytes())


def read_points_file(path) -> PointCloud:
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise FormatError(
            f"points file truncated: {len(data)} bytes is shorter than the header",
            offset=len(data),
        )
    if data[:4] != POINTS_MAGIC:
        raise FormatError(
            f"bad points magic {data[:4]!r}, expected {POINTS_MAGIC!r}", offset=0
        )
    count, reserved = struct.unpack_from("<IQ", data, 4)
    if reserved != 0:
        raise FormatError(f"reserved header field must be zero, got {reserved}", offset=8)
    if count < 1:
        raise FormatError(f"point count must be >= 1, got {count}", offset=4)
    expected = 16 + count * 16
    if len(data) < expected:
        raise FormatError(
            f"points file truncated: header implies {expected} bytes, file has {len(data)}",
            offset=len(data),
        )
    if len(data) > expected:
        raise FormatError(f"trailing data after {expected} expected bytes", offset=expected)
    pts = np.frombuffer(data, dtype="<f8", offset=16).reshape(count, 2).astype(np.float64)
    return PointCloud(pts)


# ---------------------------------------------------------------------------
# workload specs

TEXT_KINDS = ("lorem", "hexdump", "repeat")

_DATA_STREAM = 11
_QUERY_STREAM = 12


@dataclass
class WorkloadSpec:
    """Parameters that fully determine one benchmark input set."""

    task: str
    seed: int = 0
    # histogram
    text_bytes: int = 256 * 1024 * 1024
    text_kind: str = "lorem"
    repeat_byte: int = ord("x")
    range_from: int = 32
    range_to: int = 127
    repeat_to_size: int = 0  # 0 = off
    # game of life
    width: int = 4096
    height: int = 4096
    density: float = 0.5
    iters: int = 20
    # knn
    n: int = 1 << 20
    m: int = 256
    k: int = 64
    batch_size: int = 0  # 0 = default (k)
    lo: float = 0.0
    hi: float = 1.0

    def describe(self) -> dict:
        """Size parameters relevant to the task, for report rows."""
        if self.task == "histogram":
            d = {
                "text_kind": self.text_kind,
                "text_bytes": self.text_bytes,
                "range_from": self.range_from,
                "range_to": self.range_to,
                "seed": self.seed,
            }
            if self.text_kind == "repeat":
                d["repeat_byte"] = self.repeat_byte
            if self.repeat_to_size:
                d["repeat_to_size"] = self.repeat_to_size
            return d
        if self.task == "gol":
            return {
                "width": self.width,
                "height": self.height,
                "density": self.density,
                "iters": self.iters,
                "seed": self.seed,
            }
        if self.task == "knn":
            return {
                "n": self.n,
                "m": self.m,
                "k": self.k,
                "batch_size": self.batch_size or self.k,
                "seed": self.seed,
            }
        raise ParameterError(f"unknown task {self.task!r}")


def build_text(spec: WorkloadSpec) -> bytes:
    if spec.text_kind == "lorem":
        text = gen_lorem(spec.seed, spec.text_bytes)
    elif spec.text_kind == "hexdump":
        text = to_hexdump(gen_lorem(spec.seed, spec.text_bytes))
    elif spec.text_kind == "repeat":
        text = repeated_byte(spec.repeat_byte, spec.text_bytes)
    else:
        raise ParameterError(
            f"unknown text kind {spec.text_kind!r}; known: {', '.join(TEXT_KINDS)}"
        )
    if spec.repeat_to_size:
        text = repeat_to_size(text, spec.repeat_to_size)
    return text


def materialize(spec: WorkloadSpec) -> dict:
    """Generate the in-memory inputs an engine run needs."""
    if spec.task == "histogram":
        return {
            "text": build_text(spec),
            "char_range": CharRange(spec.range_from, spec.range_to),
        }
    if spec.task == "gol":
        return {
            "grid": gen_grid(spec.seed, spec.width, spec.height, spec.density),
            "iters": spec.iters,
        }
    if spec.task == "knn":
        return {
            "data": gen_points(derive_seed(spec.seed, _DATA_STREAM), spec.n, spec.lo, spec.hi),
            "queries": gen_points(
                derive_seed(spec.seed, _QUERY_STREAM), spec.m, spec.lo, spec.hi
            ),
            "k": spec.k,
            "batch_size": spec.batch_size or spec.k,
        }
    raise ParameterError(f"unknown task {spec.task!r}")
