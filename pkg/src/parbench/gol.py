"""Game of Life step kernels over three board encodings.

Encodings
---------
* byte grid: one ``uint8`` cell per array element, row-major.
* row packing: each 64-bit word holds 64 row-consecutive cells; the
  least-significant bit is the lowest column index, so a cell's west
  neighbor is reachable by shifting the word left by one with carry-in
  from the previous word's top bit.
* tile packing: each 64-bit word holds an 8x8 tile; cell (y, x) within
  the tile sits at bit ``y*8 + x``.

All step functions implement the same rule: a live cell survives with
two or three live neighbors, a dead cell is born with exactly three.
Cells outside the grid are permanently dead. Every packed kernel must
agree bit-for-bit with ``step_reference`` on the decoded board.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import EncodingError, ParameterError, RegistryError
from .parallel import chunk_ranges, run_workers

_BIT_SHIFTS = np.arange(64, dtype=np.uint64)

# popcount of every 9-bit neighborhood mask
POP9 = np.array([bin(i).count("1") for i in range(512)], dtype=np.uint8)


@dataclass(eq=False)
class ByteGrid:
    """Board with one byte per cell (0 dead, 1 alive), row-major."""

    width: int
    height: int
    cells: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError(
                f"grid dimensions must be >= 1, got {self.width}x{self.height}"
            )
        if self.cells.shape != (self.height, self.width):
            raise ParameterError(
                f"cells shape {self.cells.shape} does not match "
                f"{self.height}x{self.width}"
            )
        if self.cells.dtype != np.uint8:
            raise ParameterError("cells must be uint8")
        if self.cells.max(initial=0) > 1:
            raise ParameterError("cell values must be 0 or 1")

    @classmethod
    def from_cells(cls, cells):
        cells = np.ascontiguousarray(cells, dtype=np.uint8)
        return cls(cells.shape[1], cells.shape[0], cells)

    def equals(self, other):
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.cells, other.cells)
        )

    def copy(self):
        return ByteGrid(self.width, self.height, self.cells.copy())


@dataclass(eq=False)
class RowPackedGrid:
    """Board packed 64 row-consecutive cells per word (LSB = lowest column)."""

    width: int
    height: int
    words: np.ndarray

    def __post_init__(self):
        if self.width < 64 or self.width % 64:
            raise EncodingError(
                f"row packing requires width to be a multiple of 64, got {self.width}"
            )
        if self.height < 1:
            raise ParameterError(f"height must be >= 1, got {self.height}")
        if self.words.shape != (self.height, self.width // 64):
            raise ParameterError(
                f"words shape {self.words.shape} does not match "
                f"{self.height}x{self.width // 64}"
            )
        if self.words.dtype != np.uint64:
            raise ParameterError("words must be uint64")

    def equals(self, other):
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.words, other.words)
        )


@dataclass(eq=False)
class TilePackedGrid:
    """Board packed one 8x8 tile per word (bit ``y*8 + x``), tile-row-major."""

    width: int
    height: int
    words: np.ndarray

    def __post_init__(self):
        if self.width < 8 or self.width % 8 or self.height < 8 or self.height % 8:
            raise EncodingError(
                "tile packing requires width and height to be multiples of 8, "
                f"got {self.width}x{self.height}"
            )
        if self.words.shape != (self.height // 8, self.width // 8):
            raise ParameterError(
                f"words shape {self.words.shape} does not match "
                f"{self.height // 8}x{self.width // 8}"
            )
        if self.words.dtype != np.uint64:
            raise ParameterError("words must be uint64")

    def equals(self, other):
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.words, other.words)
        )


# ---------------------------------------------------------------------------
# packing


def pack_rows(g: ByteGrid) -> RowPackedGrid:
    """Pack a byte grid into the row encoding (width must be a multiple of 64)."""
    if g.width % 64:
        raise EncodingError(
            f"row packing requires width to be a multiple of 64, got {g.width}"
        )
    lanes = g.cells.reshape(g.height, g.width // 64, 64).astype(np.uint64)
    words = np.bitwise_or.reduce(lanes << _BIT_SHIFTS, axis=2)
    return RowPackedGrid(g.width, g.height, words)


def unpack_rows(p: RowPackedGrid) -> ByteGrid:
    bits = (p.words[:, :, None] >> _BIT_SHIFTS) & np.uint64(1)
    cells = bits.reshape(p.height, p.width).astype(np.uint8)
    return ByteGrid(p.width, p.height, cells)


def pack_tiles(g: ByteGrid) -> TilePackedGrid:
    """Pack a byte grid into the tile encoding (both dimensions multiples of 8)."""
    if g.width % 8 or g.height % 8:
        raise EncodingError(
            "tile packing requires width and height to be multiples of 8, "
            f"got {g.width}x{g.height}"
        )
    tiles = (
        g.cells.reshape(g.height // 8, 8, g.width // 8, 8)
        .transpose(0, 2, 1, 3)
        .reshape(g.height // 8, g.width // 8, 64)
        .astype(np.uint64)
    )
    words = np.bitwise_or.reduce(tiles << _BIT_SHIFTS, axis=2)
    return TilePackedGrid(g.width, g.height, words)


def unpack_tiles(p: TilePackedGrid) -> ByteGrid:
    bits = (p.words[:, :, None] >> _BIT_SHIFTS) & np.uint64(1)
    cells = (
        bits.reshape(p.height // 8, p.width // 8, 8, 8)
        .transpose(0, 2, 1, 3)
        .reshape(p.height, p.width)
        .astype(np.uint8)
    )
    return ByteGrid(p.width, p.height, cells)


# ---------------------------------------------------------------------------
# rule-level oracle


def step_reference(g: ByteGrid) -> ByteGrid:
    """One step computed directly from the rules via a padded neighbor sum.

    This is the oracle every kernel variant is checked against; it shares
    no code with them.
    """
    cells = g.cells
    h, w = cells.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.uint8)
    padded[1:-1, 1:-1] = cells
    counts = np.zeros((h, w), dtype=np.uint8)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            if dy == 1 and dx == 1:
                continue
            counts += padded[dy : dy + h, dx : dx + w]
    alive = cells == 1
    nxt = ((counts == 3) | (alive & (counts == 2))).astype(np.uint8)
    return ByteGrid(g.width, g.height, nxt)


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, nogil=True)
def _byte_kernel(cells, out, row0, row1):
    h, w = cells.shape
    for y in range(row0, row1):
        for x in range(w):
            n = 0
            for dy in range(-1, 2):
                for dx in range(-1, 2):
                    if dy == 0 and dx == 0:
                        continue
                    yy = y + dy
                    xx = x + dx
                    if 0 <= yy < h and 0 <= xx < w:
                        n += cells[yy, xx]
            alive = cells[y, x]
            out[y, x] = 1 if (n == 3 or (n == 2 and alive == 1)) else 0


@njit(cache=True, nogil=True)
def _row_naive_kernel(words, out, row0, row1):
    # one bit test per neighbor per cell
    h, nw = words.shape
    one = np.uint64(1)
    for r in range(row0, row1):
        for j in range(nw):
            res = np.uint64(0)
            for i in range(64):
                n = 0
                for dy in range(-1, 2):
                    rr = r + dy
                    if rr < 0 or rr >= h:
                        continue
                    for dx in range(-1, 2):
                        if dy == 0 and dx == 0:
                            continue
                        bit = i + dx
                        jj = j
                        if bit < 0:
                            jj = j - 1
                            bit = 63
                        elif bit > 63:
                            jj = j + 1
                            bit = 0
                        if jj < 0 or jj >= nw:
                            continue
                        if (words[rr, jj] >> np.uint64(bit)) & one:
                            n += 1
                alive = (words[r, j] >> np.uint64(i)) & one
                if n == 3 or (n == 2 and alive == one):
                    res |= one << np.uint64(i)
            out[r, j] = res


@njit(cache=True, nogil=True, inline="always")
def _window3(left, center, right, i):
    # bits i-1, i, i+1 of a packed row, with carries from adjacent words
    if 0 < i < 63:
        return (center >> np.uint64(i - 1)) & np.uint64(7)
    if i == 0:
        return ((center << np.uint64(1)) | (left >> np.uint64(63))) & np.uint64(7)
    return ((center >> np.uint64(62)) | ((right & np.uint64(1)) << np.uint64(2))) & np.uint64(7)


@njit(cache=True, nogil=True)
def _row_popc_kernel(words, out, pop9, row0, row1):
    # per cell: assemble the 3x3 neighborhood mask, population-count it
    h, nw = words.shape
    zero = np.uint64(0)
    one = np.uint64(1)
    for r in range(row0, row1):
        for j in range(nw):
            cur = words[r, j]
            cur_l = words[r, j - 1] if j > 0 else zero
            cur_r = words[r, j + 1] if j + 1 < nw else zero
            if r > 0:
                up = words[r - 1, j]
                up_l = words[r - 1, j - 1] if j > 0 else zero
                up_r = words[r - 1, j + 1] if j + 1 < nw else zero
            else:
                up = zero
                up_l = zero
                up_r = zero
            if r + 1 < h:
                dn = words[r + 1, j]
                dn_l = words[r + 1, j - 1] if j > 0 else zero
                dn_r = words[r + 1, j + 1] if j + 1 < nw else zero
            else:
                dn = zero
                dn_l = zero
                dn_r = zero
            res = np.uint64(0)
            for i in range(64):
                mask = (
                    _window3(up_l, up, up_r, i)
                    | (_window3(cur_l, cur, cur_r, i) << np.uint64(3))
                    | (_window3(dn_l, dn, dn_r, i) << np.uint64(6))
                )
                alive = (cur >> np.uint64(i)) & one
                n = pop9[mask] - alive  # mask includes the center bit
                if n == 3 or (n == 2 and alive == one):
                    res |= one << np.uint64(i)
            out[r, j] = res


@njit(cache=True, nogil=True, inline="always")
def fulladder_planes(nw, n, ne, w, e, sw, s, se):
    """Carry-save reduction of the eight neighbor masks into bit planes.

    Returns (b0, b1, b2): per-cell neighbor-count bits for ones, twos and
    fours, with b2 saturated (a count of 8 sets b1=0, so the rule below
    never misreads it).
    """
    s1 = nw ^ n ^ ne
    c1 = (nw & n) | (ne & (nw ^ n))
    s2 = w ^ e ^ sw
    c2 = (w & e) | (sw & (w ^ e))
    s3 = s ^ se
    c3 = s & se
    b0 = s1 ^ s2 ^ s3
    carry_low = (s1 & s2) | (s3 & (s1 ^ s2))
    mid = c1 ^ c2 ^ c3
    carry_mid = (c1 & c2) | (c3 & (c1 ^ c2))
    b1 = mid ^ carry_low
    carry_mid2 = mid & carry_low
    b2 = carry_mid | carry_mid2
    return b0, b1, b2


@njit(cache=True, nogil=True, inline="always")
def fulladder_next(nw, n, ne, w, e, sw, s, se, alive):
    """Next-generation mask: counts 2 and 3 are the only ones with b1 set
    and b2 clear, and b0 distinguishes birth from survival."""
    b0, b1, b2 = fulladder_planes(nw, n, ne, w, e, sw, s, se)
    return b1 & ~b2 & (b0 | alive)


@njit(cache=True, nogil=True)
def _row_fulladder_kernel(words, out, row0, row1):
    # evaluates all 64 cells of a word at once; sliding three-row window
    h, nw = words.shape
    zero = np.uint64(0)
    one = np.uint64(1)
    s63 = np.uint64(63)
    for r in range(row0, row1):
        has_up = r > 0
        has_dn = r + 1 < h
        u1 = words[r - 1, 0] if has_up else zero
        c1 = words[r, 0]
        d1 = words[r + 1, 0] if has_dn else zero
        u0 = zero
        c0 = zero
        d0 = zero
        for j in range(nw):
            if j + 1 < nw:
                u2 = words[r - 1, j + 1] if has_up else zero
                c2 = words[r, j + 1]
                d2 = words[r + 1, j + 1] if has_dn else zero
            else:
                u2 = zero
                c2 = zero
                d2 = zero
            n_w = (c1 << one) | (c0 >> s63)
            n_e = (c1 >> one) | (c2 << s63)
            n_nw = (u1 << one) | (u0 >> s63)
            n_ne = (u1 >> one) | (u2 << s63)
            n_sw = (d1 << one) | (d0 >> s63)
            n_se = (d1 >> one) | (d2 << s63)
            out[r, j] = fulladder_next(n_nw, u1, n_ne, n_w, n_e, n_sw, d1, n_se, c1)
            u0 = u1
            u1 = u2
            c0 = c1
            c1 = c2
            d0 = d1
            d1 = d2


@njit(cache=True, nogil=True)
def _tile_popc_kernel(words, out, pop9, trow0, trow1):
    # gathers the 3x3 tile neighborhood, expands a 10-row halo window
    th, tw = words.shape
    zero = np.uint64(0)
    one = np.uint64(1)
    u7 = np.uint64(7)
    rows = np.empty(10, dtype=np.uint64)
    for tr in range(trow0, trow1):
        for tc in range(tw):
            # assemble 10 halo rows; within each, bit x+1 is grid column x
            for yy in range(10):
                gy = yy - 1  # row offset inside this tile, -1..8
                if gy < 0:
                    src_r = tr - 1
                    src_y = 7
                elif gy > 7:
                    src_r = tr + 1
                    src_y = 0
                else:
                    src_r = tr
                    src_y = gy
                if src_r < 0 or src_r >= th:
                    rows[yy] = zero
                    continue
                center = (words[src_r, tc] >> np.uint64(8 * src_y)) & np.uint64(0xFF)
                left = zero
                if tc > 0:
                    left = (words[src_r, tc - 1] >> np.uint64(8 * src_y + 7)) & one
                right = zero
                if tc + 1 < tw:
                    right = (words[src_r, tc + 1] >> np.uint64(8 * src_y)) & one
                rows[yy] = (center << one) | left | (right << np.uint64(9))
            res = np.uint64(0)
            for y in range(8):
                for x in range(8):
                    mask = (
                        ((rows[y] >> np.uint64(x)) & u7)
                        | (((rows[y + 1] >> np.uint64(x)) & u7) << np.uint64(3))
                        | (((rows[y + 2] >> np.uint64(x)) & u7) << np.uint64(6))
                    )
                    alive = (rows[y + 1] >> np.uint64(x + 1)) & one
                    n = pop9[mask] - alive
                    if n == 3 or (n == 2 and alive == one):
                        res |= one << np.uint64(y * 8 + x)
            out[tr, tc] = res


# ---------------------------------------------------------------------------
# step wrappers


def _run_rows(kernel, args, height, workers, out):
    def work(w):
        r0, r1 = ranges[w]
        if r0 < r1:
            kernel(*args, r0, r1)

    ranges = chunk_ranges(height, workers)
    run_workers(work, workers)
    return out


def step_byte(g: ByteGrid, out: ByteGrid = None, workers: int = 1) -> ByteGrid:
    """Direct per-cell step over the byte grid (the unpacked baseline)."""
    if out is None:
        out = ByteGrid(g.width, g.height, np.zeros_like(g.cells))
    return _run_rows(_byte_kernel, (g.cells, out.cells), g.height, workers, out)


def step_row_naive(p: RowPackedGrid, out: RowPackedGrid = None, workers: int = 1) -> RowPackedGrid:
    """Row-packed step testing each neighbor bit individually."""
    if out is None:
        out = RowPackedGrid(p.width, p.height, np.empty_like(p.words))
    return _run_rows(_row_naive_kernel, (p.words, out.words), p.height, workers, out)


def step_row_popc(p: RowPackedGrid, out: RowPackedGrid = None, workers: int = 1) -> RowPackedGrid:
    """Row-packed step counting neighbors by popcount of the 3x3 mask."""
    if out is None:
        out = RowPackedGrid(p.width, p.height, np.empty_like(p.words))
    return _run_rows(_row_popc_kernel, (p.words, out.words, POP9), p.height, workers, out)


def step_row_fulladder(p: RowPackedGrid, out: RowPackedGrid = None, workers: int = 1) -> RowPackedGrid:
    """Row-packed step evaluating all 64 cells of a word via bitwise adders."""
    if out is None:
        out = RowPackedGrid(p.width, p.height, np.empty_like(p.words))
    return _run_rows(_row_fulladder_kernel, (p.words, out.words), p.height, workers, out)


def step_tile_popc(p: TilePackedGrid, out: TilePackedGrid = None, workers: int = 1) -> TilePackedGrid:
    """Tile-packed step gathering the 3x3 tile neighborhood per tile."""
    if out is None:
        out = TilePackedGrid(p.width, p.height, np.empty_like(p.words))
    return _run_rows(
        _tile_popc_kernel, (p.words, out.words, POP9), p.height // 8, workers, out
    )


def _step_oracle(g: ByteGrid, out: ByteGrid = None, workers: int = 1) -> ByteGrid:
    return step_reference(g)


# variant name -> (native encoding, step function)
VARIANT_STEPS = {
    "oracle": (ByteGrid, _step_oracle),
    "byte": (ByteGrid, step_byte),
    "row-naive": (RowPackedGrid, step_row_naive),
    "row-popc": (RowPackedGrid, step_row_popc),
    "row-fulladder": (RowPackedGrid, step_row_fulladder),
    "tile-popc": (TilePackedGrid, step_tile_popc),
}


def to_byte_grid(grid) -> ByteGrid:
    """Decode any of the three encodings to a byte grid."""
    if isinstance(grid, ByteGrid):
        return grid
    if isinstance(grid, RowPackedGrid):
        return unpack_rows(grid)
    if isinstance(grid, TilePackedGrid):
        return unpack_tiles(grid)
    raise ParameterError(f"not a grid: {type(grid).__name__}")


def encode_grid(grid, encoding):
    """Re-encode a grid into ``encoding`` (ByteGrid/RowPackedGrid/TilePackedGrid)."""
    if isinstance(grid, encoding):
        return grid
    byte = to_byte_grid(grid)
    if encoding is ByteGrid:
        return byte
    if encoding is RowPackedGrid:
        return pack_rows(byte)
    if encoding is TilePackedGrid:
        return pack_tiles(byte)
    raise ParameterError(f"unknown grid encoding {encoding!r}")


def run_iterations(grid, n: int, variant: str, workers: int = 1):
    """Apply the selected step variant ``n`` times, double-buffered.

    Accepts a grid in any encoding and returns the final grid in the
    variant's native encoding (the input itself when ``n`` is 0).
    """
    if not isinstance(n, int) or n < 0:
        raise ParameterError(f"iteration count must be >= 0, got {n!r}")
    try:
        encoding, step = VARIANT_STEPS[variant]
    except KeyError:
        raise RegistryError(
            f"unknown gol variant {variant!r}; known: {', '.join(sorted(VARIANT_STEPS))}"
        ) from None
    if n == 0:
        return grid
    cur = encode_grid(grid, encoding)
    original = cur
    spare = None
    for _ in range(n):
        nxt = step(cur, out=spare, workers=workers)
        spare = cur if cur is not original else None
        cur = nxt
    return cur
