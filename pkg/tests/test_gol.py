import numpy as np
import pytest

from parbench.errors import EncodingError, ParameterError, RegistryError
from parbench.gol import (
    ByteGrid,
    RowPackedGrid,
    TilePackedGrid,
    pack_rows,
    pack_tiles,
    run_iterations,
    step_byte,
    step_reference,
    step_row_fulladder,
    step_row_naive,
    step_row_popc,
    step_tile_popc,
    to_byte_grid,
    unpack_rows,
    unpack_tiles,
)
from parbench.workload import gen_grid

PACKED_VARIANTS = ("row-naive", "row-popc", "row-fulladder", "tile-popc")
ALL_VARIANTS = ("byte",) + PACKED_VARIANTS


def grid_from_rows(rows):
    return ByteGrid.from_cells(np.array([[int(c) for c in row] for row in rows], np.uint8))


def place(width, height, cells, origin=(0, 0)):
    g = np.zeros((height, width), dtype=np.uint8)
    for dy, dx in cells:
        g[origin[0] + dy, origin[1] + dx] = 1
    return ByteGrid.from_cells(g)


BLOCK = ((0, 0), (0, 1), (1, 0), (1, 1))
BLINKER_H = ((0, 0), (0, 1), (0, 2))
BEEHIVE = ((0, 1), (0, 2), (1, 0), (1, 3), (2, 1), (2, 2))
GLIDER = ((0, 1), (1, 2), (2, 0), (2, 1), (2, 2))


# ---------------------------------------------------------------------------
# oracle behavior on canonical patterns


def test_reference_all_dead_stays_dead():
    g = ByteGrid(8, 8, np.zeros((8, 8), np.uint8))
    assert step_reference(g).equals(g)


def test_reference_block_is_still_life():
    g = place(6, 6, BLOCK, origin=(2, 2))
    assert step_reference(g).equals(g)


def test_reference_beehive_is_still_life():
    g = place(8, 7, BEEHIVE, origin=(2, 2))
    assert step_reference(g).equals(g)


def test_reference_blinker_rotates():
    g = place(5, 5, BLINKER_H, origin=(2, 1))
    expected = place(5, 5, ((0, 0), (1, 0), (2, 0)), origin=(1, 2))
    once = step_reference(g)
    assert once.equals(expected)
    assert step_reference(once).equals(g)  # period 2


def test_reference_corner_cell_dies():
    for corner in ((0, 0), (0, 7), (7, 0), (7, 7)):
        g = place(8, 8, ((0, 0),), origin=corner)
        assert step_reference(g).cells.sum() == 0


def test_reference_rejects_dimension_zero():
    with pytest.raises(ParameterError):
        ByteGrid(0, 4, np.zeros((4, 0), np.uint8))
    with pytest.raises(ParameterError):
        ByteGrid(4, 0, np.zeros((0, 4), np.uint8))


# ---------------------------------------------------------------------------
# packing layout and round trips


def test_pack_rows_layout():
    g = ByteGrid(64, 1, np.zeros((1, 64), np.uint8))
    assert pack_rows(g).words.tolist() == [[0]]
    cells = np.zeros((1, 64), np.uint8)
    cells[0, 0] = 1
    assert pack_rows(ByteGrid(64, 1, cells)).words[0, 0] == 1
    cells = np.zeros((2, 128), np.uint8)
    cells[1, 64 + 5] = 1  # row 1, word 1, bit 5
    packed = pack_rows(ByteGrid(128, 2, cells))
    assert packed.words[1, 1] == 1 << 5
    assert packed.words.sum() == 1 << 5


def test_pack_tiles_layout():
    g = ByteGrid(8, 8, np.ones((8, 8), np.uint8))
    assert pack_tiles(g).words[0, 0] == np.uint64(0xFFFFFFFFFFFFFFFF)
    cells = np.zeros((8, 8), np.uint8)
    cells[1, 0] = 1  # y=1, x=0 -> bit 8
    assert pack_tiles(ByteGrid(8, 8, cells)).words[0, 0] == 1 << 8
    cells = np.zeros((16, 16), np.uint8)
    cells[9, 10] = 1  # tile (1,1), y=1, x=2 -> bit 10
    assert pack_tiles(ByteGrid(16, 16, cells)).words[1, 1] == 1 << 10


@pytest.mark.parametrize("width,height", [(64, 1), (128, 4), (192, 7), (256, 16)])
def test_row_round_trip(width, height):
    g = gen_grid(width * height, width, height, 0.5)
    assert unpack_rows(pack_rows(g)).equals(g)


@pytest.mark.parametrize("width,height", [(64, 8), (128, 16), (192, 24)])
def test_tile_round_trip(width, height):
    g = gen_grid(width + height, width, height, 0.4)
    assert unpack_tiles(pack_tiles(g)).equals(g)


def test_pack_rejects_bad_dimensions():
    g = ByteGrid(100, 4, np.zeros((4, 100), np.uint8))
    with pytest.raises(EncodingError):
        pack_rows(g)
    g = ByteGrid(12, 5, np.zeros((5, 12), np.uint8))
    with pytest.raises(EncodingError):
        pack_tiles(g)


# ---------------------------------------------------------------------------
# variant equivalence against the oracle


def assert_variant_matches(g, variant, workers=1):
    out = run_iterations(g, 1, variant, workers=workers)
    expected = step_reference(g)
    assert to_byte_grid(out).equals(expected), variant


@pytest.mark.parametrize("variant", ALL_VARIANTS)
def test_variants_on_blinker(variant):
    g = place(64, 8, BLINKER_H, origin=(3, 30))
    assert_variant_matches(g, variant)


@pytest.mark.parametrize("variant", ALL_VARIANTS)
@pytest.mark.parametrize("density", [0.1, 0.5, 0.9])
def test_variants_on_random_grids(variant, density):
    for seed, (w, h) in enumerate([(64, 64), (128, 64), (192, 128)]):
        g = gen_grid(1000 * seed + int(density * 10), w, h, density)
        assert_variant_matches(g, variant)


@pytest.mark.parametrize("variant", PACKED_VARIANTS)
def test_word_boundary_carry(variant):
    # live cells straddling columns 63/64 exercise the horizontal carry
    g = place(128, 8, ((0, 0), (0, 1), (1, 0), (1, 1), (2, 0)), origin=(3, 62))
    assert_variant_matches(g, variant)


def test_tile_edge_halo():
    # live column crossing the boundary between tile columns 0 and 1
    g = place(16, 16, ((0, 0), (0, 1), (1, 0), (1, 1), (2, 1)), origin=(5, 7))
    assert_variant_matches(g, "tile-popc")


@pytest.mark.parametrize("variant", ALL_VARIANTS)
def test_variant_boundary_alive_edges(variant):
    # full border of live cells: every boundary rule path
    cells = np.zeros((16, 64), np.uint8)
    cells[0, :] = 1
    cells[-1, :] = 1
    cells[:, 0] = 1
    cells[:, -1] = 1
    assert_variant_matches(ByteGrid.from_cells(cells), variant)


def test_all_alive_interior_dies():
    g = ByteGrid(64, 3, np.ones((3, 64), np.uint8))
    out = step_reference(g)
    # interior row cells have 5+ neighbors except nothing survives here:
    # corners have 3, edge cells 5, middle-row cells 8
    assert out.cells[1, 1:-1].sum() == 0
    assert_variant_matches(g, "row-popc")


# ---------------------------------------------------------------------------
# run_iterations


def test_run_iterations_zero_returns_input():
    g = place(64, 8, BLOCK, origin=(2, 2))
    assert run_iterations(g, 0, "byte") is g


def test_run_iterations_blinker_period():
    g = place(64, 8, BLINKER_H, origin=(3, 20))
    out = run_iterations(g, 2, "row-fulladder")
    assert to_byte_grid(out).equals(g)


@pytest.mark.parametrize("variant", ALL_VARIANTS)
def test_run_iterations_glider_translates(variant):
    g = place(64, 32, GLIDER, origin=(4, 4))
    m = 3
    out = to_byte_grid(run_iterations(g, 4 * m, variant))
    expected = place(64, 32, GLIDER, origin=(4 + m, 4 + m))
    assert out.equals(expected)


def test_run_iterations_does_not_mutate_input():
    g = gen_grid(5, 64, 16, 0.5)
    before = g.cells.copy()
    run_iterations(g, 3, "row-popc")
    assert np.array_equal(g.cells, before)


def test_run_iterations_unknown_variant():
    g = place(64, 8, BLOCK)
    with pytest.raises(RegistryError):
        run_iterations(g, 1, "nope")


def test_run_iterations_accepts_packed_input():
    g = gen_grid(6, 64, 16, 0.3)
    packed = pack_rows(g)
    out = run_iterations(packed, 2, "byte")
    expected = step_reference(step_reference(g))
    assert to_byte_grid(out).equals(expected)


# ---------------------------------------------------------------------------
# determinism and worker independence


@pytest.mark.parametrize("variant", ALL_VARIANTS)
def test_worker_count_independence(variant):
    g = gen_grid(99, 128, 64, 0.5)
    results = [
        to_byte_grid(run_iterations(g, 2, variant, workers=w)).cells
        for w in (1, 2, 8)
    ]
    assert np.array_equal(results[0], results[1])
    assert np.array_equal(results[0], results[2])
    again = to_byte_grid(run_iterations(g, 2, variant, workers=2)).cells
    assert np.array_equal(results[0], again)


def test_step_functions_direct_call():
    g = gen_grid(123, 128, 32, 0.5)
    expected = step_reference(g)
    assert step_byte(g).equals(expected)
    assert unpack_rows(step_row_naive(pack_rows(g))).equals(expected)
    assert unpack_rows(step_row_popc(pack_rows(g))).equals(expected)
    assert unpack_rows(step_row_fulladder(pack_rows(g))).equals(expected)
    assert unpack_tiles(step_tile_popc(pack_tiles(g))).equals(expected)
