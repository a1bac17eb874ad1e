import numpy as np
import pytest
from hypothesis import given, strategies as st

from quickfield.geometry import (CELL_SIZE, CellKind, ExitLabel, ExitVariant, Grid,
                                 Neighborhood, ParseError, Rimea11Params, ValidationError,
                                 build_rimea11, exit_distance_gap, load_scenario, neighbors,
                                 parse_scenario, serialize_scenario)


def test_minimal_map():
    s = parse_scenario("S.L", {"agent_count": 1})
    assert s.start_region == ((0, 0),)
    assert s.exit_labels == {(2, 0): ExitLabel.LEFT}
    assert s.grid[(2, 0)] is CellKind.DESTINATION
    assert s.grid.cell_size == CELL_SIZE == 0.4


def test_unknown_glyph_position():
    with pytest.raises(ParseError) as err:
        parse_scenario("S.X", {"agent_count": 1})
    assert err.value.position == (2, 0)
    assert err.value.char == "X"


def test_ragged_rows():
    with pytest.raises(ParseError) as err:
        parse_scenario("S.L\n..\n")
    assert err.value.row == 1


def test_agents_exceed_start_cells():
    with pytest.raises(ValidationError):
        parse_scenario("SS.L", {"agent_count": 3})


def test_no_destination():
    with pytest.raises(ValidationError):
        parse_scenario("SS..", {"agent_count": 1})


def test_config_text_and_default_count():
    s = parse_scenario("SSS.R", "agent_count = 2\nvariant = demo\n")
    assert s.agent_count == 2 and s.variant == "demo"
    with pytest.raises(ValidationError):
        parse_scenario("SSS.R")  # default of 1000 agents does not fit


def test_bad_config_line():
    with pytest.raises(ParseError):
        parse_scenario("S.L", "agent_count 1")


def test_file_format_round_trip(small_room):
    text = serialize_scenario(small_room)
    assert text.startswith("agent_count = 18\n")
    again = load_scenario(text)
    assert again == small_room
    assert serialize_scenario(again) == text


def test_neighborhood_counts():
    g = Grid(np.zeros((5, 5), dtype=np.int8))
    assert len(neighbors((2, 2), g, Neighborhood.VON_NEUMANN)) == 4
    assert len(neighbors((2, 2), g, Neighborhood.MOORE)) == 8
    assert len(neighbors((0, 0), g, Neighborhood.MOORE)) == 3
    assert neighbors((0, 0), g, Neighborhood.MOORE) == [(1, 0), (0, 1), (1, 1)]


def test_neighbors_skip_walls_and_wall_corners():
    g = parse_scenario("L#\n#.", {"agent_count": 0}).grid
    # The diagonal between the two open cells passes between two walls.
    assert neighbors((0, 0), g, Neighborhood.MOORE) == []
    g = parse_scenario("L.\n#.", {"agent_count": 0}).grid
    assert (1, 1) in neighbors((0, 0), g, Neighborhood.MOORE)


map_rows = st.integers(1, 6).flatmap(
    lambda w: st.lists(st.text("#.", min_size=w, max_size=w), min_size=1, max_size=6))


@given(map_rows)
def test_neighbor_relation_symmetric(rows):
    cells = np.array([[CellKind.WALL if c == "#" else CellKind.FREE for c in r] for r in rows],
                     dtype=np.int8)
    g = Grid(cells)
    for nb in Neighborhood:
        for y in range(g.height):
            for x in range(g.width):
                if g[(x, y)] is CellKind.WALL:
                    continue
                for other in neighbors((x, y), g, nb):
                    assert (x, y) in neighbors(other, g, nb)


@given(map_rows, st.data())
def test_round_trip_property(rows, data):
    rows = [list(r) for r in rows]
    free = [(x, y) for y, r in enumerate(rows) for x, c in enumerate(r) if c == "."]
    if not free:
        return
    dests = data.draw(st.lists(st.sampled_from(free), min_size=1, unique=True))
    for x, y in dests:
        rows[y][x] = data.draw(st.sampled_from("LR"))
    rest = [c for c in free if c not in dests]
    starts = data.draw(st.lists(st.sampled_from(rest), unique=True)) if rest else []
    for x, y in starts:
        rows[y][x] = "S"
    count = data.draw(st.integers(0, len(starts)))
    s = parse_scenario("\n".join("".join(r) for r in rows), {"agent_count": count})
    assert load_scenario(serialize_scenario(s)) == s


@pytest.mark.parametrize("variant", list(ExitVariant))
def test_rimea11_invariants(variant):
    s = build_rimea11(variant)
    assert s.agent_count == 1000 and len(s.start_region) >= 1000
    labels = s.exit_labels
    for label in ExitLabel:
        xs = sorted(x for (x, y), lab in labels.items() if lab is label)
        # Two contiguous destination cells per exit (80 cm at 40 cm cells).
        assert len(xs) == 2 and xs[1] - xs[0] == 1
    left = np.mean([x for (x, _), lab in labels.items() if lab is ExitLabel.LEFT])
    right = np.mean([x for (x, _), lab in labels.items() if lab is ExitLabel.RIGHT])
    assert left < right


def test_rimea11_exit_positions_shared_by_variants():
    pos = {v: sorted(build_rimea11(v).exit_labels) for v in ExitVariant}
    assert pos[ExitVariant.V1_RECESSED] == pos[ExitVariant.V2_FLUSH] == pos[ExitVariant.V3_CORRIDOR]


def test_rimea11_extra_path_flush():
    gap = exit_distance_gap(build_rimea11(ExitVariant.V2_FLUSH))
    assert gap == pytest.approx(12.5, abs=0.5)


def test_rimea11_variant_shapes():
    flush = build_rimea11(ExitVariant.V2_FLUSH).grid
    recessed = build_rimea11(ExitVariant.V1_RECESSED).grid
    corridor = build_rimea11(ExitVariant.V3_CORRIDOR).grid
    assert recessed.height == flush.height + 1
    assert corridor.height == flush.height + 3
    x = build_rimea11(ExitVariant.V1_RECESSED).grid.destinations()[0][0]
    # Recessed: destination row, then the doorway cell in the wall line.
    assert recessed[(x, 0)] is CellKind.DESTINATION and recessed[(x, 1)] is CellKind.FREE
    assert recessed[(x - 1, 1)] is CellKind.WALL
    assert [corridor[(x, y)] for y in range(4)] == [CellKind.DESTINATION] + [CellKind.FREE] * 3


def test_rimea11_too_small():
    with pytest.raises(ValidationError):
        build_rimea11(2, Rimea11Params(room_width=10, room_height=10, start_width=10,
                                       start_height=10, agent_count=100))
