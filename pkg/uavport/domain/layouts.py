"""
Bundled airport and station geometry

Every bundled loop is a regular polygon whose sides are all one edge
length (10 m by default), with the loading point at the bottom vertex.
The x axis splits the airport: the GW area lies below y = -1.5 m and the
AW area above y = 1.5 m, so each loop's first edge climbs from GW into
AW. Stations are synthetic: four pads 500-1500 m from the airport, each
with its own outbound and return altitude layer.
"""

from typing import List, Tuple

import numpy as np

from .types import AirportLayout, LayoutNode, LoopSpec, NodeKind, Point2

L, T, H, D = NodeKind.LOADING, NodeKind.TAKEOFF, NodeKind.HOLD, NodeKind.LANDING

DEFAULT_EDGE_M = 10.0
REGION_GAP_M = 1.5
COORD_DIGITS = 3

# (id, x_m, y_m, outbound_alt_m, return_alt_m)
DEFAULT_STATIONS = (
    (1, -600.0, 900.0, 8.0, 14.0),
    (2, -150.0, 550.0, 20.0, 26.0),
    (3, 250.0, 1200.0, 32.0, 38.0),
    (4, 700.0, 1000.0, 44.0, 50.0),
)


def polygon_ring(count: int, edge_m: float, mirrored: bool = False) -> np.ndarray:
    """
    Vertices of a regular polygon with sides of ``edge_m``

    The bottom vertex comes first and sits at the origin; the rest follow
    counter-clockwise, or clockwise when ``mirrored``.
    """
    radius = edge_m / (2 * np.sin(np.pi / count))
    turn = -1.0 if mirrored else 1.0
    angles = -np.pi / 2 + turn * 2 * np.pi * np.arange(count) / count
    ring = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    return ring - ring[0]


def _regions(edge_m: float) -> Tuple[Tuple[Point2, ...], Tuple[Point2, ...]]:
    half, top, bottom = 12 * edge_m, 8 * edge_m, -6 * edge_m
    aw = ((-half, REGION_GAP_M), (half, REGION_GAP_M), (half, top), (-half, top))
    gw = ((-half, bottom), (half, bottom), (half, -REGION_GAP_M), (-half, -REGION_GAP_M))
    return aw, gw


def _place(ring: np.ndarray, takeoff_x: float) -> List[Point2]:
    """Shift a ring so its takeoff vertex sits at ``takeoff_x`` and the GW/AW split is centred on its first edge"""
    gap = float(ring[1, 1])
    if gap < 2 * REGION_GAP_M:
        raise ValueError(f"loop edge too short: the loading point cannot reach GW ({gap:.2f} m rise)")
    shifted = ring + np.array([takeoff_x - ring[1, 0], -gap / 2])
    return [(round(float(x), COORD_DIGITS), round(float(y), COORD_DIGITS)) for x, y in shifted]


def _loop_nodes(ids, kinds, points) -> List[LayoutNode]:
    return [LayoutNode(i, k, x, y) for i, k, (x, y) in zip(ids, kinds, points)]


def _workbench(loading: Point2, edge_m: float) -> Point2:
    return (loading[0], round(loading[1] - 1.5 * edge_m, COORD_DIGITS))


def one_cycle_layout(edge_m: float = DEFAULT_EDGE_M) -> AirportLayout:
    """Six AGVs on one heptagonal loop with four hold points"""
    points = _place(polygon_ring(7, edge_m), 0.0)
    nodes = _loop_nodes(range(1, 8), (L, T, H, H, H, H, D), points)
    loops = (LoopSpec(1, (1, 2, 3, 4, 5, 6, 7)),)
    aw, gw = _regions(edge_m)
    return AirportLayout(aw, gw, (_workbench(points[0], edge_m),), tuple(nodes), loops)


def two_cycle_layout(edge_m: float = DEFAULT_EDGE_M) -> AirportLayout:
    """Two mirrored pentagonal loops sharing takeoff point 1, two hold points each"""
    left = _place(polygon_ring(5, edge_m), 0.0)
    right = _place(polygon_ring(5, edge_m, mirrored=True), 0.0)
    nodes = _loop_nodes((2, 1, 3, 4, 5), (L, T, H, H, D), left)
    nodes += _loop_nodes((6, 7, 8, 9), (L, H, H, D), right[:1] + right[2:])
    nodes.sort(key=lambda n: n.id)
    loops = (
        LoopSpec(1, (2, 1, 3, 4, 5)),
        LoopSpec(2, (6, 1, 7, 8, 9)),
    )
    aw, gw = _regions(edge_m)
    benches = (_workbench(left[0], edge_m), _workbench(right[0], edge_m))
    return AirportLayout(aw, gw, benches, tuple(nodes), loops)


def three_cycle_layout(edge_m: float = DEFAULT_EDGE_M) -> AirportLayout:
    """Three independent square loops with one hold point each"""
    nodes = []
    loops = []
    workbenches = []
    for i, takeoff_x in enumerate((-3 * edge_m, 0.0, 3 * edge_m), start=1):
        base = 4 * (i - 1)
        points = _place(polygon_ring(4, edge_m), takeoff_x)
        nodes += _loop_nodes(range(base + 1, base + 5), (L, T, H, D), points)
        loops.append(LoopSpec(i, (base + 1, base + 2, base + 3, base + 4)))
        workbenches.append(_workbench(points[0], edge_m))
    aw, gw = _regions(edge_m)
    return AirportLayout(aw, gw, tuple(workbenches), tuple(nodes), tuple(loops))


LAYOUT_BUILDERS = {
    'one-cycle': one_cycle_layout,
    'two-cycle': two_cycle_layout,
    'three-cycle': three_cycle_layout,
}


def default_layout(scheme: str, edge_m: float = DEFAULT_EDGE_M) -> AirportLayout:
    try:
        builder = LAYOUT_BUILDERS[scheme]
    except KeyError:
        raise ValueError(f"no bundled layout for scheme '{scheme}'") from None
    if edge_m <= 0:
        raise ValueError("loop edge length must be > 0")
    return builder(edge_m)


def default_station_rows() -> Tuple[Tuple[int, float, float, float, float], ...]:
    return DEFAULT_STATIONS
