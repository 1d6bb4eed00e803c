"""
Delivery orders

Orders are generated up front as a homogeneous Poisson process over the
run, each bound to a uniformly chosen station. An order is scored once,
when its cargo is unloaded at the station.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

ORDER_COLUMNS = ['id', 'station', 'order_t', 'better_t', 'timeout_t']


class OrderError(Exception):
    """Base class for order errors"""
    pass


class ScoreError(OrderError):
    """Raised when scoring an order that has not been delivered"""
    pass


class OrderFileError(OrderError):
    """Raised for an unreadable or inconsistent order file"""
    pass


@dataclass
class Order:
    """One delivery order; times in seconds from run start"""
    id: int
    station: int
    order_t: float
    better_t: float
    timeout_t: float
    finish_t: Optional[float] = None
    uav: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.order_t <= self.better_t < self.timeout_t):
            raise OrderError(f"order {self.id}: need order_t <= better_t < timeout_t")

    @property
    def delivered(self) -> bool:
        return self.finish_t is not None

    def finish(self, finish_t: float):
        if self.finish_t is not None:
            raise OrderError(f"order {self.id} already finished at {self.finish_t}")
        self.finish_t = finish_t


def score(order: Order) -> float:
    """
    Points for a delivered order

    Full marks up to better_t, falling linearly to zero at timeout_t and
    continuing below zero with the same slope afterwards.

    Raises:
        ScoreError: If the order has no finish time
    """
    if order.finish_t is None:
        raise ScoreError(f"order {order.id} has not been delivered")
    finish, better, timeout = order.finish_t, order.better_t, order.timeout_t
    window = timeout - better
    if finish <= better:
        return 100.0
    if finish <= timeout:
        return 100.0 * (timeout - finish) / window
    return -100.0 * (finish - timeout) / window


def generate_orders(rate: float, duration: float, stations: Union[int, Sequence[int]],
                    windows: Tuple[float, float] = (300.0, 900.0), seed: int = 0) -> List[Order]:
    """
    Seeded Poisson order list

    Args:
        rate: Mean orders per second
        duration: Length of the run in seconds
        stations: Number of stations K (ids 1..K) or an explicit id list
        windows: (better offset, timeout offset) in seconds
        seed: RNG seed

    Returns:
        Orders sorted by order_t, ids from 1
    """
    if rate <= 0:
        raise OrderError(f"order rate must be > 0, got {rate}")
    better_offset, timeout_offset = windows
    if not (0 <= better_offset < timeout_offset):
        raise OrderError("need 0 <= better offset < timeout offset")
    ids = list(range(1, stations + 1)) if isinstance(stations, int) else list(stations)
    if not ids:
        raise OrderError("at least one station is required")

    rng = np.random.default_rng(seed)
    count = int(rng.poisson(rate * duration))
    times = np.sort(rng.uniform(0.0, duration, size=count))
    picks = rng.integers(0, len(ids), size=count)
    orders = [
        Order(i + 1, int(ids[p]), float(t), float(t + better_offset), float(t + timeout_offset))
        for i, (t, p) in enumerate(zip(times, picks))
    ]
    logger.debug("generated %d orders over %.0fs (seed %d)", len(orders), duration, seed)
    return orders


def assign_orders(loading_uavs: Sequence[int], pending: Sequence[Order]) -> Dict[int, int]:
    """
    FIFO assignment: the oldest pending orders go to the UAVs starting to load, in turn

    Returns:
        {OrderId: UavId}
    """
    queue = sorted(pending, key=lambda o: (o.order_t, o.id))
    return {order.id: uav for order, uav in zip(queue, loading_uavs)}


class OrderBook:
    """All orders of a run with their assignment and delivery state; orders are copied in"""

    def __init__(self, orders: Iterable[Order] = ()):
        self._orders: Dict[int, Order] = {}
        for order in sorted(orders, key=lambda o: (o.order_t, o.id)):
            if order.id in self._orders:
                raise OrderError(f"duplicate order id {order.id}")
            self._orders[order.id] = replace(order)

    def __len__(self):
        return len(self._orders)

    def __iter__(self):
        return iter(self._orders.values())

    def get(self, order_id: int) -> Order:
        try:
            return self._orders[order_id]
        except KeyError:
            raise OrderError(f"unknown order {order_id}") from None

    def issued(self, now_s: float) -> List[Order]:
        return [o for o in self._orders.values() if o.order_t <= now_s]

    def pending(self, now_s: float) -> List[Order]:
        """Issued, unassigned orders, oldest first"""
        return [o for o in self._orders.values() if o.order_t <= now_s and o.uav is None]

    def mark_assigned(self, order_id: int, uav: int):
        order = self.get(order_id)
        if order.uav is not None and order.uav != uav:
            raise OrderError(f"order {order_id} already assigned to UAV {order.uav}")
        order.uav = uav

    def release(self, order_id: int):
        """Put an assigned but never loaded order back in the queue"""
        order = self.get(order_id)
        if order.delivered:
            raise OrderError(f"order {order_id} is already delivered")
        order.uav = None

    def finish(self, order_id: int, finish_t: float) -> float:
        """Record delivery and return the order's score"""
        order = self.get(order_id)
        order.finish(finish_t)
        return score(order)

    @property
    def delivered(self) -> List[Order]:
        return [o for o in self._orders.values() if o.delivered]


def orders_to_frame(orders: Iterable[Order]) -> pd.DataFrame:
    rows = [[o.id, o.station, o.order_t, o.better_t, o.timeout_t] for o in orders]
    return pd.DataFrame(rows, columns=ORDER_COLUMNS)


def write_orders(orders: Iterable[Order], path: Union[str, Path]) -> Path:
    """Write an order list as CSV (id, station, order_t, better_t, timeout_t)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    orders_to_frame(orders).to_csv(path, index=False)
    return path


def read_orders(path: Union[str, Path], stations: Optional[Iterable[int]] = None) -> List[Order]:
    """
    Read an order list written by write_orders

    Args:
        path: CSV file
        stations: Known station ids; orders for other stations are rejected

    Raises:
        OrderFileError: On a missing file, missing columns or invalid rows
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise OrderFileError(f"cannot read order file {path}: {e}") from e
    missing = [c for c in ORDER_COLUMNS if c not in frame.columns]
    if missing:
        raise OrderFileError(f"order file {path} lacks columns {missing}")
    known = set(stations) if stations is not None else None
    orders = []
    try:
        for row in frame[ORDER_COLUMNS].itertuples(index=False):
            if known is not None and int(row.station) not in known:
                raise OrderFileError(f"order {row.id} names unknown station {row.station}")
            orders.append(Order(int(row.id), int(row.station), float(row.order_t),
                                float(row.better_t), float(row.timeout_t)))
    except (ValueError, OrderError) as e:
        if isinstance(e, OrderFileError):
            raise
        raise OrderFileError(f"invalid row in {path}: {e}") from e
    return orders

