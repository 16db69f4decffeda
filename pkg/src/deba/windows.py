"""Bounded FIFO window over scalar signal values."""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional

from ._stats import median
from .errors import EmptyWindow, InvalidValue


class WindowStats:
    """Ordered window of recent values with strictly FIFO eviction.

    ``capacity=None`` means unbounded (full-history mode); otherwise the
    window never holds more than ``capacity`` values and evicts the oldest
    value first.
    """

    __slots__ = ("_values", "_capacity")

    def __init__(self, capacity: Optional[int] = None, values: Iterable[float] = ()):
        if capacity is not None and capacity < 1:
            raise InvalidValue("capacity", f"must be >= 1 or None, got {capacity}")
        self._capacity = capacity
        self._values: deque[float] = deque(values, maxlen=capacity)

    @property
    def capacity(self) -> Optional[int]:
        return self._capacity

    def push(self, value: float) -> None:
        self._values.append(value)

    def values(self) -> tuple[float, ...]:
        """Current contents in arrival order (oldest first)."""
        return tuple(self._values)

    def median(self) -> float:
        if not self._values:
            raise EmptyWindow("median of empty window")
        return median(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WindowStats):
            return NotImplemented
        return self._capacity == other._capacity and list(self._values) == list(other._values)

    def __repr__(self) -> str:
        cap = "unbounded" if self._capacity is None else self._capacity
        return f"WindowStats(capacity={cap}, n={len(self._values)})"

    def to_dict(self) -> dict:
        return {"capacity": self._capacity, "values": list(self._values)}

    @classmethod
    def from_dict(cls, data: dict) -> "WindowStats":
        return cls(capacity=data["capacity"], values=data["values"])
