"""Data types."""
from typing import Tuple

Point = Tuple[float, float]
Slot = Tuple[int, int]
Triangle = Tuple[Point, Point, Point]
