"""
Merge-sort tree over weighted 2D points for rlbwt-lab
Answers enumerate / min / sum over axis-aligned rectangles.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np

Point = Tuple[int, int, int]


class RangeTree:
    """Points sorted by x; every segment keeps its points sorted by y with prefix sums."""

    def __init__(self, points: Sequence[Point]):
        ordered = sorted(points)
        self.size = len(ordered)
        self._xs = np.array([p[0] for p in ordered], dtype=np.int64)
        self._ys: List[Optional[np.ndarray]] = [None] * (4 * max(1, self.size))
        self._ws: List[Optional[np.ndarray]] = [None] * (4 * max(1, self.size))
        self._sums: List[Optional[np.ndarray]] = [None] * (4 * max(1, self.size))
        if self.size:
            ys = np.array([p[1] for p in ordered], dtype=np.int64)
            ws = np.array([p[2] for p in ordered], dtype=np.int64)
            self._build(1, 0, self.size, ys, ws)

    def _build(self, node: int, lo: int, hi: int, ys: np.ndarray, ws: np.ndarray) -> None:
        order = np.argsort(ys[lo:hi], kind="stable")
        node_ys = ys[lo:hi][order]
        node_ws = ws[lo:hi][order]
        self._ys[node] = node_ys
        self._ws[node] = node_ws
        self._sums[node] = np.concatenate(([0], np.cumsum(node_ws)))
        if hi - lo > 1:
            mid = (lo + hi) // 2
            self._build(2 * node, lo, mid, ys, ws)
            self._build(2 * node + 1, mid, hi, ys, ws)

    def _segments(self, x_lo: int, x_hi: int, y_lo: int, y_hi: int):
        """(node, a, b) slices covering points with x in [x_lo..x_hi] and y in [y_lo..y_hi]."""
        if not self.size or x_lo > x_hi or y_lo > y_hi:
            return
        left = int(np.searchsorted(self._xs, x_lo, side="left"))
        right = int(np.searchsorted(self._xs, x_hi, side="right"))
        if left >= right:
            return
        stack = [(1, 0, self.size)]
        while stack:
            node, lo, hi = stack.pop()
            if hi <= left or right <= lo:
                continue
            if left <= lo and hi <= right:
                ys = self._ys[node]
                a = int(np.searchsorted(ys, y_lo, side="left"))
                b = int(np.searchsorted(ys, y_hi, side="right"))
                if a < b:
                    yield node, a, b
                continue
            mid = (lo + hi) // 2
            stack.append((2 * node + 1, mid, hi))
            stack.append((2 * node, lo, mid))

    def enumerate(self, x_lo: int, x_hi: int, y_lo: int, y_hi: int) -> List[int]:
        out: List[int] = []
        for node, a, b in self._segments(x_lo, x_hi, y_lo, y_hi):
            out.extend(int(w) for w in self._ws[node][a:b])
        return out

    def minimum(self, x_lo: int, x_hi: int, y_lo: int, y_hi: int) -> Optional[int]:
        best = None
        for node, a, b in self._segments(x_lo, x_hi, y_lo, y_hi):
            value = int(self._ws[node][a:b].min())
            best = value if best is None else min(best, value)
        return best

    def total(self, x_lo: int, x_hi: int, y_lo: int, y_hi: int) -> int:
        sums = self._sums
        return sum(int(sums[node][b] - sums[node][a]) for node, a, b in self._segments(x_lo, x_hi, y_lo, y_hi))

    def count(self, x_lo: int, x_hi: int, y_lo: int, y_hi: int) -> int:
        return sum(b - a for _, a, b in self._segments(x_lo, x_hi, y_lo, y_hi))
