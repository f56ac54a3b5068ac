"""Discrete-event scheduler and the per-window latency ledger.

Events execute in (time, sequence) order, which makes every run with the
same inputs bit-for-bit reproducible. The optional ``pace`` turns the same
loop into a best-effort wall-clock mode by sleeping between events
(``pace`` simulated seconds pass per real second); results are identical in
both modes.
"""

from __future__ import annotations

import heapq
import time as _time
from dataclasses import dataclass
from typing import Callable

PHASES = ("speed_inference", "batch_inference", "hybrid_inference", "speed_training", "data_sync")
REPORT_PHASES = PHASES[:4]


class Simulator:
    def __init__(self, pace: float | None = None):
        self.now = 0.0
        self._queue: list[tuple[float, int, Callable[[], None]]] = []
        self._seq = 0
        self._pace = pace
        if pace is not None and pace <= 0:
            raise ValueError("pace must be positive")

    def schedule(self, delay: float, fn: Callable[[], None]) -> None:
        if delay < 0:
            raise ValueError("cannot schedule into the past")
        self.schedule_at(self.now + delay, fn)

    def schedule_at(self, at: float, fn: Callable[[], None]) -> None:
        if at < self.now:
            raise ValueError("cannot schedule into the past")
        heapq.heappush(self._queue, (at, self._seq, fn))
        self._seq += 1

    def step(self) -> bool:
        """Process the next event; returns False when the queue is empty."""
        if not self._queue:
            return False
        at, _, fn = heapq.heappop(self._queue)
        if self._pace is not None and at > self.now:
            _time.sleep((at - self.now) / self._pace)
        self.now = at
        fn()
        return True

    def run(self) -> None:
        while self.step():
            pass

    @property
    def pending(self) -> int:
        return len(self._queue)


@dataclass
class _Cell:
    computation: float = 0.0
    communication: float = 0.0

    @property
    def total(self) -> float:
        return self.computation + self.communication


class LatencyLedger:
    """Accumulates per-window, per-phase computation and communication
    seconds; phase totals are computation + communication by construction."""

    def __init__(self) -> None:
        self._cells: dict[tuple[int, str], _Cell] = {}

    def _cell(self, window: int, phase: str) -> _Cell:
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}")
        return self._cells.setdefault((window, phase), _Cell())

    def add_computation(self, window: int, phase: str, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("negative computation time")
        self._cell(window, phase).computation += seconds

    def add_communication(self, window: int, phase: str, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("negative communication time")
        self._cell(window, phase).communication += seconds

    def windows(self) -> list[int]:
        return sorted({w for w, _ in self._cells})

    def cell(self, window: int, phase: str) -> tuple[float, float, float]:
        cell = self._cells.get((window, phase), _Cell())
        return cell.computation, cell.communication, cell.total

    def phase_averages(self, phases: tuple[str, ...] = REPORT_PHASES) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for phase in phases:
            cells = [c for (w, p), c in self._cells.items() if p == phase]
            n = len(cells)
            if n == 0:
                out[phase] = {"computation": 0.0, "communication": 0.0, "total": 0.0, "windows": 0}
                continue
            comp = sum(c.computation for c in cells) / n
            comm = sum(c.communication for c in cells) / n
            out[phase] = {"computation": comp, "communication": comm, "total": comp + comm, "windows": n}
        return out

    def to_rows(self) -> list[tuple[int, str, float, float, float]]:
        rows = []
        for (window, phase), cell in sorted(self._cells.items()):
            rows.append((window, phase, cell.computation, cell.communication, cell.total))
        return rows
