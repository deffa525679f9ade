"""Behavioral model of one unmodified DRAM subarray driven by ACT/PRE traces.

Charge is binary and bitline levels are symbolic: an activation moves each
bitline to half +/- delta according to the opened cells and the sense
amplifiers resolve the sign to full or zero, restoring the open cells.
Opening a single row therefore reads it non-destructively; opening three
rows (via a minimum-gap ACT-PRE-ACT) resolves every column to the majority
of the three cells and writes that majority back to all of them. A
truncated precharge leaves the amplifiers driving, so the next activation
overwrites its row with the latched values (row copy).

Commands are applied strictly in trace order; simulation time advances
only by each command's ``gap_after``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence
import warnings

import numpy as np

from .config import DeviceConfig, TimingModel
from .errors import AddressFault, ProtocolFault, StalePresetWarning, TimingFault
from .microops import majority_row_set
from .trace import Command, CommandKind


class BitlinePhase(Enum):
    PRECHARGED = "precharged"
    SHARING = "sharing"
    RESOLVED = "resolved"


class BitlineLevel(Enum):
    HALF = "half"
    HALF_PLUS_DELTA = "half+delta"
    HALF_MINUS_DELTA = "half-delta"
    ZERO = "zero"
    FULL = "full"


_PHASE_LEVELS = {
    BitlinePhase.PRECHARGED: {BitlineLevel.HALF},
    BitlinePhase.SHARING: {BitlineLevel.HALF_PLUS_DELTA, BitlineLevel.HALF_MINUS_DELTA},
    BitlinePhase.RESOLVED: {BitlineLevel.ZERO, BitlineLevel.FULL},
}


@dataclass(frozen=True)
class BitlineState:
    """Phase and symbolic voltage of one bitline; no numeric volts exist here."""

    phase: BitlinePhase
    level: BitlineLevel

    def __post_init__(self) -> None:
        if self.level not in _PHASE_LEVELS[self.phase]:
            raise ValueError(f"level {self.level} invalid for phase {self.phase}")


class MicroOp(Enum):
    NONE = "none"
    ROW_COPY = "row_copy"
    MULTI_ACTIVATE = "multi_activate"


@dataclass(frozen=True)
class MicroOpDecision:
    kind: MicroOp
    source: int | None = None
    target: int | None = None
    rows: tuple[int, int, int] | None = None


_NONE_DECISION = MicroOpDecision(MicroOp.NONE)


def detect_micro_op(window: Sequence[Command], timing: TimingModel) -> MicroOpDecision:
    """Classify the trailing command window ending at the ACT just issued.

    The window's last command is the current ACT; only an ACT-PRE-ACT shape
    can violate timing. Gaps at or above nominal are standard; a nominal
    activation followed by a truncated precharge is a row copy; both gaps
    at minimum is a triple-row activation. Anything else is the undefined
    band: a fault when ``timing.strict``, otherwise treated as standard.
    """
    if len(window) < 3:
        return _NONE_DECISION
    first, middle, last = window[-3], window[-2], window[-1]
    if not (first.kind is CommandKind.ACT and middle.kind is CommandKind.PRE
            and last.kind is CommandKind.ACT):
        return _NONE_DECISION
    act_gap, pre_gap = first.gap_after, middle.gap_after
    if act_gap >= timing.t_ras and pre_gap >= timing.t_rp:
        return _NONE_DECISION
    if act_gap < timing.t_multi_threshold and pre_gap < timing.t_multi_threshold:
        rows = majority_row_set(first.row, last.row)
        return MicroOpDecision(MicroOp.MULTI_ACTIVATE, rows=rows)
    if act_gap >= timing.t_ras and pre_gap < timing.t_copy_threshold:
        return MicroOpDecision(MicroOp.ROW_COPY, source=first.row, target=last.row)
    if timing.strict:
        raise TimingFault(
            f"gaps ({act_gap}, {pre_gap}) fall between micro-op thresholds "
            f"and nominal timing (t_multi<{timing.t_multi_threshold}, "
            f"t_copy<{timing.t_copy_threshold}, nominal {timing.t_ras}/{timing.t_rp})")
    return _NONE_DECISION


@dataclass
class CoverageReport:
    """Which cells of the requested rows were activated inside a window."""

    rows: tuple[int, ...]
    covered: np.ndarray  # bool, shape (len(rows), cols)
    fraction: float


class RefreshTracker:
    """Per-cell last-activation timestamps; -1 marks a never-touched cell."""

    def __init__(self, rows: int, cols: int, refresh_interval: int):
        self.refresh_interval = refresh_interval
        self.last_activation = np.full((rows, cols), -1, dtype=np.int64)

    def mark(self, rows: Iterable[int], clock: int) -> None:
        self.last_activation[list(rows), :] = clock

    def coverage(self, rows: Sequence[int], t0: int, t1: int) -> CoverageReport:
        stamps = self.last_activation[list(rows), :]
        covered = (stamps >= t0) & (stamps <= t1)
        return CoverageReport(tuple(rows), covered, float(covered.mean()))


def refresh_coverage(tracker: RefreshTracker, rows: Sequence[int],
                     window: tuple[int, int]) -> CoverageReport:
    return tracker.coverage(rows, window[0], window[1])


class Subarray:
    """One subarray: the cell grid, its sense amplifiers, and protocol state.

    All commands against a subarray must be applied sequentially; distinct
    subarrays share nothing and may be driven in parallel.
    """

    def __init__(self, rows: int, cols: int, timing: TimingModel | None = None):
        self.rows = rows
        self.cols = cols
        self.timing = timing or TimingModel()
        self.cells = np.zeros((rows, cols), dtype=np.uint8)
        self.row_buffer = np.zeros(cols, dtype=np.uint8)
        self.open_rows: set[int] = set()
        self.phase = BitlinePhase.PRECHARGED
        self.clock = 0
        self.tracker = RefreshTracker(rows, cols, self.timing.refresh_interval)
        self._readable = False
        self._recent: list[Command] = []  # last two commands, oldest first
        self._written_since_majority: set[int] = set()

    @classmethod
    def from_device(cls, device: DeviceConfig) -> "Subarray":
        return cls(device.rows_per_subarray, device.cols_per_subarray, device.timing)

    # -- host-side data path -------------------------------------------------

    def write_row(self, row: int, bits: Sequence[int] | np.ndarray) -> None:
        """Host load path: overwrite one row, bypassing the command protocol."""
        self._check_row(row)
        data = np.asarray(bits, dtype=np.uint8)
        if data.shape != (self.cols,):
            raise AddressFault(
                f"write of {data.shape} bits into a {self.cols}-column row")
        if not np.isin(data, (0, 1)).all():
            raise AddressFault("row bits must be 0/1")
        self.cells[row] = data
        self.tracker.mark([row], self.clock)
        self._written_since_majority.add(row)

    def read_row_buffer(self) -> np.ndarray:
        """Latched sense-amplifier values; only valid while a row is open."""
        if not self._readable:
            raise ProtocolFault("row buffer read with no resolved open row")
        return self.row_buffer.copy()

    # -- command protocol ----------------------------------------------------

    def apply(self, cmd: Command) -> None:
        """Apply one command at the current clock, then advance by its gap."""
        if cmd.kind is CommandKind.PRE:
            self._apply_pre(cmd)
        else:
            self._apply_act(cmd)
        self.clock += cmd.gap_after
        self._recent.append(cmd)
        if len(self._recent) > 2:
            self._recent.pop(0)

    def execute(self, trace: Iterable[Command]) -> None:
        for cmd in trace:
            self.apply(cmd)

    def _apply_pre(self, cmd: Command) -> None:
        self.open_rows = set()
        self._readable = False
        if cmd.gap_after >= self.timing.t_rp:
            self.phase = BitlinePhase.PRECHARGED
        # A shorter gap interrupts the precharge: the amplifiers keep
        # driving whatever they last resolved.

    def _apply_act(self, cmd: Command) -> None:
        self._check_row(cmd.row)
        if self.open_rows and (not self._recent or
                               self._recent[-1].kind is not CommandKind.PRE):
            raise ProtocolFault(
                f"ACT {cmd.row} issued while rows {sorted(self.open_rows)} "
                "are open with no intervening PRE")
        decision = detect_micro_op([*self._recent, cmd], self.timing)
        if decision.kind is MicroOp.ROW_COPY:
            self._do_row_copy(decision.target)
        elif decision.kind is MicroOp.MULTI_ACTIVATE:
            for r in decision.rows:
                self._check_row(r)
            self._do_multi_activate(decision.rows)
        else:
            self._resolve((cmd.row,))

    def _do_row_copy(self, target: int) -> None:
        # Truncated PRE kept the bitlines resolved; the target cells latch
        # the driven values.
        assert self.phase is BitlinePhase.RESOLVED, "copy without driven bitlines"
        self.cells[target] = self.row_buffer
        self.open_rows = {target}
        self._readable = True
        self.tracker.mark([target], self.clock)
        self._written_since_majority.add(target)

    def _do_multi_activate(self, rows: tuple[int, int, int]) -> None:
        if not self._written_since_majority & set(rows):
            warnings.warn(
                f"majority on rows {rows} with no participant rewritten since "
                "the previous one; the preset is likely stale",
                StalePresetWarning, stacklevel=4)
        self._resolve(rows)
        self._written_since_majority = set()

    def _resolve(self, rows: tuple[int, ...]) -> None:
        cells = self.cells
        if len(rows) == 1:
            resolved = cells[rows[0]].copy()
        else:
            # Sign of the summed deviations (2c - 1) over the open cells,
            # i.e. the per-column majority; never a tie for an odd count.
            votes = cells[list(rows)].sum(axis=0, dtype=np.int16)
            resolved = (2 * votes > len(rows)).astype(np.uint8)
            cells[list(rows)] = resolved
        self.row_buffer = resolved
        self.open_rows = set(rows)
        self.phase = BitlinePhase.RESOLVED
        self._readable = True
        self.tracker.mark(rows, self.clock)

    # -- inspection ----------------------------------------------------------

    def bitline(self, col: int) -> BitlineState:
        """Resting state of one bitline (between commands)."""
        if self.phase is BitlinePhase.PRECHARGED:
            return BitlineState(BitlinePhase.PRECHARGED, BitlineLevel.HALF)
        level = BitlineLevel.FULL if self.row_buffer[col] else BitlineLevel.ZERO
        return BitlineState(BitlinePhase.RESOLVED, level)

    def sharing_levels(self, rows: Sequence[int]) -> list[BitlineState]:
        """Transient charge-sharing levels an activation of `rows` would make."""
        deviation = (2 * self.cells[list(rows)].astype(np.int16) - 1).sum(axis=0)
        return [
            BitlineState(
                BitlinePhase.SHARING,
                BitlineLevel.HALF_PLUS_DELTA if d > 0 else BitlineLevel.HALF_MINUS_DELTA,
            )
            for d in deviation
        ]

    def _check_row(self, row: int | None) -> None:
        if row is None or not 0 <= row < self.rows:
            raise AddressFault(f"row {row} outside 0..{self.rows - 1}")
