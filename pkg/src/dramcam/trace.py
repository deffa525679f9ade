"""ACT/PRE command sequences and their line-oriented text form.

A trace is a plain list of :class:`Command`. Each command carries the time
gap (abstract units, one DRAM clock cycle each) between itself and the next
command; all timing-violation behavior is expressed through these gaps.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import TraceFormatError


class CommandKind(Enum):
    ACT = "ACT"
    PRE = "PRE"


@dataclass(frozen=True)
class Command:
    """One DRAM command plus the idle gap that follows it."""

    kind: CommandKind
    row: int | None
    gap_after: int


def act(row: int, gap: int) -> Command:
    return Command(CommandKind.ACT, row, gap)


def pre(gap: int) -> Command:
    return Command(CommandKind.PRE, None, gap)


def format_trace(trace: Iterable[Command]) -> str:
    """Render a trace in the canonical one-command-per-line text form."""
    lines = []
    for cmd in trace:
        if cmd.kind is CommandKind.ACT:
            lines.append(f"ACT {cmd.row} gap={cmd.gap_after}")
        else:
            lines.append(f"PRE gap={cmd.gap_after}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_trace(text: str) -> list[Command]:
    """Parse the text form back into a command list.

    Blank lines and `#` comments are permitted in hand-written files; the
    canonical emitter never produces them, so parse→emit is bit-exact on
    canonical text.
    """
    commands: list[Command] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "ACT":
                if len(parts) != 3:
                    raise ValueError("expected 'ACT <row> gap=<int>'")
                row = int(parts[1])
                gap = _parse_gap(parts[2])
                if row < 0:
                    raise ValueError("negative row")
                commands.append(act(row, gap))
            elif parts[0] == "PRE":
                if len(parts) != 2:
                    raise ValueError("expected 'PRE gap=<int>'")
                commands.append(pre(_parse_gap(parts[1])))
            else:
                raise ValueError(f"unknown command {parts[0]!r}")
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
    return commands


def _parse_gap(token: str) -> int:
    if not token.startswith("gap="):
        raise ValueError(f"expected gap=<int>, got {token!r}")
    gap = int(token[4:])
    if gap < 0:
        raise ValueError("negative gap")
    return gap


def trace_cycles(trace: Sequence[Command]) -> int:
    """Total simulated duration of a trace: the sum of its gaps."""
    return sum(cmd.gap_after for cmd in trace)


def activated_rows(trace: Iterable[Command]) -> list[int]:
    """Rows opened by ACT commands, in issue order."""
    return [cmd.row for cmd in trace if cmd.kind is CommandKind.ACT]
