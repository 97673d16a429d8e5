"""Trace parsing, trace-driven simulation, and statistics accumulation."""

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import ADDR_LIMIT
from .simulator import Simulator

KIND_LOAD = "load"
KIND_STORE = "store"
KIND_CTXSWITCH = "ctxswitch"
KIND_INVALIDATE = "invalidate"

_HEXADDR = re.compile(r"0x[0-9a-fA-F]{1,12}\Z")
_OPCODES = {"R": KIND_LOAD, "W": KIND_STORE, "INV": KIND_INVALIDATE}


class TraceError(Exception):
    """Malformed trace input."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class TraceRecord:
    kind: str
    addr: Optional[int] = None


def parse_line(lineno: int, line: str) -> Optional[TraceRecord]:
    """Parse one trace line; returns None for comments and blanks."""
    stripped = line.rstrip("\n")
    if not stripped.strip() or stripped.startswith("#"):
        return None
    if stripped == "CS":
        return TraceRecord(kind=KIND_CTXSWITCH)
    parts = stripped.split(" ")
    if len(parts) != 2 or parts[0] not in _OPCODES:
        raise TraceError(lineno, f"unrecognized record {stripped!r}")
    if not _HEXADDR.match(parts[1]):
        raise TraceError(lineno, f"bad address {parts[1]!r}")
    addr = int(parts[1], 16)
    if addr >= ADDR_LIMIT:
        raise TraceError(lineno, f"address {parts[1]} outside 48-bit space")
    return TraceRecord(kind=_OPCODES[parts[0]], addr=addr)


def parse_trace(lines: Iterable[str]) -> list[TraceRecord]:
    records = []
    for lineno, line in enumerate(lines, start=1):
        rec = parse_line(lineno, line)
        if rec is not None:
            records.append(rec)
    return records


@dataclass
class SimStats:
    """Aggregate counters for one trace run."""

    accesses: int = 0
    case_counts: dict = field(default_factory=lambda: {"00": 0, "01": 0, "10": 0, "11": 0})
    l1d_hits: int = 0
    l1d_misses: int = 0
    backup_hits: int = 0
    l2_hits: int = 0
    l2_misses: int = 0
    writebacks: int = 0
    resizes: int = 0
    ctx_switches: int = 0
    invalidations: int = 0
    total_latency_cycles: int = 0

    @property
    def avg_access_latency(self) -> float:
        return self.total_latency_cycles / self.accesses if self.accesses else 0.0

    def as_dict(self) -> dict:
        return {
            "accesses": self.accesses,
            "case_counts": dict(self.case_counts),
            "l1d_hits": self.l1d_hits,
            "l1d_misses": self.l1d_misses,
            "backup_hits": self.backup_hits,
            "l2_hits": self.l2_hits,
            "l2_misses": self.l2_misses,
            "writebacks": self.writebacks,
            "resizes": self.resizes,
            "ctx_switches": self.ctx_switches,
            "invalidations": self.invalidations,
            "total_latency_cycles": self.total_latency_cycles,
            "avg_access_latency": self.avg_access_latency,
        }

    def as_text(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if key == "case_counts":
                for case, count in sorted(value.items()):
                    lines.append(f"case_{case}={count}")
            elif key == "avg_access_latency":
                lines.append(f"{key}={value:.6f}")
            else:
                lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def run_trace(sim: Simulator, records: Iterable[TraceRecord]) -> SimStats:
    """Apply every record in order and accumulate statistics."""
    stats = SimStats()
    for rec in records:
        if rec.kind == KIND_CTXSWITCH:
            sim.context_switch()
            stats.ctx_switches += 1
            continue
        if rec.kind == KIND_INVALIDATE:
            sim.external_invalidate(rec.addr)
            stats.invalidations += 1
            continue
        outcome = sim.access(rec.addr, store=(rec.kind == KIND_STORE))
        stats.accesses += 1
        stats.case_counts[outcome.case] += 1
        stats.total_latency_cycles += outcome.latency_cycles
        if outcome.case in ("10", "11"):
            stats.l1d_hits += 1
        else:
            stats.l1d_misses += 1
        if outcome.case in ("01", "11"):
            stats.backup_hits += 1
        if outcome.l2_hit is True:
            stats.l2_hits += 1
        elif outcome.l2_hit is False:
            stats.l2_misses += 1
        stats.writebacks += len(outcome.writebacks)
        if outcome.resized is not None:
            stats.resizes += 1
    return stats
