"""Fully associative backup cache with used/enabled bits and randomized victim selection."""

import random
from typing import Optional

from .core import CacheError


class _BackupLine:
    __slots__ = ("valid", "dirty", "used", "enabled", "addr")

    def __init__(self):
        self.valid = False
        self.dirty = False
        self.used = False
        self.enabled = False
        self.addr = 0


class BackupCache:
    """Eviction-absorbing cache at L1 level.

    Per line, beyond valid/dirty:
      * used    -- set when the line is accessed again after installation;
                   cleared in bulk at context switches.
      * enabled -- gates participation; disabled lines never hold data and
                   are invisible to lookups.

    Victim selection is tiered: enabled invalid lines first, then a uniform
    random draw among enabled lines with used=1, then among those with
    used=0. The number of enabled lines can be resized between min_size
    and max_size.
    """

    def __init__(self, capacity: int, min_size: int, max_size: int,
                 initial_size: int, rng: random.Random):
        if capacity < 1:
            raise CacheError("backup capacity must be positive")
        if not 1 <= min_size <= max_size <= capacity:
            raise CacheError(
                f"need 1 <= min_size <= max_size <= capacity, "
                f"got {min_size}/{max_size}/{capacity}")
        if not min_size <= initial_size <= max_size:
            raise CacheError(f"initial size {initial_size} outside [{min_size}, {max_size}]")
        self.capacity = capacity
        self.min_size = min_size
        self.max_size = max_size
        self.rng = rng
        self.lines = [_BackupLine() for _ in range(capacity)]
        for line in self.lines[:initial_size]:
            line.enabled = True
        self.current_size = initial_size
        self._where: dict[int, int] = {}

    def contains(self, addr: int) -> bool:
        return addr in self._where

    def lookup(self, addr: int) -> bool:
        """Probe for a line-aligned address; a hit marks the line as re-used."""
        slot = self._where.get(addr)
        if slot is None:
            return False
        self.lines[slot].used = True
        return True

    def write_touch(self, addr: int) -> bool:
        """On hit, mark the line dirty and re-used."""
        slot = self._where.get(addr)
        if slot is None:
            return False
        line = self.lines[slot]
        line.dirty = True
        line.used = True
        return True

    def select_victim(self) -> int:
        """Tiered random victim choice among enabled lines."""
        invalid = []
        used1 = []
        used0 = []
        for i, line in enumerate(self.lines):
            if not line.enabled:
                continue
            if not line.valid:
                invalid.append(i)
            elif line.used:
                used1.append(i)
            else:
                used0.append(i)
        for tier in (invalid, used1, used0):
            if tier:
                return tier[self.rng.randrange(len(tier))]
        raise CacheError("no enabled line to select a victim from")

    def insert(self, addr: int, dirty: bool = False) -> Optional[tuple[int, bool]]:
        """Install a line, returning the displaced (address, dirty) pair if any.

        The address must not already be resident; new lines start with used=0.
        """
        if addr in self._where:
            raise CacheError(f"insert of already-resident address {addr:#x}")
        slot = self.select_victim()
        line = self.lines[slot]
        evicted = None
        if line.valid:
            evicted = (line.addr, line.dirty)
            del self._where[line.addr]
        line.valid = True
        line.dirty = dirty
        line.used = False
        line.addr = addr
        self._where[addr] = slot
        return evicted

    def invalidate(self, addr: int) -> bool:
        slot = self._where.pop(addr, None)
        if slot is None:
            return False
        line = self.lines[slot]
        line.valid = False
        line.dirty = False
        line.used = False
        return True

    def clear_used(self) -> int:
        """Clear every used bit; returns how many were set."""
        count = 0
        for line in self.lines:
            if line.used:
                count += 1
                line.used = False
        return count

    def resize(self, new_size: int) -> list[int]:
        """Change the enabled-line count; returns dirty victims needing write-back.

        Growing enables currently disabled (hence invalid) lines. Shrinking
        picks victims with the normal tiered policy, invalidates them, and
        disables their slots.
        """
        if not self.min_size <= new_size <= self.max_size:
            raise CacheError(f"new size {new_size} outside [{self.min_size}, {self.max_size}]")
        writebacks: list[int] = []
        if new_size > self.current_size:
            needed = new_size - self.current_size
            for line in self.lines:
                if needed == 0:
                    break
                if not line.enabled:
                    line.enabled = True
                    needed -= 1
        elif new_size < self.current_size:
            for _ in range(self.current_size - new_size):
                slot = self.select_victim()
                line = self.lines[slot]
                if line.valid:
                    if line.dirty:
                        writebacks.append(line.addr)
                    del self._where[line.addr]
                line.valid = False
                line.dirty = False
                line.used = False
                line.enabled = False
        self.current_size = new_size
        return writebacks

    def valid_count(self) -> int:
        return len(self._where)

    def enabled_count(self) -> int:
        return sum(1 for line in self.lines if line.enabled)

    def state_tuple(self) -> tuple:
        return tuple(
            (line.valid, line.dirty, line.used, line.enabled, line.addr)
            for line in self.lines
        )
