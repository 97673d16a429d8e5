"""Memory hierarchy controller: L1D + backup cache + L2, latency accounting, resizing."""

import hashlib
import random
from dataclasses import dataclass, field
from typing import Optional

from .backup import BackupCache
from .core import CacheError, CacheGeometry, SetAssociativeCache, line_addr

DEFAULT_SEED = 0xB4C4E

MODE_BASELINE = "baseline"
MODE_BACKUP = "backup"

RESIZE_DYNAMIC = "dynamic"
RESIZE_FIXED = "fixed"


class ConfigError(CacheError):
    """Invalid simulator configuration."""


@dataclass(frozen=True)
class SimConfig:
    """Full simulator parameterization.

    In baseline mode the backup_* and resize fields are ignored. The miss
    path costs l2.hit_cycles on an L2 hit and additionally
    memory_penalty_cycles on an L2 miss.
    """

    mode: str = MODE_BACKUP
    l1d: CacheGeometry = field(
        default_factory=lambda: CacheGeometry(line_bytes=64, num_sets=64, ways=4, hit_cycles=3))
    l2: CacheGeometry = field(
        default_factory=lambda: CacheGeometry(line_bytes=64, num_sets=2048, ways=8, hit_cycles=20))
    backup_capacity: int = 256
    backup_min: int = 192
    backup_max: int = 256
    memory_penalty_cycles: int = 100
    seed: int = DEFAULT_SEED
    resize_mode: str = RESIZE_DYNAMIC
    fixed_threshold: Optional[int] = None

    def __post_init__(self):
        if self.mode not in (MODE_BASELINE, MODE_BACKUP):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.l1d.line_bytes != self.l2.line_bytes:
            raise ConfigError("L1D and L2 must share one line size")
        if self.memory_penalty_cycles < 1:
            raise ConfigError("memory_penalty_cycles must be positive")
        if self.mode == MODE_BACKUP:
            if not 1 <= self.backup_min <= self.backup_max <= self.backup_capacity:
                raise ConfigError(
                    f"need 1 <= backup_min <= backup_max <= backup_capacity, "
                    f"got {self.backup_min}/{self.backup_max}/{self.backup_capacity}")
            if self.resize_mode not in (RESIZE_DYNAMIC, RESIZE_FIXED):
                raise ConfigError(f"unknown resize_mode {self.resize_mode!r}")
            if self.resize_mode == RESIZE_FIXED:
                if self.fixed_threshold is None or self.fixed_threshold < 1:
                    raise ConfigError("fixed resize mode needs a positive fixed_threshold")


def baseline_config(seed: int = DEFAULT_SEED) -> SimConfig:
    """Undefended reference system: 4-way 32KB L1D at 2 cycles, 8-way 1MB L2."""
    return SimConfig(
        mode=MODE_BASELINE,
        l1d=CacheGeometry(line_bytes=64, num_sets=128, ways=4, hit_cycles=2),
        seed=seed,
    )


def backup_config(min_kb: int = 12, max_kb: int = 16, seed: int = DEFAULT_SEED,
                  resize_mode: str = RESIZE_DYNAMIC,
                  fixed_threshold: Optional[int] = None) -> SimConfig:
    """Defended system: 4-way 16KB L1D at 3 cycles plus a 16KB backup cache.

    min_kb/max_kb bound the enabled backup size (12-16, 8-16, or 4-16 are
    the studied ranges).
    """
    line = 64
    return SimConfig(
        mode=MODE_BACKUP,
        backup_capacity=max_kb * 1024 // line,
        backup_min=min_kb * 1024 // line,
        backup_max=max_kb * 1024 // line,
        seed=seed,
        resize_mode=resize_mode,
        fixed_threshold=fixed_threshold,
    )


@dataclass
class HwRegisters:
    """The three control registers plus the optional fixed-threshold override."""

    mem_access_count: int
    bcs_min: int
    bcs_max: int
    fixed_threshold: Optional[int] = None


@dataclass(frozen=True)
class AccessOutcome:
    """Per-access record of hit case, latency, and side effects.

    case is "00"/"01"/"10"/"11" for (L1D hit?, backup hit?); baseline mode
    only produces "10" and "00". l2_hit is set on the "00" path only.
    """

    case: str
    latency_cycles: int
    l1_eviction: Optional[int] = None
    writebacks: tuple[int, ...] = ()
    resized: Optional[tuple[int, int]] = None
    l2_hit: Optional[bool] = None


class Simulator:
    """Deterministic state machine over one L1D (+ optional backup) and one L2.

    All randomness (initial backup size, resize draws, victim selection)
    comes from a single generator seeded from the config, so identical
    (config, trace) pairs replay identically.
    """

    def __init__(self, config: SimConfig):
        self.config = config
        self.rng = random.Random(config.seed)
        self.l1d = SetAssociativeCache(config.l1d)
        self.l2 = SetAssociativeCache(config.l2)
        self.backup: Optional[BackupCache] = None
        self.registers: Optional[HwRegisters] = None
        self.resize_count = 0
        if config.mode == MODE_BACKUP:
            size = self.rng.randint(config.backup_min, config.backup_max)
            self.backup = BackupCache(
                capacity=config.backup_capacity,
                min_size=config.backup_min,
                max_size=config.backup_max,
                initial_size=size,
                rng=self.rng,
            )
            counter = size if config.resize_mode == RESIZE_DYNAMIC else config.fixed_threshold
            self.registers = HwRegisters(
                mem_access_count=counter,
                bcs_min=config.backup_min,
                bcs_max=config.backup_max,
                fixed_threshold=config.fixed_threshold,
            )

    # -- memory access ------------------------------------------------

    def load(self, addr: int) -> AccessOutcome:
        return self.access(addr, store=False)

    def store(self, addr: int) -> AccessOutcome:
        return self.access(addr, store=True)

    def access(self, addr: int, store: bool = False) -> AccessOutcome:
        if self.config.mode == MODE_BASELINE:
            return self._access_baseline(addr, store)
        return self._access_backup(addr, store)

    def _access_baseline(self, addr: int, store: bool) -> AccessOutcome:
        if self.l1d.lookup(addr):
            if store:
                self.l1d.write_touch(addr)
            return AccessOutcome(case="10", latency_cycles=self.config.l1d.hit_cycles)
        latency, l2_hit = self._fetch_from_l2(addr)
        writebacks = []
        eviction = None
        evicted = self.l1d.insert(addr, dirty=store)
        if evicted is not None:
            eviction = evicted[0]
            if evicted[1]:
                self._write_back(evicted[0])
                writebacks.append(evicted[0])
        return AccessOutcome(case="00", latency_cycles=latency, l1_eviction=eviction,
                             writebacks=tuple(writebacks), l2_hit=l2_hit)

    def _access_backup(self, addr: int, store: bool) -> AccessOutcome:
        la = line_addr(addr, self.config.l1d)
        l1_hit = self.l1d.lookup(addr)
        bu_hit = self.backup.lookup(la)
        writebacks: list[int] = []
        eviction = None
        l2_hit = None
        if l1_hit and bu_hit:
            case = "11"
            latency = self.config.l1d.hit_cycles
            if store:
                self.l1d.write_touch(addr)
                self.backup.write_touch(la)
        elif l1_hit:
            case = "10"
            latency = self.config.l1d.hit_cycles
            if store:
                self.l1d.write_touch(addr)
        elif bu_hit:
            case = "01"
            latency = self.config.l1d.hit_cycles
            if store:
                self.backup.write_touch(la)
            # Line fill into L1 happens after the response; the backup keeps
            # its copy, so the L1 copy is installed clean.
            eviction, wbs = self._install_l1(addr, dirty=False)
            writebacks.extend(wbs)
        else:
            case = "00"
            latency, l2_hit = self._fetch_from_l2(addr)
            eviction, wbs = self._install_l1(addr, dirty=store)
            writebacks.extend(wbs)
        resized = self._count_access()
        if resized is not None:
            writebacks.extend(resized[2])
            resized = (resized[0], resized[1])
        return AccessOutcome(case=case, latency_cycles=latency, l1_eviction=eviction,
                             writebacks=tuple(writebacks), resized=resized, l2_hit=l2_hit)

    def _install_l1(self, addr: int, dirty: bool) -> tuple[Optional[int], list[int]]:
        """Install into L1D; any displaced line is written back if dirty and
        then placed (clean) into the backup cache."""
        writebacks: list[int] = []
        evicted = self.l1d.insert(addr, dirty=dirty)
        if evicted is None:
            return None, writebacks
        ev_addr, ev_dirty = evicted
        if ev_dirty:
            self._write_back(ev_addr)
            writebacks.append(ev_addr)
        if not self.backup.contains(ev_addr):
            displaced = self.backup.insert(ev_addr, dirty=False)
            if displaced is not None and displaced[1]:
                self._write_back(displaced[0])
                writebacks.append(displaced[0])
        return ev_addr, writebacks

    def _fetch_from_l2(self, addr: int) -> tuple[int, bool]:
        if self.l2.lookup(addr):
            return self.config.l2.hit_cycles, True
        self.l2.insert(addr, dirty=False)
        return self.config.l2.hit_cycles + self.config.memory_penalty_cycles, False

    def _write_back(self, addr: int) -> None:
        # Non-allocating: update the dirty bit if the L2 holds the line,
        # otherwise the write-back goes straight to memory. Recency in the
        # L2 is deliberately left untouched.
        self.l2.mark_dirty(addr)

    def _count_access(self) -> Optional[tuple[int, int, list[int]]]:
        self.registers.mem_access_count -= 1
        if self.registers.mem_access_count > 0:
            return None
        old = self.backup.current_size
        new = self.rng.randint(self.registers.bcs_min, self.registers.bcs_max)
        if self.config.resize_mode == RESIZE_DYNAMIC:
            self.registers.mem_access_count = new
        else:
            self.registers.mem_access_count = self.registers.fixed_threshold
        writebacks = self.backup.resize(new)
        for wb in writebacks:
            self._write_back(wb)
        self.resize_count += 1
        return old, new, writebacks

    # -- other events -------------------------------------------------

    def context_switch(self) -> int:
        """Clear every backup used bit; does not count as a memory access."""
        if self.backup is None:
            return 0
        return self.backup.clear_used()

    def external_invalidate(self, addr: int) -> bool:
        """Coherence invalidation from below: drop the line everywhere."""
        la = line_addr(addr, self.config.l1d)
        in_l1 = self.l1d.invalidate(addr)
        in_bu = self.backup.invalidate(la) if self.backup is not None else False
        in_l2 = self.l2.invalidate(addr)
        return in_l1 or in_bu or in_l2

    # -- introspection ------------------------------------------------

    def state_digest(self) -> str:
        """SHA-256 over all tag arrays and registers (hex string)."""
        parts = [self.config.mode, repr(self.l1d.state_tuple()), repr(self.l2.state_tuple())]
        if self.backup is not None:
            parts.append(repr(self.backup.state_tuple()))
            parts.append(f"{self.backup.current_size},{self.registers.mem_access_count}")
        return hashlib.sha256("|".join(parts).encode()).hexdigest()

    def l2_digest(self) -> str:
        return hashlib.sha256(repr(self.l2.state_tuple()).encode()).hexdigest()
