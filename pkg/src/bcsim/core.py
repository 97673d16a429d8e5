"""Address arithmetic and a generic set-associative cache with LRU replacement."""

from dataclasses import dataclass
from typing import Optional

ADDR_BITS = 48
ADDR_LIMIT = 1 << ADDR_BITS


class CacheError(Exception):
    """Internal cache invariant or precondition violation."""


class GeometryError(CacheError):
    """Invalid cache geometry."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CacheGeometry:
    """Shape and hit latency of one cache level.

    line_bytes and num_sets must be powers of two so that address
    decomposition is pure bit slicing.
    """

    line_bytes: int
    num_sets: int
    ways: int
    hit_cycles: int

    def __post_init__(self):
        if not _is_pow2(self.line_bytes):
            raise GeometryError(f"line_bytes must be a power of two, got {self.line_bytes}")
        if not _is_pow2(self.num_sets):
            raise GeometryError(f"num_sets must be a power of two, got {self.num_sets}")
        if self.ways < 1:
            raise GeometryError(f"ways must be positive, got {self.ways}")
        if self.hit_cycles < 1:
            raise GeometryError(f"hit_cycles must be positive, got {self.hit_cycles}")

    @property
    def capacity_bytes(self) -> int:
        return self.line_bytes * self.num_sets * self.ways

    @property
    def offset_bits(self) -> int:
        return self.line_bytes.bit_length() - 1

    @property
    def index_bits(self) -> int:
        return self.num_sets.bit_length() - 1


def check_addr(addr: int) -> int:
    if not 0 <= addr < ADDR_LIMIT:
        raise CacheError(f"address {addr:#x} outside 48-bit physical address space")
    return addr


def decompose(addr: int, geo: CacheGeometry) -> tuple[int, int, int]:
    """Split a physical address into (tag, set_index, offset)."""
    check_addr(addr)
    offset = addr & (geo.line_bytes - 1)
    set_index = (addr >> geo.offset_bits) & (geo.num_sets - 1)
    tag = addr >> (geo.offset_bits + geo.index_bits)
    return tag, set_index, offset


def compose(tag: int, set_index: int, geo: CacheGeometry, offset: int = 0) -> int:
    """Rebuild a physical address from its (tag, set_index, offset) parts."""
    if not 0 <= set_index < geo.num_sets:
        raise CacheError(f"set index {set_index} out of range")
    addr = (tag << (geo.offset_bits + geo.index_bits)) | (set_index << geo.offset_bits) | offset
    return check_addr(addr)


def line_addr(addr: int, geo: CacheGeometry) -> int:
    """Line-aligned base address (offset bits cleared)."""
    return addr & ~(geo.line_bytes - 1)


class _Line:
    __slots__ = ("valid", "dirty", "tag", "stamp")

    def __init__(self):
        self.valid = False
        self.dirty = False
        self.tag = 0
        self.stamp = 0


class SetAssociativeCache:
    """Tag-array-only set-associative cache with true LRU replacement.

    Data payloads are not modeled; hit/miss, dirtiness, and evicted
    line addresses are the only observables the simulator needs.
    Invalid ways are always preferred insertion targets.
    """

    def __init__(self, geometry: CacheGeometry):
        self.geometry = geometry
        self._sets = [[_Line() for _ in range(geometry.ways)] for _ in range(geometry.num_sets)]
        self._tick = 0

    def _touch(self, line: _Line) -> None:
        self._tick += 1
        line.stamp = self._tick

    def _find(self, addr: int) -> tuple[int, Optional[_Line]]:
        tag, idx, _ = decompose(addr, self.geometry)
        for line in self._sets[idx]:
            if line.valid and line.tag == tag:
                return idx, line
        return idx, None

    def lookup(self, addr: int) -> bool:
        """Probe for addr; on hit the line becomes most recently used."""
        _, line = self._find(addr)
        if line is None:
            return False
        self._touch(line)
        return True

    def contains(self, addr: int) -> bool:
        """Residency check with no side effects."""
        return self._find(addr)[1] is not None

    def insert(self, addr: int, dirty: bool = False) -> Optional[tuple[int, bool]]:
        """Install addr as MRU; returns (line_address, dirty) of the LRU victim if the set was full.

        The caller must have checked that addr is not already resident.
        """
        tag, idx, _ = decompose(addr, self.geometry)
        victim = None
        for line in self._sets[idx]:
            if line.valid and line.tag == tag:
                raise CacheError(f"insert of already-resident address {addr:#x}")
            if not line.valid:
                if victim is None or victim.valid:
                    victim = line
            elif victim is None or (victim.valid and line.stamp < victim.stamp):
                victim = line
        evicted = None
        if victim.valid:
            evicted = (compose(victim.tag, idx, self.geometry), victim.dirty)
        victim.valid = True
        victim.dirty = dirty
        victim.tag = tag
        self._touch(victim)
        return evicted

    def invalidate(self, addr: int) -> bool:
        """Drop the matching line if present; dirty contents are discarded."""
        _, line = self._find(addr)
        if line is None:
            return False
        line.valid = False
        line.dirty = False
        return True

    def write_touch(self, addr: int) -> bool:
        """On hit, mark the line dirty and most recently used."""
        _, line = self._find(addr)
        if line is None:
            return False
        line.dirty = True
        self._touch(line)
        return True

    def mark_dirty(self, addr: int) -> bool:
        """Set the dirty bit without changing recency (write-back sink)."""
        _, line = self._find(addr)
        if line is None:
            return False
        line.dirty = True
        return True

    def occupancy(self, set_index: int) -> int:
        return sum(1 for line in self._sets[set_index] if line.valid)

    def state_tuple(self) -> tuple:
        """Canonical tag-array state: per set, valid ways in recency order (oldest first)."""
        out = []
        for ways in self._sets:
            ordered = sorted((l for l in ways if l.valid), key=lambda l: l.stamp)
            out.append(tuple((l.tag, l.dirty) for l in ordered))
        return tuple(out)
