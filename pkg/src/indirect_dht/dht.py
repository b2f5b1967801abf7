"""Key-value substrate: the backend contract, an in-memory store and a simulator.

Durations on the backend surface are milliseconds except TTLs, which are
seconds as in OpenDHT. ``get`` returns ``(value, remaining_ttl_seconds)``
pairs for every unexpired record under a key, oldest first.
"""

from __future__ import annotations

import abc
import heapq
import math
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from indirect_dht.errors import BatchPutError, UnsupportedOperationError, ValueTooLargeError
from indirect_dht.identifiers import Identifier

MAX_VALUE_OCTETS = 1024
DEFAULT_TTL = 3600.0
DEFAULT_WINDOW = 100

PutOp = tuple[Identifier, bytes, float]


@dataclass(frozen=True)
class Record:
    value: bytes
    inserted_at: float  # ms
    ttl: float  # seconds

    @property
    def expires_at(self) -> float:
        return self.inserted_at + self.ttl * 1000.0

    def remaining_ttl(self, now: float) -> float:
        """Seconds left at ``now`` (ms), clamped at zero."""
        return max(0.0, self.ttl - (now - self.inserted_at) / 1000.0)


def check_put(value: bytes, ttl: float) -> None:
    if not isinstance(value, (bytes, bytearray)):
        raise TypeError("value must be bytes")
    if len(value) > MAX_VALUE_OCTETS:
        raise ValueTooLargeError(f"value of {len(value)} octets exceeds {MAX_VALUE_OCTETS}")
    if not (ttl > 0 and math.isfinite(ttl)):
        raise ValueError(f"ttl must be positive, got {ttl!r}")


def freshest(records: Iterable[tuple[bytes, float]]) -> Optional[bytes]:
    """Value with the largest remaining TTL; on a tie the later-listed record wins."""
    best = None
    best_ttl = -math.inf
    for value, remaining in records:
        if remaining >= best_ttl:
            best, best_ttl = value, remaining
    return best


class _Slot:
    __slots__ = ("records", "next_expiry")

    def __init__(self):
        self.records: list[Record] = []
        self.next_expiry = math.inf

    def add(self, rec: Record) -> None:
        self.records.append(rec)
        self.next_expiry = min(self.next_expiry, rec.expires_at)

    def prune(self, now: float) -> None:
        if now < self.next_expiry:
            return
        self.records = [r for r in self.records if r.expires_at > now]
        self.next_expiry = min((r.expires_at for r in self.records), default=math.inf)


class RecordTable:
    """Append-only multi-value table with TTL expiry; callers supply the time.

    A record is visible while ``now < inserted_at + ttl``. Expired records are
    dropped lazily, per key, the first time they are touched after expiry.
    """

    def __init__(self):
        self._slots: dict[Identifier, _Slot] = {}
        self._lock = threading.Lock()

    def append(self, key: Identifier, value: bytes, ttl: float, now: float) -> None:
        rec = Record(bytes(value), now, float(ttl))
        with self._lock:
            slot = self._slots.get(key)
            if slot is None:
                slot = self._slots[key] = _Slot()
            else:
                slot.prune(now)
            slot.add(rec)

    def lookup(self, key: Identifier, now: float) -> list[tuple[bytes, float]]:
        with self._lock:
            slot = self._slots.get(key)
            if slot is None:
                return []
            slot.prune(now)
            if not slot.records:
                del self._slots[key]
                return []
            out = []
            for r in slot.records:
                remaining = r.remaining_ttl(now)
                if remaining > 0:
                    out.append((r.value, remaining))
            return out

    def dump(self) -> dict[Identifier, list[Record]]:
        with self._lock:
            return {k: list(s.records) for k, s in self._slots.items() if s.records}

    def load(self, records: dict[Identifier, list[Record]]) -> None:
        with self._lock:
            self._slots = {}
            for key, recs in records.items():
                slot = self._slots[key] = _Slot()
                for r in recs:
                    slot.add(r)

    def __len__(self) -> int:
        with self._lock:
            return sum(len(s.records) for s in self._slots.values())


class DhtBackend(abc.ABC):
    """put/get with TTL and multi-value semantics.

    Implementations must accept concurrent calls. ``now`` is a millisecond
    timestamp used by callers to measure elapsed time; it is virtual for the
    simulator and monotonic wall time otherwise.
    """

    @abc.abstractmethod
    def put(self, key: Identifier, value: bytes, ttl: float = DEFAULT_TTL) -> None: ...

    @abc.abstractmethod
    def get(self, key: Identifier) -> list[tuple[bytes, float]]: ...

    @abc.abstractmethod
    def now(self) -> float: ...

    def batch_put(self, ops: Sequence[PutOp], window: int = DEFAULT_WINDOW) -> float:
        """Apply all puts and return the elapsed milliseconds.

        The default runs them one after another; backends override this to
        pipeline up to ``window`` puts.
        """
        if window < 1:
            raise ValueError("window must be >= 1")
        start = self.now()
        for i, (key, value, ttl) in enumerate(ops):
            try:
                self.put(key, value, ttl)
            except Exception as exc:
                raise BatchPutError(range(i), len(ops), exc) from exc
        return self.now() - start

    def advance(self, ms: float) -> float:
        raise UnsupportedOperationError(f"{type(self).__name__} runs on wall-clock time")


class MemoryStore(DhtBackend):
    """Thread-safe in-memory store on the wall clock; backs the gateway."""

    def __init__(self, clock: Callable[[], float] = time.monotonic):
        self._clock = clock
        self._table = RecordTable()

    def now(self) -> float:
        return self._clock() * 1000.0

    def put(self, key, value, ttl=DEFAULT_TTL):
        check_put(value, ttl)
        self._table.append(key, value, ttl, self.now())

    def get(self, key):
        return self._table.lookup(key, self.now())

    def __len__(self):
        return len(self._table)


@dataclass(frozen=True)
class LatencyModel:
    """Per-operation costs of the simulated backend, in milliseconds.

    Every operation takes an issue slot at the backend (``c_g`` for gets,
    ``c_p`` for puts) and then completes after the network latency (``c_r``
    resp. ``c_q``). Pipelined puts share slots back to back, so a batch of n
    costs ``n * c_p + c_q`` while it does not stall on the window.
    """

    c_g: float = 30.0
    c_p: float = 50.0
    c_r: float = 200.0
    c_q: float = 500.0
    jitter_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("c_g", "c_p", "c_r", "c_q"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite duration >= 0, got {v!r}")
        if not 0 <= self.jitter_fraction <= 1:
            raise ValueError("jitter_fraction must lie in [0, 1]")

    @classmethod
    def zero(cls) -> LatencyModel:
        return cls(0.0, 0.0, 0.0, 0.0)


class SimulatedDht(DhtBackend):
    """Deterministic single-context backend on a virtual clock.

    Each call advances the clock by the simulated latency of the operation.
    With ``jitter_fraction`` j > 0 every latency constant is multiplied by an
    independent factor drawn uniformly from [1 - j, 1 + j].
    """

    def __init__(self, latency: LatencyModel | None = None, start: float = 0.0):
        self.latency = latency or LatencyModel()
        self._rng = random.Random(self.latency.seed)
        self._now = float(start)
        self._table = RecordTable()

    def now(self) -> float:
        return self._now

    def advance(self, ms: float) -> float:
        if ms < 0:
            raise ValueError("cannot move the clock backwards")
        self._now += ms
        return self._now

    def _jit(self, base: float) -> float:
        j = self.latency.jitter_fraction
        if j == 0:
            return base
        return base * self._rng.uniform(1.0 - j, 1.0 + j)

    def put(self, key, value, ttl=DEFAULT_TTL):
        check_put(value, ttl)
        issued = self._now + self._jit(self.latency.c_p)
        self._table.append(key, value, ttl, issued)
        self._now = issued + self._jit(self.latency.c_q)

    def get(self, key):
        issued = self._now + self._jit(self.latency.c_g)
        result = self._table.lookup(key, issued)
        self._now = issued + self._jit(self.latency.c_r)
        return result

    def batch_put(self, ops, window=DEFAULT_WINDOW):
        if window < 1:
            raise ValueError("window must be >= 1")
        start = self._now
        if not ops:
            self._now += self._jit(self.latency.c_q)
            return self._now - start
        issued = start
        finish = start
        in_flight: list[float] = []
        for i, (key, value, ttl) in enumerate(ops):
            try:
                check_put(value, ttl)
            except Exception as exc:
                self._now = finish
                raise BatchPutError(range(i), len(ops), exc) from exc
            issued += self._jit(self.latency.c_p)
            while in_flight and in_flight[0] <= issued:
                heapq.heappop(in_flight)
            if len(in_flight) >= window:
                # stall until enough earlier puts have completed
                while len(in_flight) >= window:
                    issued = max(issued, heapq.heappop(in_flight))
            self._table.append(key, value, ttl, issued)
            done = issued + self._jit(self.latency.c_q)
            heapq.heappush(in_flight, done)
            finish = max(finish, done)
        self._now = finish
        return finish - start

    def dump(self):
        return self._table.dump()

    def load(self, records) -> None:
        self._table.load(records)

    def __len__(self):
        return len(self._table)


def batch_put(backend: DhtBackend, ops: Sequence[PutOp], window: int = DEFAULT_WINDOW) -> float:
    return backend.batch_put(ops, window)
