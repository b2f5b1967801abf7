"""Desk-scale lookup and migration experiments with CSV output.

Runs against the simulated backend by default, where timings are exact
functions of the latency model, or against a live gateway for plumbing
checks (wall-clock numbers, no expectations attached).
"""

from __future__ import annotations

import csv
import math
import random
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Sequence

from indirect_dht.dht import DEFAULT_TTL, DEFAULT_WINDOW, DhtBackend, LatencyModel, SimulatedDht
from indirect_dht.entries import HostAddress, NetworkLocation
from indirect_dht.errors import DhtError, ExperimentError, MigrationError
from indirect_dht.identifiers import Identifier
from indirect_dht.resolver import HostProfile, Strategy, migrate, publish_profile, resolve

# Calibration knobs, not measurements: they put simulated output in the same
# order of magnitude as the PlanetLab runs.
DEFAULT_LATENCY = LatencyModel(c_g=30.0, c_p=50.0, c_r=200.0, c_q=500.0)

DEFAULT_SWEEP = (
    [1] + list(range(10, 101, 10)) + list(range(200, 1001, 100)) + list(range(2000, 5001, 1000))
)

ADDRESSES = (HostAddress("192.0.2.10", 8080), HostAddress("198.51.100.20", 8080))

CSV_COLUMNS = ["experiment", "backend", "strategy", "n", "trials", "mean_ms", "stddev_ms", "min_ms", "max_ms", "seed"]


@dataclass
class ExperimentSpec:
    backend: str = "simulated"  # or "gateway:<host:port>"
    latency: LatencyModel = DEFAULT_LATENCY
    entry_count: int = 5000
    lookup_trials: int = 2000
    migration_trials: int = 100
    resource_sweep: list[int] = field(default_factory=lambda: list(DEFAULT_SWEEP))
    window: int = DEFAULT_WINDOW
    seed: int = 0
    ttl: float = DEFAULT_TTL

    def __post_init__(self):
        for name in ("entry_count", "lookup_trials", "migration_trials", "window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        sweep = list(self.resource_sweep)
        if not sweep or any(n < 1 for n in sweep) or sweep != sorted(sweep):
            raise ValueError("resource_sweep must be non-empty, positive and sorted")
        if not self.ttl > 0:
            raise ValueError("ttl must be positive")
        backend_kind(self.backend)

    @property
    def backend_label(self) -> str:
        return backend_kind(self.backend)


def backend_kind(selector: str) -> str:
    if selector == "simulated":
        return "simulated"
    if selector.startswith("gateway:"):
        HostAddress.parse(selector[len("gateway:"):])
        return "gateway"
    raise ValueError(f"unknown backend selector {selector!r}")


def _derived_seed(seed: int, label: str) -> int:
    return random.Random(f"{seed}/{label}").getrandbits(63)


def make_backend(spec: ExperimentSpec, label: str) -> DhtBackend:
    """A fresh simulated backend per label, or a client for the configured gateway."""
    if spec.backend_label == "simulated":
        return SimulatedDht(replace(spec.latency, seed=_derived_seed(spec.seed, label)))
    from indirect_dht.gateway import GatewayClient

    return GatewayClient(HostAddress.parse(spec.backend[len("gateway:"):]), spec.window)


@dataclass(frozen=True)
class StatSummary:
    mean: float
    stddev: float
    trials: int
    min: float
    max: float

    @classmethod
    def of(cls, samples: Sequence[float]) -> StatSummary:
        if not samples:
            return cls(math.nan, math.nan, 0, math.nan, math.nan)
        return cls(
            mean=statistics.fmean(samples),
            stddev=statistics.pstdev(samples),
            trials=len(samples),
            min=min(samples),
            max=max(samples),
        )


class LookupResult(NamedTuple):
    direct: StatSummary
    indirect: StatSummary


@dataclass(frozen=True)
class MigrationRow:
    n: int
    strategy: Strategy
    summary: StatSummary
    failures: tuple[tuple[int, int], ...] = ()  # (trial, puts completed)


def _random_profile(rng: random.Random, n: int, strategy: Strategy) -> HostProfile:
    ids = [Identifier(rng.randbytes(20)) for _ in range(n + 1)]
    resources = [(rid, f"/files/{i:05d}") for i, rid in enumerate(ids[1:])]
    return HostProfile(ids[0], ADDRESSES[0], resources, strategy)


def run_lookup_experiment(spec: ExperimentSpec) -> LookupResult:
    """Publish ``entry_count`` resources under each scheme and time random lookups.

    Every failed or wrong resolution is collected and raised as
    :class:`ExperimentError` once all trials have run.
    """
    rng = random.Random(spec.seed)
    backend = make_backend(spec, "lookup")
    failures = []
    summaries = {}
    for strategy in (Strategy.DIRECT, Strategy.INDIRECT):
        profile = _random_profile(rng, spec.entry_count, strategy)
        publish_profile(backend, profile, spec.ttl, spec.window)
        samples = []
        for _ in range(spec.lookup_trials):
            rid, path = rng.choice(profile.resources)
            t0 = backend.now()
            try:
                loc = resolve(backend, rid)
            except DhtError as exc:
                failures.append((strategy.value, rid.hex(), exc))
                continue
            samples.append(backend.now() - t0)
            if loc != NetworkLocation(profile.address, path):
                failures.append((strategy.value, rid.hex(), f"resolved to {loc}"))
        summaries[strategy] = StatSummary.of(samples)
    if failures:
        raise ExperimentError(failures)
    return LookupResult(summaries[Strategy.DIRECT], summaries[Strategy.INDIRECT])


def run_migration_experiment(spec: ExperimentSpec) -> list[MigrationRow]:
    """For each n and strategy, publish n resources and migrate the host
    ``migration_trials`` times between two addresses."""
    rows = []
    for n in spec.resource_sweep:
        for strategy in (Strategy.DIRECT, Strategy.INDIRECT):
            label = f"migration/{n}/{strategy.value}"
            rng = random.Random(_derived_seed(spec.seed, label + "/ids"))
            backend = make_backend(spec, label)
            profile = _random_profile(rng, n, strategy)
            publish_profile(backend, profile, spec.ttl, spec.window)
            samples = []
            failures = []
            for trial in range(spec.migration_trials):
                target = ADDRESSES[(trial + 1) % 2]
                try:
                    result = migrate(backend, profile, target, spec.ttl, spec.window)
                except MigrationError as exc:
                    failures.append((trial, exc.completed))
                    continue
                samples.append(result.elapsed)
            rows.append(MigrationRow(n, strategy, StatSummary.of(samples), tuple(failures)))
    return rows


@dataclass(frozen=True)
class BenchRow:
    experiment: str
    backend: str
    strategy: str
    n: int
    trials: int
    mean_ms: float
    stddev_ms: float
    min_ms: float
    max_ms: float
    seed: int

    @classmethod
    def make(cls, experiment: str, spec: ExperimentSpec, strategy: str, n: int, s: StatSummary) -> BenchRow:
        return cls(experiment, spec.backend_label, strategy, n, s.trials, s.mean, s.stddev, s.min, s.max, spec.seed)


def lookup_rows(spec: ExperimentSpec, result: LookupResult) -> list[BenchRow]:
    return [
        BenchRow.make("lookup", spec, "direct", spec.entry_count, result.direct),
        BenchRow.make("lookup", spec, "indirect", spec.entry_count, result.indirect),
    ]


def migration_rows(spec: ExperimentSpec, table: Iterable[MigrationRow]) -> list[BenchRow]:
    return [BenchRow.make("migration", spec, row.strategy.value, row.n, row.summary) for row in table]


def emit_csv(rows: Iterable[BenchRow], destination: str | Path | IO[str]) -> None:
    if isinstance(destination, (str, Path)):
        with open(destination, "w", newline="") as fh:
            emit_csv(rows, fh)
        return
    writer = csv.writer(destination, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([r.experiment, r.backend, r.strategy, r.n, r.trials,
                         repr(r.mean_ms), repr(r.stddev_ms), repr(r.min_ms), repr(r.max_ms), r.seed])


def read_csv(source: str | Path) -> list[BenchRow]:
    with open(source, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            BenchRow(d["experiment"], d["backend"], d["strategy"], int(d["n"]), int(d["trials"]),
                     float(d["mean_ms"]), float(d["stddev_ms"]), float(d["min_ms"]), float(d["max_ms"]),
                     int(d["seed"]))
            for d in reader
        ]


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope, intercept and R^2 (R^2 is 1.0 for an exact fit)."""
    slope, intercept = statistics.linear_regression(xs, ys)
    mean_y = statistics.fmean(ys)
    ss_tot = math.fsum((y - mean_y) ** 2 for y in ys)
    ss_res = math.fsum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2
