"""Synthetic write-speed streams for benchmarking.

A stream is a fixed set of partitions observed over N iterations.  Speeds
start from a chosen initial profile and then take a bounded random walk:
each iteration every partition moves by an independent uniform draw from
[-delta, +delta] percent of capacity, clamped to [0, capacity].

The clamp at capacity is deliberate: a single partition writing faster than
one consumer can read is unservable, and the benchmark is only meaningful on
servable instances.

Streams are reproducible.  Generation uses numpy's PCG64 generator seeded
from the StreamSpec, and the generator name is written into every stream
file so a reader can verify provenance.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpec, ParseError
from .model import DEFAULT_CAPACITY, Measurement

__all__ = ["InitMode", "StreamSpec", "Stream", "generate", "save_stream", "load_stream"]

RNG_NAME = "numpy-pcg64"


class InitMode(enum.Enum):
    """Initial speed profile of a stream."""

    UNIFORM = "uniform"        # independent uniform draws on [0, C]
    ZERO = "zero"              # every partition silent
    HALF = "half"              # every partition at C/2
    FULL = "full"              # every partition at C

    @classmethod
    def parse(cls, text: str) -> "InitMode":
        key = text.strip().lower()
        aliases = {
            "uniform": cls.UNIFORM,
            "uniform-random": cls.UNIFORM,
            "zero": cls.ZERO,
            "all-zero": cls.ZERO,
            "half": cls.HALF,
            "half-capacity": cls.HALF,
            "full": cls.FULL,
            "full-capacity": cls.FULL,
        }
        if key not in aliases:
            raise InvalidSpec(f"unknown init mode {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class StreamSpec:
    """Parameters that fully determine one stream."""

    partitions: int = 100
    length: int = 500
    delta: float = 5.0
    capacity: float = DEFAULT_CAPACITY
    init: InitMode = InitMode.UNIFORM
    seed: int = 1

    def validate(self) -> None:
        if self.partitions < 1:
            raise InvalidSpec(f"partitions must be >= 1, got {self.partitions}")
        if self.length < 1:
            raise InvalidSpec(f"length must be >= 1, got {self.length}")
        if not 0.0 <= self.delta <= 100.0:
            raise InvalidSpec(f"delta must be in [0, 100], got {self.delta}")
        if not self.capacity > 0 or not math.isfinite(self.capacity):
            raise InvalidSpec(f"capacity must be positive, got {self.capacity}")
        if not isinstance(self.seed, int):
            raise InvalidSpec(f"seed must be an integer, got {self.seed!r}")


@dataclass(frozen=True)
class Stream:
    """A spec plus the measurements it generated."""

    spec: StreamSpec
    partition_ids: tuple[str, ...]
    measurements: tuple[Measurement, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.measurements)


def _partition_ids(count: int) -> tuple[str, ...]:
    # zero padded so lexicographic order equals numeric order
    width = len(str(count - 1)) if count > 1 else 1
    return tuple(f"t:{i:0{width}d}" for i in range(count))


def generate(spec: StreamSpec) -> Stream:
    """Produce the stream determined by `spec`.

    Same spec, same bytes: all randomness flows from PCG64(seed).
    """
    spec.validate()
    c = spec.capacity
    n = spec.partitions
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    if spec.init is InitMode.UNIFORM:
        s = rng.uniform(0.0, c, n)
    elif spec.init is InitMode.ZERO:
        s = np.zeros(n)
    elif spec.init is InitMode.HALF:
        s = np.full(n, c / 2.0)
    else:
        s = np.full(n, c)
    ids = _partition_ids(n)
    out = [Measurement(dict(zip(ids, s.tolist())), taken_at=0.0)]
    step = c / 100.0
    for i in range(1, spec.length):
        s = np.clip(s + rng.uniform(-spec.delta, spec.delta, n) * step, 0.0, c)
        out.append(Measurement(dict(zip(ids, s.tolist())), taken_at=float(i)))
    return Stream(spec=spec, partition_ids=ids, measurements=tuple(out))


def save_stream(stream: Stream, path: str | Path) -> None:
    """Write `stream` as a JSON document (see `load_stream` for the shape)."""
    doc = {
        "spec": {
            "partitions": stream.spec.partitions,
            "length": stream.spec.length,
            "delta": stream.spec.delta,
            "capacity": stream.spec.capacity,
            "init": stream.spec.init.value,
            "seed": stream.spec.seed,
        },
        "rng": RNG_NAME,
        "partition_ids": list(stream.partition_ids),
        "measurements": [
            [m.speeds[p] for p in stream.partition_ids] for m in stream.measurements
        ],
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def load_stream(path: str | Path) -> Stream:
    """Read a stream file written by `save_stream`."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read stream file {path}: {exc}") from exc
    try:
        raw = doc["spec"]
        spec = StreamSpec(
            partitions=int(raw["partitions"]),
            length=int(raw["length"]),
            delta=float(raw["delta"]),
            capacity=float(raw["capacity"]),
            init=InitMode.parse(raw["init"]),
            seed=int(raw["seed"]),
        )
        ids = tuple(str(p) for p in doc["partition_ids"])
        rows = doc["measurements"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed stream file {path}: {exc}") from exc
    spec.validate()
    if len(ids) != spec.partitions or len(rows) != spec.length:
        raise ParseError(f"stream file {path} disagrees with its own spec")
    measurements = []
    for i, row in enumerate(rows):
        if len(row) != len(ids):
            raise ParseError(f"measurement {i} in {path} has {len(row)} speeds")
        measurements.append(
            Measurement(dict(zip(ids, map(float, row))), taken_at=float(i))
        )
    return Stream(spec=spec, partition_ids=ids, measurements=tuple(measurements))
