"""Exception types shared across the package."""

from __future__ import annotations


class PackingError(ValueError):
    """Base class for invalid packing inputs."""


class OversizeItem(PackingError):
    """A partition's write speed exceeds the consumer capacity.

    Such an item can never be placed; callers must reject or clamp it
    upstream.
    """

    def __init__(self, partition: str, speed: float, capacity: float):
        super().__init__(
            f"partition {partition!r} has speed {speed!r} above capacity {capacity!r}"
        )
        self.partition = partition
        self.speed = speed
        self.capacity = capacity


class InconsistentInput(PackingError):
    """Previous assignment and unassigned set do not partition the measurement."""


class TooLarge(ValueError):
    """Instance is beyond the exhaustive solver's size guard."""


class UnknownPartition(PackingError):
    """A partition id was referenced that the measurement does not contain."""


class LengthMismatch(ValueError):
    """Per-algorithm series do not all have the same length."""


class EmptySet(ValueError):
    """An aggregate was requested over an empty algorithm set."""


class EmptyList(ValueError):
    """An aggregate was requested over an empty sequence."""


class InvalidSpec(ValueError):
    """Stream parameters violate their bounds or cannot be parsed."""


class IncompleteRecords(ValueError):
    """Benchmark records are missing iterations for some (delta, seed, algorithm)."""


class ParseError(ValueError):
    """A CSV or JSON input file does not match the expected schema."""


class UnknownDelta(ValueError):
    """The requested delta is absent from the summary data."""


class ScenarioError(ValueError):
    """Scenario definition is malformed or internally inconsistent."""


class AckTimeout(RuntimeError):
    """A consumer failed to acknowledge a control message within the tick budget."""

    def __init__(self, consumer: int, token: int):
        super().__init__(f"consumer {consumer} did not ack token {token} in time")
        self.consumer = consumer
        self.token = token


class InvariantViolation(RuntimeError):
    """A runtime safety invariant was broken (see .details for specifics)."""

    def __init__(self, message: str, details: list[str] | None = None):
        super().__init__(message)
        self.details = details or []
