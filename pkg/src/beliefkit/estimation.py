"""Per-symptom-state mass functions from outcome frequency data.

Four estimators are provided: a consonant construction from sorted
frequencies (method 1), a simple-support construction with two residual
placements (methods 2A/2B), and a subset-scoring construction with
configurable normalization (method 3).  Expert overrides can replace
individual masses afterwards.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .core import Frame, MassFunction, OutcomeSet


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyTable:
    """Counts of each outcome per symptom-state row."""

    frame: Frame
    rows: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for key, counts in self.rows.items():
            if len(counts) != self.frame.n:
                raise EstimationError(
                    f"row {key!r} has {len(counts)} counts for a {self.frame.n}-outcome frame"
                )
            if any(c < 0 for c in counts):
                raise EstimationError(f"row {key!r} has a negative count")
            if not any(c > 0 for c in counts):
                raise EstimationError(f"row {key!r} has no positive counts")

    def counts(self, key: str) -> tuple[float, ...]:
        if key not in self.rows:
            raise EstimationError(f"no frequency row for symptom-state {key!r}")
        return self.rows[key]

    def total(self, key: str) -> float:
        return sum(self.counts(key))

    def keys(self):
        return self.rows.keys()

    @classmethod
    def from_csv(cls, path) -> "FrequencyTable":
        """Load `symptom_state,<outcome1>,...,<outcomeN>` rows."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(row for row in fh if not row.startswith("#"))
            header = next(reader)
            if header[0] != "symptom_state":
                raise EstimationError("first column must be symptom_state")
            frame = Frame(header[1:])
            rows = {}
            for record in reader:
                if not record:
                    continue
                rows[record[0]] = tuple(float(v) for v in record[1:])
        return cls(frame, rows)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["symptom_state", *self.frame.outcomes])
            for key in self.rows:
                writer.writerow([key, *(format(c, "g") for c in self.rows[key])])


@dataclass(frozen=True)
class ExpertOverride:
    """Replacement mass for one focal set of one symptom-state's mass function."""

    key: str
    focal: tuple[str, ...]
    mass: float

    def __post_init__(self):
        if not 0.0 <= self.mass <= 1.0:
            raise EstimationError(f"override mass {self.mass} outside [0, 1]")


@dataclass(frozen=True)
class Method3Config:
    normalization: str = "global"  # "global" | "by-cardinality-then-global"
    theta_preassign: str = "none"  # "none" | "zero" | "one"
    max_frame_size: int = 20

    def __post_init__(self):
        if self.normalization not in ("global", "by-cardinality-then-global"):
            raise EstimationError(f"unknown normalization {self.normalization!r}")
        if self.theta_preassign not in ("none", "zero", "one"):
            raise EstimationError(f"unknown theta preassignment {self.theta_preassign!r}")
        if self.max_frame_size > 20:
            raise EstimationError("max_frame_size above 20 would enumerate too many subsets")


def _sorted_outcomes(frame: Frame, counts) -> list[int]:
    # descending frequency; ties stay in frame order (stable sort)
    return sorted(range(frame.n), key=lambda i: -counts[i])


def estimate_method1(freq: FrequencyTable, key: str) -> MassFunction:
    """Consonant mass function from descending-sorted frequencies.

    With outcomes sorted so f1 >= f2 >= ... >= fn, the nested prefix
    {1..j} gets mass (fj - f(j+1)) / f1 and the whole frame gets fn / f1.
    Zero masses are dropped, so the foci always form a chain.
    """
    frame = freq.frame
    counts = freq.counts(key)
    order = _sorted_outcomes(frame, counts)
    top = counts[order[0]]
    masses: dict[int, float] = {}
    bits = 0
    for j, idx in enumerate(order):
        bits |= 1 << idx
        nxt = counts[order[j + 1]] if j + 1 < frame.n else 0.0
        if j + 1 == frame.n:
            value = counts[idx] / top
        else:
            value = (counts[idx] - nxt) / top
        if value > 0:
            masses[bits] = masses.get(bits, 0.0) + value
    return MassFunction(frame, masses)


def estimate_method2(freq: FrequencyTable, key: str, remainder: str) -> MassFunction:
    """Simple-support mass function: support set B with mass > 0.5 plus a residual.

    B accumulates singletons in descending frequency until its mass exceeds
    0.5, then absorbs any further singletons tied with the last one added.
    The residual mass goes on the union of the remaining positive-frequency
    singletons (`on-complement-2A`) or on the whole frame (`on-theta-2B`).
    """
    if remainder not in ("on-complement-2A", "on-theta-2B"):
        raise EstimationError(f"unknown remainder placement {remainder!r}")
    frame = freq.frame
    counts = freq.counts(key)
    total = sum(counts)
    props = [c / total for c in counts]
    order = _sorted_outcomes(frame, props)

    b_bits = 0
    b_mass = 0.0
    pos = 0
    while pos < frame.n and b_mass <= 0.5:
        idx = order[pos]
        b_bits |= 1 << idx
        b_mass += props[idx]
        pos += 1
    last = props[order[pos - 1]]
    while pos < frame.n and props[order[pos]] == last:
        idx = order[pos]
        b_bits |= 1 << idx
        b_mass += props[idx]
        pos += 1

    c_bits = 0
    c_mass = 0.0
    while pos < frame.n and props[order[pos]] > 0:
        idx = order[pos]
        c_bits |= 1 << idx
        c_mass += props[idx]
        pos += 1

    masses = {b_bits: b_mass}
    if c_mass > 0:
        target = c_bits if remainder == "on-complement-2A" else frame.full_bits
        masses[target] = masses.get(target, 0.0) + c_mass
    return MassFunction(frame, masses)


def estimate_method3(freq: FrequencyTable, key: str, cfg: Method3Config) -> MassFunction:
    """Score every nonempty subset by its member frequency sum, then normalize.

    The whole frame's raw score follows cfg.theta_preassign; normalization is
    either a single global pass or per-cardinality groups first.
    """
    frame = freq.frame
    if frame.n > cfg.max_frame_size:
        raise EstimationError(
            f"frame size {frame.n} exceeds method 3 limit {cfg.max_frame_size}"
        )
    counts = freq.counts(key)

    scores: dict[int, float] = {}
    for bits in range(1, frame.full_bits + 1):
        if bits == frame.full_bits and cfg.theta_preassign != "none":
            score = 0.0 if cfg.theta_preassign == "zero" else 1.0
        else:
            score = sum(counts[i] for i in range(frame.n) if bits >> i & 1)
        if score > 0:
            scores[bits] = score
    if not scores:
        raise EstimationError(f"all subset scores are zero for row {key!r}")

    if cfg.normalization == "by-cardinality-then-global":
        group_totals: dict[int, float] = {}
        for bits, score in scores.items():
            group_totals[bits.bit_count()] = group_totals.get(bits.bit_count(), 0.0) + score
        scores = {
            bits: score / group_totals[bits.bit_count()] for bits, score in scores.items()
        }
    grand = sum(scores.values())
    return MassFunction(frame, {bits: s / grand for bits, s in scores.items()})


def apply_overrides(
    masses: dict[str, MassFunction], overrides: Iterable[ExpertOverride]
) -> dict[str, MassFunction]:
    """Replace individual masses with expert values, rescaling the rest.

    The overridden focal set takes exactly the replacement mass (inserted if
    absent); every other focal mass is scaled by the same factor so the
    total stays 1.  Ratios among the untouched foci are preserved.
    """
    result = dict(masses)
    for ov in overrides:
        if ov.key not in result:
            raise EstimationError(f"override targets unknown symptom-state {ov.key!r}")
        m = result[ov.key]
        focal = m.frame.subset(ov.focal)
        old = m.mass(focal)
        others = 1.0 - old
        if ov.mass == old:
            continue
        if others <= 0:
            raise EstimationError(
                f"cannot rescale {ov.key!r}: {focal!r} already holds all the mass"
            )
        scale = (1.0 - ov.mass) / others
        if scale == 0.0:
            warnings.warn(
                f"override on {ov.key!r} drives every other focal mass to zero",
                stacklevel=2,
            )
            new = {focal.bits: ov.mass}
        else:
            new = {
                bits: mass * scale for bits, mass in m._masses.items() if bits != focal.bits
            }
            if ov.mass > 0:
                new[focal.bits] = ov.mass
        result[ov.key] = MassFunction(m.frame, new)
    return result


def load_overrides(path) -> list[ExpertOverride]:
    """Load `symptom_state,set,mass` rows; `set` is a |-joined label list."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for record in reader:
            out.append(
                ExpertOverride(
                    record["symptom_state"],
                    tuple(record["set"].split("|")),
                    float(record["mass"]),
                )
            )
    return out


METHODS: dict[str, Callable[[FrequencyTable, str], MassFunction]] = {
    "m1": estimate_method1,
    "m2a": lambda freq, key: estimate_method2(freq, key, "on-complement-2A"),
    "m2b": lambda freq, key: estimate_method2(freq, key, "on-theta-2B"),
}


def get_estimator(method: str, m3_config: Method3Config | None = None):
    """Resolve a method selector (m1, m2a, m2b, m3) to a row estimator."""
    if method in METHODS:
        return METHODS[method]
    if method == "m3":
        cfg = m3_config or Method3Config()
        return lambda freq, key: estimate_method3(freq, key, cfg)
    raise EstimationError(f"unknown estimation method {method!r}")


def estimate_all(
    freq: FrequencyTable, method: str, m3_config: Method3Config | None = None
) -> dict[str, MassFunction]:
    """Apply the chosen estimator to every row; errors carry the row key."""
    estimator = get_estimator(method, m3_config)
    out = {}
    failures = []
    for key in freq.keys():
        try:
            out[key] = estimator(freq, key)
        except (EstimationError, ValueError) as exc:
            failures.append(f"{key}: {exc}")
    if failures:
        raise EstimationError("estimation failed for rows: " + "; ".join(failures))
    return out
