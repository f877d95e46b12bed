"""Frame-of-discernment set algebra, mass/belief/plausibility functions,
and Dempster's rule of combination.

Subsets of the frame are bit-vectors (python ints) indexed by outcome
position, so all set operations are bitwise.  Everything here is immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping

MASS_SUM_TOL = 1e-9
RENORM_TOL = 1e-6
MAX_FRAME_SIZE = 30


class FrameMismatchError(ValueError):
    """Operands belong to different frames of discernment."""


class TotalConflictError(ValueError):
    """Dempster combination with conflict K = 1 (fully conflicting evidence)."""

    def __init__(self, message="fully conflicting evidence (K = 1)", index=None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class Frame:
    """An ordered set of mutually exclusive outcome labels."""

    outcomes: tuple[str, ...]

    def __init__(self, outcomes: Iterable[str]):
        outcomes = tuple(outcomes)
        if not outcomes or len(outcomes) > MAX_FRAME_SIZE:
            raise ValueError(f"frame size must be in 1..{MAX_FRAME_SIZE}, got {len(outcomes)}")
        if len(set(outcomes)) != len(outcomes):
            raise ValueError("outcome labels must be unique")
        if any(not label for label in outcomes):
            raise ValueError("outcome labels must be non-empty")
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def full_bits(self) -> int:
        return (1 << self.n) - 1

    def index(self, label: str) -> int:
        return self.outcomes.index(label)

    def subset(self, labels: Iterable[str]) -> "OutcomeSet":
        bits = 0
        for label in labels:
            bits |= 1 << self.index(label)
        return OutcomeSet(self, bits)

    def singleton(self, label: str) -> "OutcomeSet":
        return OutcomeSet(self, 1 << self.index(label))

    def empty(self) -> "OutcomeSet":
        return OutcomeSet(self, 0)

    def full(self) -> "OutcomeSet":
        return OutcomeSet(self, self.full_bits)

    def singletons(self) -> list["OutcomeSet"]:
        return [OutcomeSet(self, 1 << i) for i in range(self.n)]

    def all_subsets(self, include_empty=False) -> list["OutcomeSet"]:
        start = 0 if include_empty else 1
        return [OutcomeSet(self, bits) for bits in range(start, self.full_bits + 1)]


@dataclass(frozen=True)
class OutcomeSet:
    """A subset of a Frame, encoded as a bit-vector over outcome positions."""

    frame: Frame
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits <= self.frame.full_bits:
            raise ValueError("bits outside frame range")

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def __or__(self, other: "OutcomeSet") -> "OutcomeSet":
        self._check(other)
        return OutcomeSet(self.frame, self.bits | other.bits)

    def __and__(self, other: "OutcomeSet") -> "OutcomeSet":
        self._check(other)
        return OutcomeSet(self.frame, self.bits & other.bits)

    def complement(self) -> "OutcomeSet":
        return OutcomeSet(self.frame, self.frame.full_bits & ~self.bits)

    def issubset(self, other: "OutcomeSet") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def contains_label(self, label: str) -> bool:
        return bool(self.bits >> self.frame.index(label) & 1)

    def labels(self) -> tuple[str, ...]:
        return tuple(
            label for i, label in enumerate(self.frame.outcomes) if self.bits >> i & 1
        )

    def is_singleton(self) -> bool:
        return len(self) == 1

    def _check(self, other: "OutcomeSet"):
        if self.frame != other.frame:
            raise FrameMismatchError("outcome sets belong to different frames")

    def __repr__(self):
        return "{%s}" % ",".join(self.labels())


class MassFunction:
    """Nonnegative masses on nonempty focal subsets, summing to 1.

    Construction renormalizes when the raw sum deviates from 1 by at most
    1e-6 and rejects otherwise; zero masses are dropped.
    """

    def __init__(self, frame: Frame, focal: Mapping[OutcomeSet, float] | Mapping[int, float]):
        self.frame = frame
        masses: dict[int, float] = {}
        for key, value in focal.items():
            bits = key.bits if isinstance(key, OutcomeSet) else int(key)
            if isinstance(key, OutcomeSet) and key.frame != frame:
                raise FrameMismatchError("focal set from a different frame")
            if not 0 <= bits <= frame.full_bits:
                raise ValueError("focal bits outside frame")
            if value < 0:
                raise ValueError(f"negative mass {value}")
            if bits == 0 and value > 0:
                raise ValueError("mass on the empty set")
            if value > 0:
                masses[bits] = masses.get(bits, 0.0) + value
        total = math.fsum(masses.values())
        if abs(total - 1.0) > RENORM_TOL:
            raise ValueError(f"masses sum to {total}, outside renormalization tolerance")
        if abs(total - 1.0) > 0:
            masses = {bits: m / total for bits, m in masses.items()}
        if not masses:
            raise ValueError("mass function has no focal sets")
        self._masses = masses

    @classmethod
    def vacuous(cls, frame: Frame) -> "MassFunction":
        return cls(frame, {frame.full_bits: 1.0})

    @classmethod
    def from_labels(cls, frame: Frame, focal: Mapping[tuple[str, ...] | frozenset, float]) -> "MassFunction":
        return cls(frame, {frame.subset(labels): m for labels, m in focal.items()})

    def focal_sets(self) -> list[OutcomeSet]:
        return [OutcomeSet(self.frame, bits) for bits in sorted(self._masses)]

    def items(self):
        for bits in sorted(self._masses):
            yield OutcomeSet(self.frame, bits), self._masses[bits]

    def mass(self, a: OutcomeSet) -> float:
        self._check(a)
        return self._masses.get(a.bits, 0.0)

    def __len__(self):
        return len(self._masses)

    def __eq__(self, other):
        return (
            isinstance(other, MassFunction)
            and self.frame == other.frame
            and self._masses == other._masses
        )

    def __repr__(self):
        parts = ", ".join(f"{a!r}:{m:.6g}" for a, m in self.items())
        return f"MassFunction({parts})"

    def _check(self, a: OutcomeSet):
        if a.frame != self.frame:
            raise FrameMismatchError("outcome set belongs to a different frame")

    def is_close(self, other: "MassFunction", tol=1e-9) -> bool:
        if self.frame != other.frame:
            return False
        keys = set(self._masses) | set(other._masses)
        return all(
            abs(self._masses.get(k, 0.0) - other._masses.get(k, 0.0)) <= tol for k in keys
        )

    def to_json(self) -> str:
        doc = {
            "frame": list(self.frame.outcomes),
            "focal": [
                {"set": list(a.labels()), "mass": float(f"{m:.12g}")}
                for a, m in self.items()
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str | dict) -> "MassFunction":
        doc = json.loads(text) if isinstance(text, str) else text
        frame = Frame(doc["frame"])
        return cls(frame, {frame.subset(e["set"]): e["mass"] for e in doc["focal"]})


@dataclass(frozen=True)
class BeliefInterval:
    """[Bel(A), Pl(A)] bounds for a subset."""

    bel: float
    pl: float

    def __post_init__(self):
        if not 0.0 <= self.bel <= self.pl + 1e-12 or self.pl > 1.0 + 1e-12:
            raise ValueError(f"invalid belief interval [{self.bel}, {self.pl}]")


@dataclass(frozen=True)
class CombinationReport:
    """Combined mass function plus the conflict mass K discarded on the way."""

    result: MassFunction
    conflict: float


def belief(m: MassFunction, a: OutcomeSet) -> float:
    """Total mass committed to subsets of `a`."""
    m._check(a)
    return math.fsum(mass for b, mass in m._masses.items() if b & ~a.bits == 0)


def plausibility(m: MassFunction, a: OutcomeSet) -> float:
    """1 - Bel(complement of a); the upper bound of the belief interval."""
    return 1.0 - belief(m, a.complement())


def belief_interval(m: MassFunction, a: OutcomeSet) -> BeliefInterval:
    if not a:
        raise ValueError("belief interval of the empty set is not defined")
    bel = belief(m, a)
    pl = plausibility(m, a)
    return BeliefInterval(bel, max(bel, pl))


def combine(m1: MassFunction, m2: MassFunction) -> CombinationReport:
    """Dempster's rule: normalized intersection products of focal pairs.

    Iterates over focal-set pairs only; raises TotalConflictError when the
    conflict mass K reaches 1.
    """
    if m1.frame != m2.frame:
        raise FrameMismatchError("cannot combine mass functions over different frames")
    products: dict[int, list[float]] = {}
    conflict_terms = []
    for b1, v1 in m1._masses.items():
        for b2, v2 in m2._masses.items():
            inter = b1 & b2
            if inter:
                products.setdefault(inter, []).append(v1 * v2)
            else:
                conflict_terms.append(v1 * v2)
    k = math.fsum(conflict_terms)
    if k >= 1.0 - 1e-12:
        raise TotalConflictError()
    scale = 1.0 / (1.0 - k)
    combined = {bits: math.fsum(terms) * scale for bits, terms in products.items()}
    return CombinationReport(MassFunction(m1.frame, combined), k)


def combine_all(ms: list[MassFunction]) -> CombinationReport:
    """Left fold of Dempster combination; cumulative conflict 1 - prod(1-K_i)."""
    if not ms:
        raise ValueError("combine_all needs at least one mass function")
    acc = ms[0]
    survival = 1.0
    for i, m in enumerate(ms[1:], start=1):
        try:
            report = combine(acc, m)
        except TotalConflictError:
            raise TotalConflictError(
                f"fully conflicting evidence at item {i}", index=i
            ) from None
        acc = report.result
        survival *= 1.0 - report.conflict
    return CombinationReport(acc, 1.0 - survival)
