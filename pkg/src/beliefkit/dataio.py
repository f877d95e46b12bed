"""Case ingestion, expert-range discretization, frequency-table
construction, pairwise Pearson correlation, and synthetic fixture
generation.

File formats (all UTF-8, comma-separated, '.' decimal point):
  cases:          header `id,outcome,<var1>,...`; missing = empty field
  discretization: `variable,state,lower,upper` with -inf/+inf sentinels
  synthetic spec: JSON mirroring SyntheticSpec
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import Frame
from .estimation import FrequencyTable


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class CaseRecord:
    """One case: symptom values (possibly missing) plus an expected outcome."""

    id: str
    values: dict[str, float]
    outcome: str | None = None

    def __post_init__(self):
        for name, v in self.values.items():
            if v is not None and not math.isfinite(v):
                raise DataError(f"case {self.id}: non-finite value for {name}")

    def present(self, variable: str) -> bool:
        return self.values.get(variable) is not None


@dataclass(frozen=True)
class Bin:
    state: str
    lower: float  # inclusive
    upper: float  # exclusive

    def contains(self, v: float) -> bool:
        return self.lower <= v < self.upper


@dataclass(frozen=True)
class DiscretizationSpec:
    """Per-variable expert ranges mapped to state labels (half-open bins)."""

    bins: dict[str, tuple[Bin, ...]]

    def __post_init__(self):
        for variable, bs in self.bins.items():
            if len(bs) < 2:
                raise DataError(f"{variable}: need at least 2 states")
            for a, b in zip(bs, bs[1:]):
                if a.upper != b.lower:
                    raise DataError(f"{variable}: bins must tile contiguously")
            if any(b.lower >= b.upper for b in bs):
                raise DataError(f"{variable}: bin bounds must increase")

    def variables(self):
        return self.bins.keys()

    def state_of(self, variable: str, v: float) -> str:
        if variable not in self.bins:
            raise DataError(f"variable {variable!r} absent from discretization spec")
        for b in self.bins[variable]:
            if b.contains(v):
                return b.state
        raise DataError(f"{variable}: value {v} falls outside every bin")

    def key_of(self, variable: str, v: float) -> str:
        return f"{variable}={self.state_of(variable, v)}"

    @classmethod
    def from_breakpoints(
        cls, table: dict[str, tuple[Sequence[float], Sequence[str]]]
    ) -> "DiscretizationSpec":
        """Build from {variable: (breakpoints, state_labels)}; bins are
        (-inf, b1), [b1, b2), ..., [bk, +inf)."""
        bins = {}
        for variable, (breaks, states) in table.items():
            if len(states) != len(breaks) + 1:
                raise DataError(f"{variable}: need one more state than breakpoints")
            edges = [-math.inf, *breaks, math.inf]
            bins[variable] = tuple(
                Bin(state, lo, hi) for state, lo, hi in zip(states, edges, edges[1:])
            )
        return cls(bins)

    @classmethod
    def from_csv(cls, path) -> "DiscretizationSpec":
        groups: dict[str, list[Bin]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(row for row in fh if not row.startswith("#"))
            for rec in reader:
                groups.setdefault(rec["variable"], []).append(
                    Bin(rec["state"], float(rec["lower"]), float(rec["upper"]))
                )
        return cls({v: tuple(sorted(bs, key=lambda b: b.lower)) for v, bs in groups.items()})

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variable", "state", "lower", "upper"])
            for variable, bs in self.bins.items():
                for b in bs:
                    writer.writerow([variable, b.state, _fmt_edge(b.lower), _fmt_edge(b.upper)])


def _fmt_edge(v: float) -> str:
    if v == -math.inf:
        return "-inf"
    if v == math.inf:
        return "+inf"
    return format(v, "g")


def discretize(case: CaseRecord, spec: DiscretizationSpec) -> dict[str, str]:
    """Map present symptom values to `variable=state` keys; missing values
    emit no key."""
    out = {}
    for variable, v in case.values.items():
        if v is None:
            continue
        out[variable] = spec.key_of(variable, v)
    return out


def load_cases(path) -> list[CaseRecord]:
    cases = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        if header[:2] != ["id", "outcome"]:
            raise DataError("cases CSV must start with id,outcome columns")
        variables = header[2:]
        for record in reader:
            if not record:
                continue
            values = {
                var: (float(cell) if cell != "" else None)
                for var, cell in zip(variables, record[2:])
            }
            outcome = record[1] or None
            cases.append(CaseRecord(record[0], values, outcome))
    ids = [c.id for c in cases]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate case ids")
    return cases


def save_cases(cases: Sequence[CaseRecord], path):
    variables = sorted({v for c in cases for v in c.values})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "outcome", *variables])
        for c in cases:
            row = [c.id, c.outcome or ""]
            for var in variables:
                v = c.values.get(var)
                row.append("" if v is None else f"{v:.6g}")
            writer.writerow(row)


def build_frequency_table(
    cases: Sequence[CaseRecord],
    spec: DiscretizationSpec,
    frame: Frame,
    min_row_total: float = 1,
) -> FrequencyTable:
    """Count outcomes per symptom-state over the training cases.

    Rows whose total falls below min_row_total are dropped (no smoothing).
    """
    counts: dict[str, list[float]] = {}
    for case in cases:
        if case.outcome is None:
            raise DataError(f"training case {case.id} has no outcome")
        if case.outcome not in frame.outcomes:
            raise DataError(f"case {case.id}: outcome {case.outcome!r} outside frame")
        idx = frame.index(case.outcome)
        for key in discretize(case, spec).values():
            counts.setdefault(key, [0.0] * frame.n)[idx] += 1
    rows = {
        key: tuple(vec)
        for key, vec in sorted(counts.items())
        if sum(vec) >= min_row_total
    }
    return FrequencyTable(frame, rows)


def pearson_matrix(
    cases: Sequence[CaseRecord], variables: Sequence[str]
) -> np.ndarray:
    """Pairwise-complete Pearson r; unavailable entries are NaN, diagonal 1."""
    p = len(variables)
    matrix = np.full((p, p), np.nan)
    columns = [
        np.array(
            [c.values.get(v) if c.values.get(v) is not None else np.nan for c in cases]
        )
        for v in variables
    ]
    for i in range(p):
        matrix[i, i] = 1.0
        for j in range(i + 1, p):
            mask = ~np.isnan(columns[i]) & ~np.isnan(columns[j])
            if mask.sum() < 2:
                continue
            xi, xj = columns[i][mask], columns[j][mask]
            if np.std(xi) == 0 or np.std(xj) == 0:
                continue
            r = float(np.corrcoef(xi, xj)[0, 1])
            matrix[i, j] = matrix[j, i] = r
    return matrix


def save_correlation_csv(variables: Sequence[str], matrix, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["", *variables])
        for name, row in zip(variables, np.asarray(matrix)):
            writer.writerow([name, *("" if math.isnan(v) else f"{v:.12g}" for v in row)])


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator spec for reproducible synthetic case fixtures.

    conditionals[variable][outcome] is a distribution over the variable's
    states; continuous values are drawn uniformly inside the sampled bin
    (infinite edges fall back to a unit-width band next to the finite one).
    """

    seed: int
    frame: Frame
    prior: dict[str, float]
    discretization: DiscretizationSpec
    conditionals: dict[str, dict[str, dict[str, float]]]
    case_count: int
    missingness: float = 0.0
    id_prefix: str = "case"

    def __post_init__(self):
        if not 0.0 <= self.missingness <= 1.0:
            raise DataError("missingness must lie in [0, 1]")
        if set(self.prior) != set(self.frame.outcomes):
            raise DataError("prior must cover exactly the frame outcomes")
        _check_distribution(self.prior, "prior")
        for variable, per_outcome in self.conditionals.items():
            states = {b.state for b in self.discretization.bins[variable]}
            for outcome, dist in per_outcome.items():
                if set(dist) - states:
                    raise DataError(f"{variable}/{outcome}: unknown state in conditional")
                _check_distribution(dist, f"{variable}/{outcome}")

    @classmethod
    def from_json(cls, text: str | dict) -> "SyntheticSpec":
        doc = json.loads(text) if isinstance(text, str) else text
        disc = DiscretizationSpec(
            {
                v: tuple(
                    Bin(b["state"], float(b["lower"]), float(b["upper"])) for b in bs
                )
                for v, bs in doc["discretization"].items()
            }
        )
        return cls(
            seed=doc["seed"],
            frame=Frame(doc["frame"]),
            prior=doc["prior"],
            discretization=disc,
            conditionals=doc["conditionals"],
            case_count=doc["case_count"],
            missingness=doc.get("missingness", 0.0),
            id_prefix=doc.get("id_prefix", "case"),
        )

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "frame": list(self.frame.outcomes),
            "prior": self.prior,
            "discretization": {
                v: [
                    {"state": b.state, "lower": _edge_json(b.lower), "upper": _edge_json(b.upper)}
                    for b in bs
                ]
                for v, bs in self.discretization.bins.items()
            },
            "conditionals": self.conditionals,
            "case_count": self.case_count,
            "missingness": self.missingness,
            "id_prefix": self.id_prefix,
        }
        return json.dumps(doc, indent=2)


def _edge_json(v: float):
    if math.isinf(v):
        return "-Infinity" if v < 0 else "Infinity"
    return v


def _check_distribution(dist: dict[str, float], label: str):
    if any(p < 0 for p in dist.values()):
        raise DataError(f"{label}: negative probability")
    if abs(sum(dist.values()) - 1.0) > 1e-9:
        raise DataError(f"{label}: probabilities must sum to 1")


def _sample_in_bin(rng: np.random.Generator, b: Bin) -> float:
    lo, hi = b.lower, b.upper
    if math.isinf(lo) and math.isinf(hi):
        lo, hi = -1.0, 1.0
    elif math.isinf(lo):
        lo = hi - 1.0
    elif math.isinf(hi):
        hi = lo + 1.0
    return float(rng.uniform(lo, hi))


def generate_synthetic(spec: SyntheticSpec) -> list[CaseRecord]:
    """Sample cases: outcome from the prior, then per-variable states from
    the conditionals, then a uniform value inside the sampled bin.
    Missingness applies independently per value.  The seed fixes the
    dataset bit-exactly."""
    rng = np.random.default_rng(spec.seed)
    outcomes = list(spec.frame.outcomes)
    prior = [spec.prior[o] for o in outcomes]
    variables = sorted(spec.conditionals)
    cases = []
    for i in range(spec.case_count):
        outcome = outcomes[rng.choice(len(outcomes), p=prior)]
        values: dict[str, float] = {}
        for variable in variables:
            dist = spec.conditionals[variable][outcome]
            states = sorted(dist)
            state = states[rng.choice(len(states), p=[dist[s] for s in states])]
            chosen = next(
                b for b in spec.discretization.bins[variable] if b.state == state
            )
            value = _sample_in_bin(rng, chosen)
            if spec.missingness > 0 and rng.random() < spec.missingness:
                values[variable] = None
            else:
                values[variable] = value
        cases.append(CaseRecord(f"{spec.id_prefix}{i:04d}", values, outcome))
    return cases
