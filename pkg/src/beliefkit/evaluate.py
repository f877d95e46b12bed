"""Diagnosis reports, S/NONS/F scoring, total-matched aggregation, and ROC
points at fixed decision criteria.

A case is labeled S when the top-belief singleton equals the expected
outcome, NONS when some reported set (belief at or above the report
threshold) contains it, and F otherwise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

from .core import (
    BeliefInterval,
    MassFunction,
    OutcomeSet,
    TotalConflictError,
    belief,
    belief_interval,
    combine_all,
)

DEFAULT_REPORT_THRESHOLD = 0.25
PAPER_DECISION_CRITERIA = (0.2, 0.4, 0.6, 0.8)


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class DiagnosisReport:
    """Combined evidence for one case plus the strongest-outcome listing."""

    case_id: str
    applied_keys: tuple[str, ...]
    mass: MassFunction | None
    intervals: tuple[tuple[OutcomeSet, BeliefInterval], ...]
    strongest: tuple[tuple[OutcomeSet, float], ...]  # singletons first
    top_singleton: str | None
    threshold: float
    conflict: float = 0.0
    tie: bool = False
    error: str | None = None


def diagnose_case(
    case_id: str,
    applied: dict[str, MassFunction],
    threshold: float = DEFAULT_REPORT_THRESHOLD,
) -> DiagnosisReport:
    """Combine the applicable per-symptom masses and summarize beliefs.

    With no applicable evidence the report is vacuous ([0, 1] everywhere).
    Total conflict is reported on the case rather than raised.
    """
    keys = tuple(sorted(applied))
    if not applied:
        return DiagnosisReport(case_id, (), None, (), (), None, threshold)
    frame = next(iter(applied.values())).frame
    masses = [applied[k] for k in keys]
    try:
        report = combine_all(masses)
    except TotalConflictError as exc:
        return DiagnosisReport(
            case_id, keys, None, (), (), None, threshold, conflict=1.0, error=str(exc)
        )
    combined = report.result

    intervals = tuple(
        (a, belief_interval(combined, a)) for a in combined.focal_sets()
    )

    singleton_beliefs = [(s, belief(combined, s)) for s in frame.singletons()]
    best = max(b for _, b in singleton_beliefs)
    top_candidates = [s for s, b in singleton_beliefs if b == best]
    top = top_candidates[0]

    strong_singletons = sorted(
        ((s, b) for s, b in singleton_beliefs if b >= threshold),
        key=lambda item: (-item[1], item[0].bits),
    )
    strong_other = sorted(
        (
            (a, belief(combined, a))
            for a in combined.focal_sets()
            if not a.is_singleton()
        ),
        key=lambda item: (-item[1], len(item[0]), item[0].bits),
    )
    strong_other = [(a, b) for a, b in strong_other if b >= threshold]

    return DiagnosisReport(
        case_id,
        keys,
        combined,
        intervals,
        tuple(strong_singletons) + tuple(strong_other),
        top.labels()[0],
        threshold,
        conflict=report.conflict,
        tie=len(top_candidates) > 1,
    )


def classify_sns(report: DiagnosisReport, expected: str) -> str:
    """S / NONS / F label for one diagnosed case; S takes precedence."""
    if report.mass is None:
        if report.error is not None:
            return "F"
        # vacuous: no singleton can win, nothing reported unless threshold
        # admits the all-outcome set, which a missing frame cannot supply
        return "F"
    frame = report.mass.frame
    if expected not in frame.outcomes:
        raise EvalError(f"expected outcome {expected!r} outside the frame")
    if report.top_singleton == expected:
        return "S"
    for a, _ in report.strongest:
        if a.contains_label(expected):
            return "NONS"
    return "F"


@dataclass(frozen=True)
class MatchTally:
    s: int
    nons: int
    f: int

    @property
    def total(self) -> int:
        return self.s + self.nons + self.f

    @property
    def s_pct(self) -> float:
        return 100.0 * self.s / self.total

    @property
    def nons_pct(self) -> float:
        return 100.0 * self.nons / self.total

    @property
    def f_pct(self) -> float:
        return 100.0 * self.f / self.total

    @property
    def matched_pct(self) -> float:
        return self.s_pct + self.nons_pct


def tally(classifications: Sequence[str]) -> MatchTally:
    if not classifications:
        raise EvalError("cannot tally an empty classification list")
    unknown = set(classifications) - {"S", "NONS", "F"}
    if unknown:
        raise EvalError(f"unknown classification labels {unknown}")
    return MatchTally(
        classifications.count("S"),
        classifications.count("NONS"),
        classifications.count("F"),
    )


def format_tally_table(tallies: dict[str, MatchTally]) -> str:
    """Human-readable table: rows S/NONS/F and total matched, one column
    per method/variant."""
    columns = list(tallies)
    width = max(12, *(len(c) + 2 for c in columns)) if columns else 12
    lines = ["".ljust(8) + "".join(c.rjust(width) for c in columns)]
    for label, attr in (
        ("S", "s_pct"), ("NONS", "nons_pct"), ("F", "f_pct"), ("MATCHED", "matched_pct"),
    ):
        cells = "".join(f"{getattr(tallies[c], attr):.2f}".rjust(width) for c in columns)
        lines.append(label.ljust(8) + cells)
    return "\n".join(lines)


def write_tally_csv(tallies: dict[str, MatchTally], path, header_lines=()):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["variant", "s", "nons", "f", "s_pct", "nons_pct", "f_pct", "matched_pct"])
        for name, t in tallies.items():
            writer.writerow(
                [name, t.s, t.nons, t.f,
                 f"{t.s_pct:.4f}", f"{t.nons_pct:.4f}", f"{t.f_pct:.4f}", f"{t.matched_pct:.4f}"]
            )


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float
    tp: int
    fp: int
    tn: int
    fn: int


def roc_points(
    scores: Sequence[tuple[float, int]], thresholds: Sequence[float] = PAPER_DECISION_CRITERIA
) -> list[RocPoint]:
    """Confusion counts at each decision criterion; positive iff
    probability >= threshold.  Points come back in threshold order."""
    labels = {label for _, label in scores}
    if labels - {0, 1}:
        raise EvalError("labels must be binary 0/1")
    if labels != {0, 1}:
        raise EvalError("both classes must be present to compute TPR and FPR")
    points = []
    for t in thresholds:
        tp = sum(1 for p, y in scores if p >= t and y == 1)
        fn = sum(1 for p, y in scores if p < t and y == 1)
        fp = sum(1 for p, y in scores if p >= t and y == 0)
        tn = sum(1 for p, y in scores if p < t and y == 0)
        points.append(RocPoint(t, tp / (tp + fn), fp / (fp + tn), tp, fp, tn, fn))
    return points


def write_roc_csv(points: Sequence[RocPoint], path, header_lines=(), extra_column=None):
    """Emit `threshold,tpr,fpr,tp,fp,tn,fn`; extra_column=(name, values)
    adds a trailing column (used for side-by-side baselines)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        header = ["threshold", "tpr", "fpr", "tp", "fp", "tn", "fn"]
        if extra_column:
            header.append(extra_column[0])
        writer.writerow(header)
        for i, p in enumerate(points):
            row = [f"{p.threshold:g}", f"{p.tpr:.6g}", f"{p.fpr:.6g}", p.tp, p.fp, p.tn, p.fn]
            if extra_column:
                row.append(extra_column[1][i])
            writer.writerow(row)


def format_report(report: DiagnosisReport) -> str:
    """Plain-text case report: symptoms, belief intervals, strongest list."""
    lines = [f"case {report.case_id}  (report threshold {report.threshold:g})"]
    if report.applied_keys:
        lines.append("  symptoms: " + ", ".join(report.applied_keys))
    else:
        lines.append("  symptoms: none recognized (vacuous result)")
    if report.error:
        lines.append(f"  ERROR: {report.error}")
        return "\n".join(lines)
    if report.mass is None:
        lines.append("  belief intervals: [0.000, 1.000] for every outcome")
        return "\n".join(lines)
    if report.conflict > 0:
        lines.append(f"  conflict discarded: {report.conflict:.4f}")
    lines.append("  belief intervals:")
    for a, iv in report.intervals:
        lines.append(f"    {{{','.join(a.labels())}}}: [{iv.bel:.4f}, {iv.pl:.4f}]")
    lines.append("  strongest outcomes (singletons first):")
    for a, b in report.strongest:
        lines.append(f"    {{{','.join(a.labels())}}}: belief {b:.4f}")
    if report.top_singleton is not None:
        tie = "  (tie, broken by frame order)" if report.tie else ""
        lines.append(f"  top singleton: {report.top_singleton}{tie}")
    return "\n".join(lines)
