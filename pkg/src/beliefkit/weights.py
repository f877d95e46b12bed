"""Weights of evidence from 2x2 counts, fuzzy membership functions with
strong alpha-cut probabilities, optimal-alpha selection, and log-odds case
scoring.

The weight W(H:E) is the natural-log likelihood ratio ln p(E|H)/p(E|not H),
which equals the change in log-odds of H on observing E.  A Haldane-style
+0.5 continuity correction is applied to all four cells whenever any cell
is zero, keeping every weight finite.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class MembershipFunction:
    """Piecewise-linear fuzzy membership curve from expert breakpoints.

    Values outside the breakpoint span clamp to the end membership grades.
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __init__(self, breakpoints: Iterable[tuple[float, float]]):
        pts = tuple((float(v), float(mu)) for v, mu in breakpoints)
        if len(pts) < 2:
            raise WeightError("membership function needs at least 2 breakpoints")
        values = [v for v, _ in pts]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise WeightError("breakpoint values must be strictly increasing")
        if any(not 0.0 <= mu <= 1.0 for _, mu in pts):
            raise WeightError("membership grades must lie in [0, 1]")
        object.__setattr__(self, "breakpoints", pts)

    def __call__(self, x: float) -> float:
        pts = self.breakpoints
        if x <= pts[0][0]:
            return pts[0][1]
        if x >= pts[-1][0]:
            return pts[-1][1]
        i = bisect.bisect_right([v for v, _ in pts], x)
        (x0, y0), (x1, y1) = pts[i - 1], pts[i]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


@dataclass(frozen=True)
class AlphaCut:
    """Strong alpha-level cut: the crisp set {x : mu(x) > alpha}."""

    mf: MembershipFunction
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise WeightError(f"alpha {self.alpha} outside [0, 1)")

    def __contains__(self, x: float) -> bool:
        return self.mf(x) > self.alpha


@dataclass(frozen=True)
class EvidenceWeight:
    """Trained weight for one piece of evidence towards one hypothesis."""

    hypothesis: str
    evidence_key: str
    weight: float
    alpha: float
    n_eh: int
    n_e_noth: int
    n_h: int
    n_noth: int


@dataclass(frozen=True)
class CaseScore:
    """Log-odds accumulation of applied evidence for one case."""

    prior_log_odds: float
    applied: tuple[tuple[str, float], ...]
    posterior_log_odds: float
    probability: float


def weight_of_evidence(n_eh: int, n_e_noth: int, n_h: int, n_noth: int) -> float:
    """ln[ p(E|H) / p(E|not H) ] from the four counts, continuity-corrected.

    The +0.5 correction to all four cells fires only when some cell of the
    2x2 table is zero.
    """
    if n_h <= 0 or n_noth <= 0:
        raise WeightError("both H and not-H populations must be nonempty")
    if not (0 <= n_eh <= n_h and 0 <= n_e_noth <= n_noth):
        raise WeightError("event counts exceed their populations")
    cells = (n_eh, n_h - n_eh, n_e_noth, n_noth - n_e_noth)
    if any(c == 0 for c in cells):
        p_h = (n_eh + 0.5) / (n_h + 1.0)
        p_noth = (n_e_noth + 0.5) / (n_noth + 1.0)
    else:
        p_h = n_eh / n_h
        p_noth = n_e_noth / n_noth
    return math.log(p_h / p_noth)


def fuzzy_probability(mf: MembershipFunction, samples: Sequence[float], alpha: float) -> float:
    """Empirical probability of the strong alpha-cut: fraction of samples
    whose membership grade exceeds alpha."""
    if not samples:
        raise WeightError("empty sample list")
    cut = AlphaCut(mf, alpha)
    return sum(1 for x in samples if x in cut) / len(samples)


def optimal_alpha(
    mf: MembershipFunction, h_samples: Sequence[float], noth_samples: Sequence[float]
) -> tuple[float, float]:
    """Alpha level maximizing |W(H:E_alpha)|; ties go to the smallest alpha.

    The cut only changes at sample membership grades, so 0 plus every
    distinct grade below 1 is a complete candidate set.
    """
    if not h_samples or not noth_samples:
        raise WeightError("both sample lists must be nonempty")
    grades_h = [mf(x) for x in h_samples]
    grades_noth = [mf(x) for x in noth_samples]
    if max(grades_h + grades_noth) == 0.0:
        raise WeightError("no sample has positive membership; weight undefined")
    candidates = sorted({0.0} | {g for g in grades_h + grades_noth if g < 1.0})
    best_alpha, best_w = 0.0, None
    for alpha in candidates:
        n_eh = sum(1 for g in grades_h if g > alpha)
        n_e_noth = sum(1 for g in grades_noth if g > alpha)
        w = weight_of_evidence(n_eh, n_e_noth, len(h_samples), len(noth_samples))
        if best_w is None or abs(w) > abs(best_w) + 1e-15:
            best_alpha, best_w = alpha, w
    return best_alpha, best_w


def score_case(prior_odds: float, evidence: Sequence[EvidenceWeight]) -> CaseScore:
    """Posterior log-odds = ln(prior odds) + sum of applied weights.

    Evidence missing from the case is simply absent from the list; there is
    no imputation.
    """
    if prior_odds <= 0:
        raise WeightError(f"prior odds must be positive, got {prior_odds}")
    prior = math.log(prior_odds)
    posterior = prior + math.fsum(e.weight for e in evidence)
    probability = 1.0 / (1.0 + math.exp(-posterior))
    applied = tuple((e.evidence_key, e.weight) for e in evidence)
    return CaseScore(prior, applied, posterior, probability)


def load_membership_functions(path) -> dict[str, MembershipFunction]:
    """Load `evidence_key,value,mu` rows grouped by key, sorted by value."""
    groups: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for record in reader:
            groups.setdefault(record["evidence_key"], []).append(
                (float(record["value"]), float(record["mu"]))
            )
    return {key: MembershipFunction(sorted(pts)) for key, pts in groups.items()}


def save_weights(weights: Sequence[EvidenceWeight], path, header_lines=()):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["hypothesis", "evidence_key", "weight", "alpha", "nEH", "nEnotH", "nH", "nnotH"]
        )
        for w in weights:
            writer.writerow(
                [w.hypothesis, w.evidence_key, f"{w.weight:.12g}", f"{w.alpha:.12g}",
                 w.n_eh, w.n_e_noth, w.n_h, w.n_noth]
            )


def load_weights(path) -> list[EvidenceWeight]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for r in reader:
            out.append(
                EvidenceWeight(
                    r["hypothesis"], r["evidence_key"], float(r["weight"]),
                    float(r["alpha"]), int(r["nEH"]), int(r["nEnotH"]),
                    int(r["nH"]), int(r["nnotH"]),
                )
            )
    return out
