"""Symptom-group ranking and evidence selection.

Groups are ranked by a weighted average of reliability (Wilson lower
confidence bound of p(H|E)) and specificity (group size relative to the
largest group).  Two covering strategies are provided: version 1 screens
picks with chi-square two-way and three-way independence tests; version 2
only bounds the member overlap between selected groups.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats


class GroupSearchError(ValueError):
    pass


@dataclass(frozen=True)
class SymptomGroup:
    """A set of evidence keys with its support statistics."""

    members: frozenset[str]
    n: int
    k: int

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise GroupSearchError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def p_hat(self) -> float:
        return self.k / self.n


@dataclass(frozen=True)
class SearchConfig:
    version: str = "v1"  # "v1" | "v2"
    significance: float = 0.05
    max_overlap: int = 1
    min_group_frequency: int = 1
    w_reliability: float = 0.5
    w_specificity: float = 0.5
    confidence: float = 0.95

    def __post_init__(self):
        if self.version not in ("v1", "v2"):
            raise GroupSearchError(f"unknown search version {self.version!r}")
        if not 0.0 < self.significance < 1.0:
            raise GroupSearchError("significance must lie in (0, 1)")
        if self.w_reliability < 0 or self.w_specificity < 0:
            raise GroupSearchError("rank weights must be nonnegative")
        total = self.w_reliability + self.w_specificity
        if abs(total - 1.0) > 1e-9:
            raise GroupSearchError("rank weights must sum to 1")


def chi_square_2way(table) -> tuple[float, float]:
    """Pearson chi-square for a 2x2 table, df = 1; returns (statistic, p)."""
    obs = np.asarray(table, dtype=float)
    if obs.shape != (2, 2):
        raise GroupSearchError(f"expected a 2x2 table, got shape {obs.shape}")
    row = obs.sum(axis=1)
    col = obs.sum(axis=0)
    n = obs.sum()
    if np.any(row <= 0) or np.any(col <= 0):
        raise GroupSearchError("all marginals must be positive")
    expected = np.outer(row, col) / n
    statistic = float(((obs - expected) ** 2 / expected).sum())
    return statistic, float(stats.chi2.sf(statistic, df=1))


def chi_square_3way(table) -> tuple[float, float]:
    """Pearson test of mutual independence on a 2x2x2 table, df = 4.

    Expected cells are N * p(a) * p(b) * p(c) from the single-variable
    marginals.
    """
    obs = np.asarray(table, dtype=float)
    if obs.shape != (2, 2, 2):
        raise GroupSearchError(f"expected a 2x2x2 table, got shape {obs.shape}")
    n = obs.sum()
    if n <= 0:
        raise GroupSearchError("empty table")
    pa = obs.sum(axis=(1, 2)) / n
    pb = obs.sum(axis=(0, 2)) / n
    pc = obs.sum(axis=(0, 1)) / n
    if np.any(pa <= 0) or np.any(pb <= 0) or np.any(pc <= 0):
        raise GroupSearchError("all single-variable marginals must be positive")
    expected = n * np.einsum("i,j,k->ijk", pa, pb, pc)
    statistic = float(((obs - expected) ** 2 / expected).sum())
    return statistic, float(stats.chi2.sf(statistic, df=4))


def wilson_lower_bound(k: int, n: int, confidence: float = 0.95) -> float:
    """Lower Wilson score bound for a binomial proportion."""
    if n == 0:
        return 0.0
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    p = k / n
    denom = 1.0 + z * z / n
    center = p + z * z / (2 * n)
    spread = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return max(0.0, (center - spread) / denom)


def rank_score(group: SymptomGroup, max_size: int, cfg: SearchConfig) -> float:
    reliability = wilson_lower_bound(group.k, group.n, cfg.confidence)
    specificity = len(group.members) / max_size if max_size else 0.0
    return cfg.w_reliability * reliability + cfg.w_specificity * specificity


def rank_groups(groups: Sequence[SymptomGroup], cfg: SearchConfig) -> list[SymptomGroup]:
    """Order groups by descending rank score; stable, deterministic ties."""
    eligible = [g for g in groups if g.n >= cfg.min_group_frequency]
    if not eligible:
        return []
    max_size = max(len(g.members) for g in eligible)
    return sorted(
        eligible,
        key=lambda g: (
            -rank_score(g, max_size, cfg),
            len(g.members),
            tuple(sorted(g.members)),
        ),
    )


class CountDependenceOracle:
    """Answers two-way and three-way independence queries from joint counts.

    Built from per-case presence indicators of evidence keys; queries run
    chi-square tests at the configured significance level.  Degenerate
    tables (a key always or never present) count as independent, since the
    test has no evidence of association.
    """

    def __init__(self, presence: dict[str, Sequence[bool]], significance: float = 0.05):
        lengths = {len(v) for v in presence.values()}
        if len(lengths) > 1:
            raise GroupSearchError("presence vectors must share a length")
        self.presence = {k: np.asarray(v, dtype=bool) for k, v in presence.items()}
        self.significance = significance

    def independent2(self, a: str, b: str) -> bool:
        va, vb = self.presence[a], self.presence[b]
        table = [
            [int((va & vb).sum()), int((va & ~vb).sum())],
            [int((~va & vb).sum()), int((~va & ~vb).sum())],
        ]
        try:
            _, p = chi_square_2way(table)
        except GroupSearchError:
            return True
        return p >= self.significance

    def independent3(self, a: str, b: str, c: str) -> bool:
        va, vb, vc = self.presence[a], self.presence[b], self.presence[c]
        table = np.zeros((2, 2, 2))
        for i in (0, 1):
            for j in (0, 1):
                for k in (0, 1):
                    table[i, j, k] = ((va == bool(1 - i)) & (vb == bool(1 - j)) & (vc == bool(1 - k))).sum()
        try:
            _, p = chi_square_3way(table)
        except GroupSearchError:
            return True
        return p >= self.significance


@dataclass
class SelectionTrace:
    """Pick/eliminate log for one selection run."""

    lines: list[str] = field(default_factory=list)

    def pick(self, key):
        self.lines.append(f"pick {key}")

    def eliminate(self, key, reason):
        self.lines.append(f"eliminate {key}: {reason}")

    def __str__(self):
        return "\n".join(self.lines)


def select_v1(
    candidates: Sequence[str],
    oracle: CountDependenceOracle,
    trace: SelectionTrace | None = None,
) -> list[str]:
    """Greedy independent covering: pick the best-ranked candidate, drop
    everything failing two-way independence with it, and from the second
    pick on, everything failing three-way independence with any selected
    pair containing the latest pick."""
    remaining = list(candidates)
    selected: list[str] = []
    while remaining:
        pick = remaining.pop(0)
        selected.append(pick)
        if trace:
            trace.pick(pick)
        survivors = []
        for key in remaining:
            if not oracle.independent2(pick, key):
                if trace:
                    trace.eliminate(key, f"2-way dependent on {pick}")
                continue
            failed = None
            if len(selected) >= 2:
                for prev in selected[:-1]:
                    if not oracle.independent3(prev, pick, key):
                        failed = prev
                        break
            if failed is not None:
                if trace:
                    trace.eliminate(key, f"3-way dependent with ({failed}, {pick})")
                continue
            survivors.append(key)
        remaining = survivors
    return selected


def select_v2(
    ranked: Sequence[SymptomGroup],
    cfg: SearchConfig,
    trace: SelectionTrace | None = None,
) -> list[SymptomGroup]:
    """Greedy covering that only bounds pairwise member overlap."""
    selected: list[SymptomGroup] = []
    for group in ranked:
        overlaps = [len(group.members & s.members) for s in selected]
        if all(o <= cfg.max_overlap for o in overlaps):
            selected.append(group)
            if trace:
                trace.pick(sorted(group.members))
        elif trace:
            trace.eliminate(sorted(group.members), f"overlap {max(overlaps)} > {cfg.max_overlap}")
    return selected


def reduce_variables(
    variables: Sequence[str],
    corr,
    mode: str,
    threshold: float = 0.5,
    cumulative_threshold: float = 1.0,
) -> list[str]:
    """Drop redundant variables from a pairwise |r| correlation matrix.

    cd5-threshold: for each pair with |r| above the threshold, drop the
    member later in the declared order (the order stands in for expert
    priority).  cd7-cumulative: within each cluster connected by
    above-threshold pairs, keep only the variable with the highest
    cumulative |r| when that cumulative value exceeds the cumulative
    threshold, otherwise keep the whole cluster.
    """
    corr = np.asarray(corr, dtype=float)
    p = len(variables)
    if corr.shape != (p, p):
        raise GroupSearchError("correlation matrix shape does not match variables")
    if not np.allclose(corr, corr.T, equal_nan=True):
        raise GroupSearchError("correlation matrix must be symmetric")
    absr = np.abs(corr)

    if mode == "cd5-threshold":
        retained = [True] * p
        for i in range(p):
            if not retained[i]:
                continue
            for j in range(i + 1, p):
                if retained[j] and absr[i, j] > threshold:
                    retained[j] = False
        return [v for v, keep in zip(variables, retained) if keep]

    if mode == "cd7-cumulative":
        adj = (absr > threshold) & ~np.eye(p, dtype=bool)
        cumulative = np.where(adj, absr, 0.0).sum(axis=1)
        retained = [True] * p
        seen = [False] * p
        for start in range(p):
            if seen[start]:
                continue
            # flood-fill the connected cluster
            cluster = [start]
            seen[start] = True
            queue = [start]
            while queue:
                u = queue.pop()
                for v in np.flatnonzero(adj[u]):
                    if not seen[v]:
                        seen[v] = True
                        cluster.append(int(v))
                        queue.append(int(v))
            if len(cluster) == 1:
                continue
            best = min(cluster, key=lambda i: (-cumulative[i], i))
            if cumulative[best] > cumulative_threshold:
                for i in cluster:
                    retained[i] = i == best
        return [v for v, keep in zip(variables, retained) if keep]

    raise GroupSearchError(f"unknown reduction mode {mode!r}")


def load_correlation_csv(path) -> tuple[list[str], np.ndarray]:
    """Load a square correlation matrix with a header row/col of names."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        names = header[1:]
        rows = []
        for record in reader:
            if not record:
                continue
            rows.append([float(v) if v != "" else math.nan for v in record[1:]])
    matrix = np.asarray(rows, dtype=float)
    if matrix.shape != (len(names), len(names)):
        raise GroupSearchError("correlation matrix is not square")
    return names, matrix
