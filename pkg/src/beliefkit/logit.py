"""Logistic-regression baseline: maximum-likelihood fit by iteratively
reweighted least squares, backward Wald pruning, and back-transformed
probability prediction.  Cases with missing predictor values are removed
listwise at design construction and reported.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats


class LogitError(ValueError):
    pass


class SeparationError(LogitError):
    """Coefficients diverged; the classes are (quasi-)separable."""


UNDIAGNOSABLE = "undiagnosable"


@dataclass(frozen=True)
class DesignMatrix:
    """Complete-case design: rows x predictors plus a binary response."""

    predictors: tuple[str, ...]
    x: np.ndarray
    y: np.ndarray
    row_ids: tuple[str, ...]
    dropped_ids: tuple[str, ...] = ()

    @classmethod
    def from_records(
        cls,
        records: Sequence[Mapping],
        predictors: Sequence[str],
        response: str,
    ) -> "DesignMatrix":
        """Build from dict-like records, listwise-deleting incomplete rows.

        Missing means the key is absent or the value is None/NaN.  The
        dropped-id report partitions the input together with row_ids.
        """
        kept_rows, kept_ids, kept_y, dropped = [], [], [], []
        for i, rec in enumerate(records):
            rid = str(rec.get("id", i))
            values = [rec.get(p) for p in predictors]
            yv = rec.get(response)
            if any(v is None or (isinstance(v, float) and math.isnan(v)) for v in values + [yv]):
                dropped.append(rid)
                continue
            kept_rows.append([float(v) for v in values])
            kept_y.append(int(yv))
            kept_ids.append(rid)
        if not kept_rows:
            raise LogitError("no complete cases after listwise deletion")
        y = np.asarray(kept_y)
        if set(np.unique(y)) - {0, 1}:
            raise LogitError("response must be binary 0/1")
        if len(np.unique(y)) < 2:
            raise LogitError("response has a single class")
        return cls(
            tuple(predictors),
            np.asarray(kept_rows, dtype=float),
            y.astype(float),
            tuple(kept_ids),
            tuple(dropped),
        )


@dataclass(frozen=True)
class LogisticModel:
    intercept: float
    coefficients: dict[str, float]
    log_likelihood: float
    iterations: int
    converged: bool
    std_errors: dict[str, float] = field(default_factory=dict)

    def linear_predictor(self, case: Mapping[str, float]) -> float:
        total = self.intercept
        for name, beta in self.coefficients.items():
            total += beta * float(case[name])
        return total

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["term", "coefficient"])
            writer.writerow(["(intercept)", f"{self.intercept:.12g}"])
            for name, beta in self.coefficients.items():
                writer.writerow([name, f"{beta:.12g}"])


def _design_with_intercept(design: DesignMatrix) -> np.ndarray:
    return np.column_stack([np.ones(len(design.y)), design.x])


def _log_likelihood(y, eta):
    # stable Bernoulli log-likelihood: y*eta - log(1 + exp(eta))
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit(design: DesignMatrix, max_iter: int = 50, tol: float = 1e-8) -> LogisticModel:
    """IRLS with step-halving on likelihood decrease.

    Raises SeparationError when coefficients diverge past |20| and
    RankDeficiencyError-style LogitError on singular designs.
    """
    xmat = _design_with_intercept(design)
    y = design.y
    n, p = xmat.shape
    if np.linalg.matrix_rank(xmat) < p:
        raise LogitError("design matrix is rank deficient")
    beta = np.zeros(p)
    eta = xmat @ beta
    ll = _log_likelihood(y, eta)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        score = xmat.T @ (y - mu)
        info = xmat.T @ (xmat * w[:, None])
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError as exc:
            raise LogitError(f"information matrix is singular: {exc}") from None
        # halve the step until the likelihood stops decreasing
        factor = 1.0
        for _ in range(30):
            candidate = beta + factor * step
            new_ll = _log_likelihood(y, xmat @ candidate)
            if new_ll >= ll - 1e-12:
                break
            factor /= 2.0
        beta = beta + factor * step
        eta = xmat @ beta
        new_ll = _log_likelihood(y, eta)
        if np.max(np.abs(beta)) > 20.0:
            raise SeparationError(
                "coefficients diverged beyond |20|; data are separable"
            )
        if np.max(np.abs(score)) < tol or np.max(np.abs(factor * step)) < tol:
            ll = new_ll
            converged = True
            break
        ll = new_ll
    mu = 1.0 / (1.0 + np.exp(-eta))
    w = mu * (1.0 - mu)
    info = xmat.T @ (xmat * w[:, None])
    covariance = np.linalg.inv(info)
    se = np.sqrt(np.diag(covariance))
    names = ["(intercept)", *design.predictors]
    return LogisticModel(
        intercept=float(beta[0]),
        coefficients={name: float(b) for name, b in zip(design.predictors, beta[1:])},
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
        std_errors={name: float(s) for name, s in zip(names, se)},
    )


def wald_p_values(model: LogisticModel) -> dict[str, float]:
    """Two-sided Wald p-value per retained predictor."""
    out = {}
    for name, beta in model.coefficients.items():
        se = model.std_errors[name]
        z = beta / se if se > 0 else math.inf
        out[name] = float(2.0 * stats.norm.sf(abs(z)))
    return out


def prune(
    model: LogisticModel,
    design: DesignMatrix,
    significance: float = 0.95,
    max_iter: int = 50,
    tol: float = 1e-8,
) -> tuple[LogisticModel, DesignMatrix]:
    """Backward elimination by Wald test at the given significance level.

    Repeatedly drops the predictor with the largest p-value above
    (1 - significance) and refits; the intercept is never dropped.
    """
    alpha = 1.0 - significance
    current, current_design = model, design
    while current.coefficients:
        pvals = wald_p_values(current)
        worst = max(pvals, key=lambda k: pvals[k])
        if pvals[worst] <= alpha:
            break
        keep = [p for p in current_design.predictors if p != worst]
        idx = [i for i, p in enumerate(current_design.predictors) if p != worst]
        current_design = DesignMatrix(
            tuple(keep),
            current_design.x[:, idx],
            current_design.y,
            current_design.row_ids,
            current_design.dropped_ids,
        )
        current = fit(current_design, max_iter=max_iter, tol=tol)
    return current, current_design


def predict(model: LogisticModel, case: Mapping[str, float]):
    """Back-transformed probability, or the undiagnosable marker when a
    retained predictor is missing from the case."""
    for name in model.coefficients:
        v = case.get(name)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return UNDIAGNOSABLE
    eta = model.linear_predictor(case)
    return 1.0 / (1.0 + math.exp(-eta))
