"""Command-line surface: estimation, diagnosis, evaluation, weight-of-
evidence training/scoring/ROC, variable reduction, and synthetic fixtures.

Every emitted artifact embeds a run manifest (command, input digests,
config, tool version).  The manifest timestamp is the only non-
deterministic output and lives on `#`-prefixed lines that golden
comparisons skip.

Exit codes: 0 success, 1 input error, 2 partial per-case failures.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import sys
from pathlib import Path

import click

from . import __version__
from .core import Frame, MassFunction
from .dataio import (
    DataError,
    DiscretizationSpec,
    SyntheticSpec,
    build_frequency_table,
    discretize,
    generate_synthetic,
    load_cases,
    pearson_matrix,
    save_cases,
    save_correlation_csv,
)
from .estimation import (
    EstimationError,
    Method3Config,
    apply_overrides,
    estimate_all,
    load_overrides,
)
from .evaluate import (
    DEFAULT_REPORT_THRESHOLD,
    PAPER_DECISION_CRITERIA,
    classify_sns,
    diagnose_case,
    format_report,
    format_tally_table,
    roc_points,
    tally,
    write_roc_csv,
    write_tally_csv,
)
from .groups import GroupSearchError, load_correlation_csv, reduce_variables
from .logit import (
    DesignMatrix,
    LogitError,
    UNDIAGNOSABLE,
    fit as logit_fit,
    predict as logit_predict,
    prune as logit_prune,
)
from .weights import (
    EvidenceWeight,
    WeightError,
    load_membership_functions,
    load_weights,
    optimal_alpha,
    save_weights,
    score_case,
)

METHOD_CHOICES = ["m1", "m2a", "m2b", "m3-global", "m3-bycard"]


class InputError(click.ClickException):
    exit_code = 1


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def build_manifest(command: str, inputs: dict, config: dict) -> dict:
    return {
        "command": command,
        "inputs": {name: _digest(p) for name, p in inputs.items() if p},
        "config": config,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def manifest_lines(manifest: dict) -> list[str]:
    return ["manifest: " + json.dumps(manifest, sort_keys=True)]


def load_frame(path) -> Frame:
    labels = [
        line.strip()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    return Frame(labels)


def _estimator_config(
    method: str, theta: str, max_frame_size: int = 12
) -> tuple[str, Method3Config | None]:
    if method in ("m1", "m2a", "m2b"):
        return method, None
    norm = "global" if method == "m3-global" else "by-cardinality-then-global"
    return "m3", Method3Config(
        normalization=norm, theta_preassign=theta, max_frame_size=max_frame_size
    )


def _load_mass_file(path) -> tuple[Frame, dict[str, MassFunction], float]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    frame = Frame(doc["frame"])
    masses = {
        key: MassFunction.from_json({"frame": doc["frame"], "focal": entry})
        for key, entry in doc["masses"].items()
    }
    return frame, masses, doc.get("min_row_total", 1)


@click.group()
@click.version_option(__version__)
def main():
    """Belief-function and weight-of-evidence diagnosis toolkit."""


@main.command()
@click.option("--method", type=click.Choice(METHOD_CHOICES), required=True)
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True))
@click.option("--disc", "disc_path", required=True, type=click.Path(exists=True))
@click.option("--frame", "frame_path", required=True, type=click.Path(exists=True))
@click.option("--overrides", "overrides_path", type=click.Path(exists=True))
@click.option("--theta", type=click.Choice(["none", "zero", "one"]), default="none",
              help="Whole-frame preassignment for the m3 variants.")
@click.option("--min-row-total", type=float, default=1.0)
@click.option("--max-frame-size", type=int, default=12,
              help="Refuse m3 subset enumeration beyond this frame size.")
@click.option("--out", "out_path", required=True, type=click.Path())
def estimate(method, cases_path, disc_path, frame_path, overrides_path, theta,
             min_row_total, max_frame_size, out_path):
    """Estimate per-symptom-state mass functions from training cases."""
    try:
        frame = load_frame(frame_path)
        spec = DiscretizationSpec.from_csv(disc_path)
        cases = load_cases(cases_path)
        selector, m3cfg = _estimator_config(method, theta, max_frame_size)
        if m3cfg and frame.n > m3cfg.max_frame_size:
            raise EstimationError(
                f"frame has {frame.n} outcomes, above the m3 limit of "
                f"{m3cfg.max_frame_size}; raise --max-frame-size (hard cap 20) "
                "or choose m1/m2a/m2b"
            )
        freq = build_frequency_table(cases, spec, frame, min_row_total=min_row_total)
        masses = estimate_all(freq, selector, m3cfg)
        if overrides_path:
            masses = apply_overrides(masses, load_overrides(overrides_path))
    except (DataError, EstimationError, ValueError) as exc:
        raise InputError(str(exc)) from None
    manifest = build_manifest(
        "estimate",
        {"cases": cases_path, "disc": disc_path, "frame": frame_path,
         "overrides": overrides_path},
        {"method": method, "theta": theta, "min_row_total": min_row_total},
    )
    doc = {
        "manifest": manifest,
        "frame": list(frame.outcomes),
        "masses": {
            key: json.loads(m.to_json())["focal"] for key, m in sorted(masses.items())
        },
    }
    Path(out_path).write_text(json.dumps(doc, indent=1), encoding="utf-8")
    click.echo(f"wrote {len(masses)} mass functions to {out_path}")


@main.command()
@click.option("--masses", "masses_path", required=True, type=click.Path(exists=True))
@click.option("--disc", "disc_path", required=True, type=click.Path(exists=True))
@click.option("--cases", "cases_path", type=click.Path(exists=True))
@click.option("--stdin", "use_stdin", is_flag=True,
              help="Read one case per line from stdin: id,var=value,var=value,...")
@click.option("--threshold", type=float, default=DEFAULT_REPORT_THRESHOLD,
              help="Report threshold for the strongest-outcomes list.")
@click.option("--out", "out_path", type=click.Path())
def diagnose(masses_path, disc_path, cases_path, use_stdin, threshold, out_path):
    """Diagnose cases by combining the applicable symptom-state masses."""
    if bool(cases_path) == use_stdin:
        raise InputError("supply exactly one of --cases or --stdin")
    try:
        _, masses, _ = _load_mass_file(masses_path)
        spec = DiscretizationSpec.from_csv(disc_path)
    except (DataError, ValueError, KeyError) as exc:
        raise InputError(str(exc)) from None
    manifest = build_manifest(
        "diagnose", {"masses": masses_path, "disc": disc_path, "cases": cases_path},
        {"threshold": threshold},
    )
    sink = open(out_path, "w", encoding="utf-8") if out_path else sys.stdout
    failures = 0
    try:
        for line in manifest_lines(manifest):
            print(f"# {line}", file=sink)
        print(f"# report threshold {threshold:g} "
              "(strongest-outcome cutoff; read as a belief fraction)", file=sink)
        for case in _iter_diagnose_cases(cases_path, use_stdin):
            if isinstance(case, str):
                failures += 1
                print(f"# skipped malformed case: {case}", file=sink)
                continue
            keys = discretize(case, spec)
            applied = {k: masses[k] for k in keys.values() if k in masses}
            report = diagnose_case(case.id, applied, threshold)
            if report.error:
                failures += 1
            print(format_report(report), file=sink)
            print("", file=sink)
            if sink is sys.stdout:
                sink.flush()
    finally:
        if sink is not sys.stdout:
            sink.close()
    if failures:
        sys.exit(2)


def _iter_diagnose_cases(cases_path, use_stdin):
    from .dataio import CaseRecord

    if cases_path:
        yield from load_cases(cases_path)
        return
    for raw in sys.stdin:
        raw = raw.strip()
        if not raw:
            continue
        try:
            parts = raw.split(",")
            values = {}
            for part in parts[1:]:
                name, _, val = part.partition("=")
                values[name.strip()] = float(val)
            yield CaseRecord(parts[0].strip(), values)
        except (ValueError, DataError):
            yield raw


@main.command()
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--disc", "disc_path", required=True, type=click.Path(exists=True))
@click.option("--frame", "frame_path", required=True, type=click.Path(exists=True))
@click.option("--methods", default="m1,m2a,m2b",
              help="Comma-separated subset of " + ",".join(METHOD_CHOICES))
@click.option("--variants", default="cd3",
              help="Comma-separated subset of cd3,cd5,cd7.")
@click.option("--theta", type=click.Choice(["none", "zero", "one"]), default="none")
@click.option("--threshold", type=float, default=DEFAULT_REPORT_THRESHOLD)
@click.option("--priority", "priority_path", type=click.Path(exists=True),
              help="Variable priority list for cd5 (one name per line, best first).")
@click.option("--corr-threshold", type=float, default=0.5)
@click.option("--cumulative-threshold", type=float, default=1.0)
@click.option("--out", "out_prefix", required=True, type=click.Path())
@click.option("--figures", "figures_dir", type=click.Path())
def evaluate(train_path, test_path, disc_path, frame_path, methods, variants, theta,
             threshold, priority_path, corr_threshold, cumulative_threshold,
             out_prefix, figures_dir):
    """Train on one split, score the other, and tabulate S/NONS/F."""
    try:
        frame = load_frame(frame_path)
        spec = DiscretizationSpec.from_csv(disc_path)
        train = load_cases(train_path)
        test = load_cases(test_path)
    except (DataError, ValueError) as exc:
        raise InputError(str(exc)) from None
    overlap = {c.id for c in train} & {c.id for c in test}
    if overlap:
        raise InputError(f"train/test ids overlap: {sorted(overlap)[:5]}")
    method_list = [m.strip() for m in methods.split(",") if m.strip()]
    variant_list = [v.strip() for v in variants.split(",") if v.strip()]
    bad = [m for m in method_list if m not in METHOD_CHOICES]
    bad += [v for v in variant_list if v not in ("cd3", "cd5", "cd7")]
    if bad:
        raise InputError(f"unknown methods/variants: {bad}")

    all_vars = sorted(spec.variables())
    if priority_path:
        priority = [
            line.strip()
            for line in Path(priority_path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        priority = all_vars

    variant_vars = {}
    for variant in variant_list:
        if variant == "cd3":
            variant_vars[variant] = all_vars
            continue
        matrix = pearson_matrix(train, priority)
        # unavailable entries cannot justify dropping a variable
        import numpy as np

        matrix = np.nan_to_num(matrix, nan=0.0)
        np.fill_diagonal(matrix, 1.0)
        mode = "cd5-threshold" if variant == "cd5" else "cd7-cumulative"
        variant_vars[variant] = reduce_variables(
            priority, matrix, mode, corr_threshold, cumulative_threshold
        )

    tallies = {}
    for method in method_list:
        selector, m3cfg = _estimator_config(method, theta)
        for variant in variant_list:
            keep = set(variant_vars[variant])
            sub_spec = DiscretizationSpec(
                {v: b for v, b in spec.bins.items() if v in keep}
            )
            try:
                freq = build_frequency_table(train, sub_spec, frame)
                masses = estimate_all(freq, selector, m3cfg)
            except (DataError, EstimationError) as exc:
                raise InputError(f"{method}/{variant}: {exc}") from None
            labels = []
            for case in test:
                keys = discretize(
                    type(case)(case.id, {k: v for k, v in case.values.items() if k in keep},
                               case.outcome),
                    sub_spec,
                )
                applied = {k: masses[k] for k in keys.values() if k in masses}
                report = diagnose_case(case.id, applied, threshold)
                labels.append(classify_sns(report, case.outcome))
            tallies[f"{method}/{variant}"] = tally(labels)

    manifest = build_manifest(
        "evaluate",
        {"train": train_path, "test": test_path, "disc": disc_path, "frame": frame_path},
        {"methods": method_list, "variants": variant_list, "theta": theta,
         "threshold": threshold, "corr_threshold": corr_threshold,
         "cumulative_threshold": cumulative_threshold},
    )
    csv_path = f"{out_prefix}_tally.csv"
    txt_path = f"{out_prefix}_tally.txt"
    write_tally_csv(tallies, csv_path, manifest_lines(manifest))
    table = format_tally_table(tallies)
    Path(txt_path).write_text(
        "".join(f"# {line}\n" for line in manifest_lines(manifest)) + table + "\n",
        encoding="utf-8",
    )
    click.echo(table)
    if figures_dir:
        from .figures import plot_tally

        Path(figures_dir).mkdir(parents=True, exist_ok=True)
        plot_tally(tallies, Path(figures_dir) / "tally.png")
        click.echo(f"figure written to {figures_dir}/tally.png")


@main.group()
def woe():
    """Weight-of-evidence training, case scoring, and ROC output."""


@woe.command("train")
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True))
@click.option("--membership", "membership_path", required=True, type=click.Path(exists=True))
@click.option("--hypothesis", required=True,
              help="Outcome label treated as the positive hypothesis.")
@click.option("--out", "out_path", required=True, type=click.Path())
def woe_train(cases_path, membership_path, hypothesis, out_path):
    """Train one weight per membership function at its optimal alpha-cut."""
    try:
        cases = load_cases(cases_path)
        mfs = load_membership_functions(membership_path)
    except (DataError, WeightError, ValueError) as exc:
        raise InputError(str(exc)) from None
    h_cases = [c for c in cases if c.outcome == hypothesis]
    noth_cases = [c for c in cases if c.outcome != hypothesis]
    if not h_cases or not noth_cases:
        raise InputError(f"hypothesis {hypothesis!r} must split the cases into two classes")
    weights = []
    for key, mf in sorted(mfs.items()):
        h_samples = [c.values[key] for c in h_cases if c.present(key)]
        noth_samples = [c.values[key] for c in noth_cases if c.present(key)]
        if not h_samples or not noth_samples:
            continue
        try:
            alpha, w = optimal_alpha(mf, h_samples, noth_samples)
        except WeightError:
            continue
        n_eh = sum(1 for x in h_samples if mf(x) > alpha)
        n_e_noth = sum(1 for x in noth_samples if mf(x) > alpha)
        weights.append(
            EvidenceWeight(hypothesis, key, w, alpha, n_eh, n_e_noth,
                           len(h_samples), len(noth_samples))
        )
    manifest = build_manifest(
        "woe train", {"cases": cases_path, "membership": membership_path},
        {"hypothesis": hypothesis},
    )
    save_weights(weights, out_path, manifest_lines(manifest))
    click.echo(f"trained {len(weights)} weights to {out_path}")


def _applicable_weights(case, weights, mfs):
    applied = []
    for w in weights:
        mf = mfs.get(w.evidence_key)
        if mf is None or not case.present(w.evidence_key):
            continue
        if mf(case.values[w.evidence_key]) > w.alpha:
            applied.append(w)
    return applied


@woe.command("score")
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True))
@click.option("--weights", "weights_path", required=True, type=click.Path(exists=True))
@click.option("--membership", "membership_path", required=True, type=click.Path(exists=True))
@click.option("--prior-odds", type=float, default=1.0)
@click.option("--out", "out_path", required=True, type=click.Path())
def woe_score(cases_path, weights_path, membership_path, prior_odds, out_path):
    """Score cases by summed log-odds of the applicable evidence."""
    import csv as _csv

    try:
        cases = load_cases(cases_path)
        weights = load_weights(weights_path)
        mfs = load_membership_functions(membership_path)
    except (DataError, WeightError, ValueError) as exc:
        raise InputError(str(exc)) from None
    manifest = build_manifest(
        "woe score",
        {"cases": cases_path, "weights": weights_path, "membership": membership_path},
        {"prior_odds": prior_odds},
    )
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        for line in manifest_lines(manifest):
            fh.write(f"# {line}\n")
        writer = _csv.writer(fh)
        writer.writerow(["id", "applied", "posterior_log_odds", "probability"])
        for case in cases:
            applied = _applicable_weights(case, weights, mfs)
            score = score_case(prior_odds, applied)
            writer.writerow(
                [case.id, "|".join(k for k, _ in score.applied),
                 f"{score.posterior_log_odds:.12g}", f"{score.probability:.12g}"]
            )
    click.echo(f"scored {len(cases)} cases to {out_path}")


@woe.command("roc")
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True))
@click.option("--weights", "weights_path", required=True, type=click.Path(exists=True))
@click.option("--membership", "membership_path", required=True, type=click.Path(exists=True))
@click.option("--hypothesis", required=True)
@click.option("--prior-odds", type=float, default=1.0)
@click.option("--thresholds", default=",".join(str(t) for t in PAPER_DECISION_CRITERIA))
@click.option("--baseline", type=click.Choice(["logistic"]),
              help="Also fit a logistic baseline on the same cases.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--figures", "figures_dir", type=click.Path())
def woe_roc(cases_path, weights_path, membership_path, hypothesis, prior_odds,
            thresholds, baseline, out_path, figures_dir):
    """ROC points for the weight-of-evidence classifier at fixed criteria."""
    try:
        cases = load_cases(cases_path)
        weights = load_weights(weights_path)
        mfs = load_membership_functions(membership_path)
        tlist = [float(t) for t in thresholds.split(",")]
    except (DataError, WeightError, ValueError) as exc:
        raise InputError(str(exc)) from None
    scores = []
    for case in cases:
        applied = _applicable_weights(case, weights, mfs)
        prob = score_case(prior_odds, applied).probability
        scores.append((prob, 1 if case.outcome == hypothesis else 0))
    try:
        points = roc_points(scores, tlist)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    curves = {"weights-of-evidence": points}
    if baseline == "logistic":
        curves["logistic"] = _logistic_roc(cases, sorted(mfs), hypothesis, tlist)
    manifest = build_manifest(
        "woe roc",
        {"cases": cases_path, "weights": weights_path, "membership": membership_path},
        {"hypothesis": hypothesis, "prior_odds": prior_odds, "thresholds": tlist,
         "baseline": baseline},
    )
    if len(curves) == 1:
        write_roc_csv(points, out_path, manifest_lines(manifest))
    else:
        base = curves["logistic"]
        write_roc_csv(
            points, out_path, manifest_lines(manifest),
            extra_column=("baseline_tpr_fpr",
                          [f"{p.tpr:.6g}/{p.fpr:.6g}" for p in base]),
        )
    click.echo(f"wrote {len(points)} ROC points to {out_path}")
    if figures_dir:
        from .figures import plot_roc

        Path(figures_dir).mkdir(parents=True, exist_ok=True)
        plot_roc(curves, Path(figures_dir) / "roc.png")
        click.echo(f"figure written to {figures_dir}/roc.png")


def _logistic_roc(cases, predictors, hypothesis, tlist):
    records = [
        {"id": c.id, **c.values, "y": 1 if c.outcome == hypothesis else 0} for c in cases
    ]
    try:
        design = DesignMatrix.from_records(records, predictors, "y")
        model = logit_fit(design)
        model, design = logit_prune(model, design)
    except LogitError as exc:
        raise InputError(f"logistic baseline failed: {exc}") from None
    scores = []
    for rec in records:
        p = logit_predict(model, rec)
        if p == UNDIAGNOSABLE:
            continue
        scores.append((p, rec["y"]))
    return roc_points(scores, tlist)


@main.command()
@click.option("--corr", "corr_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["cd5", "cd7"]), required=True)
@click.option("--corr-threshold", type=float, default=0.5)
@click.option("--cumulative-threshold", type=float, default=1.0)
@click.option("--out", "out_path", type=click.Path())
def reduce(corr_path, mode, corr_threshold, cumulative_threshold, out_path):
    """Drop redundant variables from a correlation matrix."""
    try:
        names, matrix = load_correlation_csv(corr_path)
        import numpy as np

        matrix = np.nan_to_num(matrix, nan=0.0)
        np.fill_diagonal(matrix, 1.0)
        full_mode = "cd5-threshold" if mode == "cd5" else "cd7-cumulative"
        retained = reduce_variables(names, matrix, full_mode,
                                    corr_threshold, cumulative_threshold)
    except (GroupSearchError, ValueError) as exc:
        raise InputError(str(exc)) from None
    text = "\n".join(retained) + "\n"
    if out_path:
        manifest = build_manifest(
            "reduce", {"corr": corr_path},
            {"mode": mode, "corr_threshold": corr_threshold,
             "cumulative_threshold": cumulative_threshold},
        )
        Path(out_path).write_text(
            "".join(f"# {line}\n" for line in manifest_lines(manifest)) + text,
            encoding="utf-8",
        )
    click.echo(text, nl=False)


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, help="Override the seed stored in the spec.")
@click.option("--out", "out_path", required=True, type=click.Path())
def synth(spec_path, seed, out_path):
    """Generate a deterministic synthetic case fixture from a JSON spec."""
    try:
        spec = SyntheticSpec.from_json(Path(spec_path).read_text(encoding="utf-8"))
        if seed is not None:
            spec = SyntheticSpec(
                seed, spec.frame, spec.prior, spec.discretization,
                spec.conditionals, spec.case_count, spec.missingness,
            )
        cases = generate_synthetic(spec)
    except (DataError, ValueError, KeyError) as exc:
        raise InputError(str(exc)) from None
    save_cases(cases, out_path)
    click.echo(f"wrote {len(cases)} cases to {out_path}")


if __name__ == "__main__":
    main()
