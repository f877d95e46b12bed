import pytest

from beliefkit.core import Frame, MassFunction
from beliefkit.evaluate import (
    EvalError,
    MatchTally,
    classify_sns,
    diagnose_case,
    format_report,
    format_tally_table,
    roc_points,
    tally,
    write_roc_csv,
    write_tally_csv,
)

ABC = Frame(["a", "b", "c"])


def mass(focal):
    return MassFunction.from_labels(ABC, focal)


class TestDiagnoseCase:
    def test_no_evidence_vacuous(self):
        report = diagnose_case("c1", {})
        assert report.mass is None
        assert report.strongest == ()
        assert "vacuous" in format_report(report)

    def test_single_symptom_identity(self):
        m = mass({("a",): 0.5, ("a", "b"): 0.3, ("a", "b", "c"): 0.2})
        report = diagnose_case("c1", {"x=low": m})
        assert report.mass.is_close(m, tol=1e-12)
        assert report.top_singleton == "a"
        intervals = dict(report.intervals)
        iv = intervals[ABC.singleton("a")]
        assert (iv.bel, iv.pl) == (pytest.approx(0.5), pytest.approx(1.0))

    def test_total_conflict_reported_not_raised(self):
        m1 = mass({("a",): 1.0})
        m2 = mass({("b",): 1.0})
        report = diagnose_case("c1", {"x=low": m1, "y=high": m2})
        assert report.error is not None
        assert report.conflict == 1.0

    def test_strongest_singletons_first(self):
        m = mass({("b",): 0.4, ("a", "c"): 0.6})
        report = diagnose_case("c1", {"x": m}, threshold=0.25)
        kinds = [a.is_singleton() for a, _ in report.strongest]
        assert kinds == sorted(kinds, reverse=True)

    def test_tie_flagged(self):
        m = mass({("a",): 0.5, ("b",): 0.5})
        report = diagnose_case("c1", {"x": m})
        assert report.tie
        assert report.top_singleton == "a"


class TestClassifySns:
    def test_top_singleton_match_is_s(self):
        report = diagnose_case("c1", {"x": mass({("a",): 0.6, ("b",): 0.4})})
        assert classify_sns(report, "a") == "S"

    def test_contained_in_reported_set_is_nons(self):
        m = mass({("a",): 0.5, ("b", "c"): 0.5})
        report = diagnose_case("c1", {"x": m}, threshold=0.25)
        assert classify_sns(report, "b") == "NONS"

    def test_unreported_is_f(self):
        m = mass({("a",): 0.9, ("b", "c"): 0.1})
        report = diagnose_case("c1", {"x": m}, threshold=0.25)
        assert classify_sns(report, "b") == "F"

    def test_vacuous_theta_reported_nons(self):
        report = diagnose_case("c1", {"x": mass({("a", "b", "c"): 1.0})}, threshold=0.25)
        assert classify_sns(report, "b") == "NONS"
        # the whole frame has belief 1, so it stays reported at threshold 1.0
        report_hi = diagnose_case("c1", {"x": mass({("a", "b", "c"): 1.0})}, threshold=1.0)
        assert classify_sns(report_hi, "b") == "NONS"

    def test_s_takes_precedence(self):
        m = mass({("a",): 0.6, ("a", "b"): 0.4})
        report = diagnose_case("c1", {"x": m}, threshold=0.25)
        assert classify_sns(report, "a") == "S"

    def test_expected_outside_frame(self):
        report = diagnose_case("c1", {"x": mass({("a",): 1.0})})
        with pytest.raises(EvalError):
            classify_sns(report, "zebra")


class TestTally:
    def test_all_s(self):
        t = tally(["S", "S", "S"])
        assert (t.s_pct, t.nons_pct, t.f_pct) == (100.0, 0.0, 0.0)
        assert t.matched_pct == 100.0

    def test_mixed_arithmetic(self):
        t = tally(["S"] * 6 + ["NONS"] * 11)
        assert t.s_pct == pytest.approx(35.29, abs=0.01)
        assert t.nons_pct == pytest.approx(64.71, abs=0.01)
        assert t.matched_pct == pytest.approx(100.0, abs=1e-9)

    def test_single_failure(self):
        t = tally(["F"])
        assert t.matched_pct == 0.0

    def test_percentages_sum(self):
        t = tally(["S", "NONS", "F", "F", "NONS"])
        assert t.s_pct + t.nons_pct + t.f_pct == pytest.approx(100.0, abs=0.01)

    def test_empty_rejected(self):
        with pytest.raises(EvalError):
            tally([])

    def test_table_and_csv(self, tmp_path):
        tallies = {"m1/cd3": tally(["S", "F"]), "m2a/cd3": tally(["S", "S"])}
        text = format_tally_table(tallies)
        assert "MATCHED" in text and "m2a/cd3" in text
        path = tmp_path / "tally.csv"
        write_tally_csv(tallies, path, ["hdr"])
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        assert lines[0].startswith("variant,")
        assert len(lines) == 3


class TestRocPoints:
    def test_threshold_zero_everything_positive(self):
        scores = [(0.9, 1), (0.1, 0)]
        (pt,) = roc_points(scores, [0.0])
        assert (pt.tpr, pt.fpr) == (1.0, 1.0)

    def test_separable_fixture(self):
        scores = [(0.9, 1)] * 5 + [(0.1, 0)] * 5
        points = roc_points(scores, [0.2, 0.4, 0.6, 0.8])
        assert len(points) == 4
        for pt in points:
            assert (pt.tpr, pt.fpr) == (1.0, 0.0)

    def test_hand_confusion(self):
        scores = [(0.9, 1), (0.7, 0), (0.6, 1), (0.3, 0)]
        (pt,) = roc_points(scores, [0.6])
        assert pt.tpr == 1.0
        assert pt.fpr == 0.5
        assert (pt.tp, pt.fp, pt.tn, pt.fn) == (2, 1, 1, 0)

    def test_monotone_in_threshold(self):
        scores = [(p / 10, i % 2) for i, p in enumerate(range(10))]
        points = roc_points(scores, [0.2, 0.4, 0.6, 0.8])
        for a, b in zip(points, points[1:]):
            assert b.tpr <= a.tpr and b.fpr <= a.fpr

    def test_single_class_flagged(self):
        with pytest.raises(EvalError):
            roc_points([(0.9, 1), (0.8, 1)], [0.5])

    def test_csv_output(self, tmp_path):
        points = roc_points([(0.9, 1), (0.1, 0)], [0.2, 0.8])
        path = tmp_path / "roc.csv"
        write_roc_csv(points, path, ["hdr"])
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "threshold,tpr,fpr,tp,fp,tn,fn"
        assert len(lines) == 3


class TestMatchTally:
    def test_counts_consistent(self):
        t = MatchTally(2, 3, 5)
        assert t.total == 10
        assert t.matched_pct == pytest.approx(50.0)
