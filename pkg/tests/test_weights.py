import math
import random

import pytest

from beliefkit.weights import (
    CaseScore,
    EvidenceWeight,
    MembershipFunction,
    WeightError,
    fuzzy_probability,
    load_membership_functions,
    load_weights,
    optimal_alpha,
    save_weights,
    score_case,
    weight_of_evidence,
)


def ew(key, w):
    return EvidenceWeight("H", key, w, 0.0, 1, 1, 2, 2)


class TestWeightOfEvidence:
    def test_non_discriminating(self):
        assert weight_of_evidence(5, 10, 10, 20) == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        assert weight_of_evidence(8, 2, 10, 10) == pytest.approx(math.log(4), abs=1e-12)

    def test_continuity_correction(self):
        w = weight_of_evidence(10, 0, 10, 10)
        assert w == pytest.approx(math.log(21), abs=1e-12)

    def test_zero_population_rejected(self):
        with pytest.raises(WeightError):
            weight_of_evidence(0, 0, 0, 10)

    def test_inconsistent_counts_rejected(self):
        with pytest.raises(WeightError):
            weight_of_evidence(11, 0, 10, 10)

    def test_antisymmetry_without_correction(self):
        # swapping the E-rates between H and not-H negates the weight
        rng = random.Random(31)
        for _ in range(200):
            n_h, n_noth = rng.randint(2, 50), rng.randint(2, 50)
            n_eh = rng.randint(1, n_h - 1)
            n_e_noth = rng.randint(1, n_noth - 1)
            w = weight_of_evidence(n_eh, n_e_noth, n_h, n_noth)
            swapped = weight_of_evidence(n_e_noth, n_eh, n_noth, n_h)
            assert w == pytest.approx(-swapped, abs=1e-12)


class TestMembershipFunction:
    def test_needs_two_breakpoints(self):
        with pytest.raises(WeightError):
            MembershipFunction([(0.0, 0.0)])

    def test_strictly_increasing_values(self):
        with pytest.raises(WeightError):
            MembershipFunction([(0.0, 0.0), (0.0, 1.0)])

    def test_interpolation_and_clamping(self):
        mf = MembershipFunction([(0.0, 0.0), (10.0, 1.0)])
        assert mf(5.0) == pytest.approx(0.5)
        assert mf(-3.0) == 0.0
        assert mf(12.0) == 1.0


class TestFuzzyProbability:
    def test_crisp_ignores_alpha(self):
        mf = MembershipFunction([(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)])
        samples = [1.5, 1.7, -1.0]
        for alpha in (0.1, 0.5, 0.9):
            assert fuzzy_probability(mf, samples, alpha) == fuzzy_probability(
                mf, samples, 0.5
            )

    def test_alpha_zero_counts_positive_membership(self):
        mf = MembershipFunction([(0.0, 0.0), (10.0, 1.0)])
        assert fuzzy_probability(mf, [-5.0, 2.0, 8.0], 0.0) == pytest.approx(2 / 3)
        with pytest.raises(WeightError):
            fuzzy_probability(mf, [1.0], -0.1)

    def test_linear_example(self):
        mf = MembershipFunction([(0.0, 0.0), (10.0, 1.0)])
        assert fuzzy_probability(mf, [2.0, 5.0, 8.0], 0.4) == pytest.approx(2 / 3)

    def test_empty_samples_rejected(self):
        mf = MembershipFunction([(0.0, 0.0), (1.0, 1.0)])
        with pytest.raises(WeightError):
            fuzzy_probability(mf, [], 0.0)

    def test_nonincreasing_in_alpha(self):
        rng = random.Random(33)
        mf = MembershipFunction([(0.0, 0.1), (3.0, 0.9), (6.0, 0.4)])
        samples = [rng.uniform(-1, 7) for _ in range(50)]
        values = [fuzzy_probability(mf, samples, a / 100) for a in range(100)]
        assert all(x >= y for x, y in zip(values, values[1:]))


def plateau_mf():
    # membership 1 on [0, 10], ~0.5 on [20, 30], ~0 elsewhere
    return MembershipFunction(
        [(-0.001, 0.0), (0.0, 1.0), (10.0, 1.0), (10.001, 0.0),
         (19.999, 0.0), (20.0, 0.5), (30.0, 0.5), (30.001, 0.0)]
    )


class TestOptimalAlpha:
    def test_crisp_returns_zero(self):
        mf = MembershipFunction([(0.0, 0.0), (0.001, 1.0), (10.0, 1.0)])
        alpha, _ = optimal_alpha(mf, [5.0, 6.0], [1.0, 2.0])
        assert alpha == 0.0

    def test_two_plateau_cut(self):
        mf = plateau_mf()
        h = [1.0] * 8 + [25.0] * 1 + [50.0] * 1
        noth = [1.0] * 2 + [25.0] * 5 + [50.0] * 3
        alpha, w = optimal_alpha(mf, h, noth)
        assert alpha == pytest.approx(0.5)
        assert w > 0

    def test_symmetric_data_zero_weight(self):
        mf = MembershipFunction([(0.0, 0.0), (10.0, 1.0)])
        samples = [2.0, 5.0, 8.0]
        alpha, w = optimal_alpha(mf, samples, list(samples))
        assert alpha == 0.0
        assert w == pytest.approx(0.0, abs=1e-15)

    def test_no_support_rejected(self):
        mf = MembershipFunction([(0.0, 0.0), (1.0, 1.0)])
        with pytest.raises(WeightError):
            optimal_alpha(mf, [-5.0], [-6.0])

    def test_matches_grid_brute_force(self):
        rng = random.Random(35)
        for _ in range(100):
            pts = sorted(rng.sample(range(100), rng.randint(2, 5)))
            mf = MembershipFunction([(float(v), rng.random()) for v in pts])
            h = [rng.uniform(-10, 110) for _ in range(rng.randint(1, 15))]
            noth = [rng.uniform(-10, 110) for _ in range(rng.randint(1, 15))]
            try:
                alpha, w = optimal_alpha(mf, h, noth)
            except WeightError:
                continue
            for i in range(1000):
                grid_alpha = i / 1000
                n_eh = sum(1 for x in h if mf(x) > grid_alpha)
                n_en = sum(1 for x in noth if mf(x) > grid_alpha)
                gw = weight_of_evidence(n_eh, n_en, len(h), len(noth))
                assert abs(w) >= abs(gw) - 1e-12


class TestScoreCase:
    def test_no_evidence_echoes_prior(self):
        score = score_case(2.0, [])
        assert score.posterior_log_odds == pytest.approx(math.log(2.0), abs=1e-15)

    def test_cancelling_weights(self):
        score = score_case(1.0, [ew("e1", math.log(4)), ew("e2", math.log(0.25))])
        assert score.probability == pytest.approx(0.5, abs=1e-12)

    def test_logistic_back_transform(self):
        score = score_case(1.0, [ew("e1", math.log(4))])
        assert score.probability == pytest.approx(0.8, abs=1e-12)

    def test_nonpositive_prior_rejected(self):
        with pytest.raises(WeightError):
            score_case(0.0, [])

    def test_zero_weight_is_bit_identical(self):
        base = score_case(1.7, [ew("e1", 0.42)])
        with_zero = score_case(1.7, [ew("e1", 0.42), ew("e2", 0.0)])
        assert with_zero.posterior_log_odds == base.posterior_log_odds
        assert with_zero.probability == base.probability

    def test_argmax_invariant_to_prior_shift(self):
        # comparing two hypotheses with equal priors, adding a constant to
        # both log-odds never flips the winner
        rng = random.Random(37)
        for _ in range(100):
            w1 = [ew("e", rng.uniform(-2, 2)) for _ in range(3)]
            w2 = [ew("e", rng.uniform(-2, 2)) for _ in range(3)]
            base = score_case(1.0, w1).posterior_log_odds - score_case(1.0, w2).posterior_log_odds
            shifted = (
                score_case(5.0, w1).posterior_log_odds
                - score_case(5.0, w2).posterior_log_odds
            )
            assert (base > 0) == (shifted > 0) or abs(base) < 1e-12


class TestSerialization:
    def test_membership_csv(self, tmp_path):
        path = tmp_path / "mf.csv"
        path.write_text(
            "evidence_key,value,mu\nglucose,0,0\nglucose,10,1\nalbumin,1,0.2\nalbumin,2,0.9\n"
        )
        mfs = load_membership_functions(path)
        assert set(mfs) == {"glucose", "albumin"}
        assert mfs["glucose"](5.0) == pytest.approx(0.5)

    def test_weights_roundtrip(self, tmp_path):
        path = tmp_path / "w.csv"
        weights = [EvidenceWeight("H", "glucose=high", 1.25, 0.5, 8, 2, 10, 10)]
        save_weights(weights, path, ["test header"])
        assert load_weights(path) == weights
