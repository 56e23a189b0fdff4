import pytest

from mqmcat.evaluation.bootstrap import BootstrapResult, paired_bootstrap

REF_SET = [
    "the cat sat on the mat",
    "a quick brown fox jumps over the lazy dog",
    "there is a small house near the river",
    "the weather today is cold and windy",
    "she reads a book every single evening",
]


def pairs(hyps_a, hyps_b, refs):
    return list(zip(hyps_a, hyps_b, refs))


class TestPairedBootstrap:
    def test_identical_systems_tie(self):
        result = paired_bootstrap(pairs(REF_SET, REF_SET, REF_SET), "bleu", "en")
        assert result.delta == pytest.approx(0.0)
        assert result.p_value >= 0.5

    def test_clear_winner_has_zero_p(self):
        noise = ["xyzzy plugh fnord"] * len(REF_SET)
        result = paired_bootstrap(
            pairs(REF_SET, noise, REF_SET), "bleu", "en", n_resamples=1000, seed=3
        )
        assert result.delta > 0.0
        assert result.p_value == 0.0

    def test_clear_loser_has_high_p(self):
        noise = ["xyzzy plugh fnord"] * len(REF_SET)
        result = paired_bootstrap(
            pairs(noise, REF_SET, REF_SET), "bleu", "en", n_resamples=1000, seed=3
        )
        assert result.delta < 0.0
        assert result.p_value >= 0.5

    def test_same_seed_is_bit_identical(self):
        degraded = [h.replace("the", "a") for h in REF_SET]
        first = paired_bootstrap(
            pairs(REF_SET, degraded, REF_SET), "meteor_lite", "en", n_resamples=200, seed=11
        )
        second = paired_bootstrap(
            pairs(REF_SET, degraded, REF_SET), "meteor_lite", "en", n_resamples=200, seed=11
        )
        assert first.to_dict() == second.to_dict()

    def test_different_seeds_usually_differ(self):
        degraded = ["the cat sat on mat", "a quick fox jumps over the dog",
                    "there is a house near river", "the weather is cold windy",
                    "she reads a book every evening"]
        results = {
            paired_bootstrap(
                pairs(REF_SET, degraded, REF_SET), "bleu", "en", n_resamples=50, seed=s
            ).p_value
            for s in range(8)
        }
        # Resample noise should produce at least two distinct p values.
        assert len(results) >= 2 or results == {0.0}

    def test_meteor_metric_supported(self):
        noise = ["xyzzy plugh fnord"] * len(REF_SET)
        result = paired_bootstrap(pairs(REF_SET, noise, REF_SET), "meteor_lite", "en")
        assert result.metric == "meteor_lite"
        assert result.p_value == 0.0

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValueError):
            paired_bootstrap(pairs(REF_SET, REF_SET, REF_SET), "chrf", "en")

    def test_empty_pairs_rejected(self):
        with pytest.raises(ValueError):
            paired_bootstrap([], "bleu", "en")

    def test_result_round_trip_fields(self):
        result = paired_bootstrap(
            pairs(REF_SET, REF_SET, REF_SET), "bleu", "en", n_resamples=10, seed=5
        )
        as_dict = result.to_dict()
        assert as_dict["metric"] == "bleu"
        assert as_dict["n_resamples"] == 10
        assert as_dict["seed"] == 5
        assert set(as_dict) == {"metric", "delta", "p_value", "n_resamples", "seed"}
        assert isinstance(result, BootstrapResult)

    def test_p_value_in_unit_interval(self):
        degraded = [h.replace("cat", "dog") for h in REF_SET]
        for seed in range(5):
            result = paired_bootstrap(
                pairs(REF_SET, degraded, REF_SET), "bleu", "en", n_resamples=100, seed=seed
            )
            assert 0.0 <= result.p_value <= 1.0
