import pytest

from proactive.bench import BenchResult, overhead_percent, run_benchmark


class TestOverheadFormula:
    def test_published_inputs(self):
        assert overhead_percent(2135, 2039) == 4.71

    def test_identical_medians(self):
        assert overhead_percent(100, 100) == 0.0

    def test_ten_percent(self):
        assert overhead_percent(110, 100) == 10.0

    def test_negative_overhead_allowed(self):
        assert overhead_percent(95, 100) == -5.0


class TestRunBenchmark:
    def test_rejects_too_few_repetitions(self, pack, scenarios):
        with pytest.raises(ValueError):
            run_benchmark(scenarios["hearhere"], pack.deployable(),
                          repetitions=2)

    def test_per_action_result(self, pack, scenarios):
        result = run_benchmark(scenarios["hearhere"], pack.deployable(),
                               repetitions=3, action_work_s=0.0002)
        assert result.repetitions == 3
        assert len(result.actions) == 3
        assert [a.label for a in result.actions] \
            == ["launch", "tap START", "background"]
        assert [a.interventions for a in result.actions] == [0, 0, 1]
        for action in result.actions:
            assert action.median_with_ms > 0
            assert action.median_without_ms > 0
            assert action.overhead_percent == overhead_percent(
                action.median_with_ms, action.median_without_ms)

    def test_highest_overhead_is_an_action(self, pack, scenarios):
        result = run_benchmark(scenarios["bluechat"], pack.deployable(),
                               repetitions=3, action_work_s=0.0002)
        assert result.highest_overhead() in result.actions

    def test_empty_result_has_no_highest(self):
        assert BenchResult(actions=(), repetitions=3).highest_overhead() is None
