"""Tests for stage timing."""

import pytest

from matconc.lib.metrics import reset_timings, timed, timing_summary, tracked


class TestTracked:
    """The tracked decorator and the timed block."""

    def setup_method(self) -> None:
        reset_timings()

    def test_counts_calls_and_trials(self) -> None:
        @tracked("draw", trials_arg="trials")
        def draw(scale: float, trials: int) -> float:
            return scale * trials

        assert draw(2.0, 100) == 200.0
        draw(1.0, trials=50)
        stage = timing_summary()["stages"]["draw"]
        assert stage["calls"] == 2
        assert stage["trials"] == 150
        assert stage["failures"] == 0

    def test_default_name_and_failures(self) -> None:
        @tracked()
        def fails() -> None:
            raise ValueError("boom")

        with pytest.raises(ValueError):
            fails()
        stage = timing_summary()["stages"]["fails"]
        assert stage["calls"] == 1
        assert stage["failures"] == 1
        assert stage["trials"] == 0

    def test_timed_block(self) -> None:
        with timed("fit", trials=10):
            pass
        stage = timing_summary()["stages"]["fit"]
        assert stage["calls"] == 1
        assert stage["trials"] == 10
        assert stage["seconds"] >= 0.0

    def test_reset(self) -> None:
        with timed("fit"):
            pass
        reset_timings()
        assert timing_summary()["stages"] == {}
