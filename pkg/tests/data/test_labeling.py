"""
Tests for probability interpolation and window segmentation.
"""

import dataclasses

import numpy as np
import pytest

from event_kiwi.core.types import StageKind
from event_kiwi.data.labeling import assign_targets, interpolate_probabilities, segment
from event_kiwi.errors import EpisodeTooShort, InvalidEpisode


class TestInterpolateProbabilities:
    """Tests for interpolate_probabilities"""

    def test_transient_of_four(self, episode_factory):
        """Test a transient of length 4 gives 0.2/0.4/0.6/0.8 exactly"""
        ep = episode_factory([0, 0, 102, 102, 102, 102, 2, 2])
        probs = interpolate_probabilities(ep).values
        assert probs.tolist() == [0.0, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0]

    def test_transient_at_end(self, episode_factory):
        """Test a trailing transient still uses i/(L+1)"""
        ep = episode_factory([0, 105, 105, 105])
        assert interpolate_probabilities(ep).values.tolist() == [0.0, 0.25, 0.5, 0.75]

    def test_all_normal(self, episode_factory):
        ep = episode_factory([0] * 5)
        assert not interpolate_probabilities(ep).values.any()

    def test_invalid_episode(self, episode_factory):
        """Test stage regression raises InvalidEpisode"""
        ep = episode_factory([0, 2, 0])
        with pytest.raises(InvalidEpisode) as exc:
            interpolate_probabilities(ep)
        assert exc.value.details["violations"] == ["StageRegression@2"]

    def test_random_valid_episodes(self, episode_factory):
        """Test 500 random valid episodes: monotone, 0 on normal, 1 on faulty"""
        rng = np.random.default_rng(2024)
        for trial in range(500):
            event = int(rng.integers(1, 9))
            n_normal, n_transient, n_faulty = (int(v) for v in rng.integers(0, 40, size=3))
            if n_normal + n_transient + n_faulty == 0:
                n_normal = 1
            codes = [0] * n_normal + [100 + event] * n_transient + [event] * n_faulty
            ep = episode_factory(codes, episode_id=f"ep{trial}", seed=trial)

            probs = interpolate_probabilities(ep).values
            kinds = ep.stage_kinds

            assert np.all(np.diff(probs) >= 0)
            assert np.all(probs[kinds == StageKind.NORMAL] == 0.0)
            assert np.all(probs[kinds == StageKind.FAULTY] == 1.0)
            transient = probs[kinds == StageKind.TRANSIENT]
            assert np.all((transient > 0.0) & (transient < 1.0))


class TestAssignTargets:
    """Tests for assign_targets"""

    def test_last_second_decides(self):
        kinds = np.array([StageKind.NORMAL, StageKind.TRANSIENT])
        assert assign_targets(kinds, np.array([0.0, 0.3])) == (True, 0.3)
        kinds = np.array([StageKind.TRANSIENT, StageKind.NORMAL])
        assert assign_targets(kinds, np.array([0.3, 0.0])) == (False, 0.0)


class TestSegment:
    """Tests for segment"""

    def test_180_seconds_three_windows(self, episode_factory):
        """Test non-overlapping minutes with targets from the last second"""
        codes = [0] * 100 + [102] * 40 + [2] * 40
        ep = episode_factory(codes)

        windows = segment(ep)

        assert [w.start for w in windows] == [0, 60, 120]
        assert [w.minute for w in windows] == [0, 1, 2]
        assert [w.class_label for w in windows] == [False, True, True]
        assert windows[1].prob_target == pytest.approx(20 / 41)
        assert windows[2].prob_target == 1.0
        assert windows[0].values.shape == (60, 2)
        assert np.array_equal(windows[2].values, ep.values[120:180])

    def test_remainder_dropped(self, episode_factory):
        ep = episode_factory([0] * 150)
        assert len(segment(ep)) == 2

    def test_stride(self, episode_factory):
        """Test overlapping windows start every stride seconds"""
        ep = episode_factory([0] * 100)
        windows = segment(ep, window_len=60, stride=20)
        assert [w.start for w in windows] == [0, 20, 40]

    def test_minute_follows_elapsed_seconds(self, episode_factory):
        """Test minutes come from the timestamps, not the window length"""
        ep = episode_factory([0] * 150)
        ep = dataclasses.replace(ep, timestamps=ep.timestamps + 3600)

        windows = segment(ep, window_len=30, stride=30)

        assert [w.start for w in windows] == [0, 30, 60, 90, 120]
        assert [w.minute for w in windows] == [0, 0, 1, 1, 2]

    def test_too_short(self, episode_factory):
        ep = episode_factory([0] * 59)
        with pytest.raises(EpisodeTooShort):
            segment(ep)
