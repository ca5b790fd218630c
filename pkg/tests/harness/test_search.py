"""
Tests for grid and random hyper-parameter search.
"""

import pytest

from event_kiwi.core.types import EventType, Task
from event_kiwi.errors import ConfigError, EmptyGrid
from event_kiwi.harness.experiment import build_event_dataset
from event_kiwi.harness.search import GridSettings, grid_points, grid_search, random_search


@pytest.fixture
def windows(tiny_dataset):
    return build_event_dataset(tiny_dataset, EventType.SPURIOUS_DHSV_CLOSURE)


class TestGridPoints:
    """Tests for grid_points"""

    def test_product_in_order(self):
        points = grid_points({"n_trees": [5, 10], "max_depth": [2, None]})
        assert points == [
            {"n_trees": 5, "max_depth": 2},
            {"n_trees": 5, "max_depth": None},
            {"n_trees": 10, "max_depth": 2},
            {"n_trees": 10, "max_depth": None},
        ]

    @pytest.mark.parametrize("space", [{}, {"n_trees": []}])
    def test_empty(self, space):
        with pytest.raises(EmptyGrid):
            grid_points(space)


@pytest.mark.integration
class TestGridSearch:
    """Tests for grid_search and random_search"""

    def test_forest_leaderboard(self, fast_config, windows):
        grid = GridSettings(method="rf", params={"n_trees": [3, 9], "max_depth": [1, 4]})

        best, leaderboard = grid_search(fast_config, grid, windows)

        assert len(leaderboard) == 4
        assert best == leaderboard[0]["params"]
        f1s = [entry["scores"]["f1"] for entry in leaderboard]
        assert f1s == sorted(f1s, reverse=True)

    def test_ties_keep_grid_order(self, fast_config, windows):
        """Test identical points rank in the order they were listed"""
        grid = GridSettings(method="rf", params={"n_trees": [5, 5, 5]})
        _, leaderboard = grid_search(fast_config, grid, windows)
        assert [entry["order"] for entry in leaderboard] == [0, 1, 2]

    def test_regression_ranks_by_rmse(self, fast_config, windows):
        grid = GridSettings(method="rf", task=Task.REGRESS, params={"max_depth": [1, 6]})
        _, leaderboard = grid_search(fast_config, grid, windows)
        rmses = [entry["scores"]["rmse"] for entry in leaderboard]
        assert rmses == sorted(rmses)

    def test_tcn_point(self, fast_config, windows):
        grid = GridSettings(method="tcn", params={"channels": [2]})
        best, leaderboard = grid_search(fast_config, grid, windows)
        assert best == {"channels": 2}
        assert "val_loss" in leaderboard[0]["scores"]

    def test_invalid_point(self, fast_config, windows):
        grid = GridSettings(method="rf", params={"n_trees": [0]})
        with pytest.raises(ConfigError):
            grid_search(fast_config, grid, windows)

    def test_random_search_is_seeded(self, fast_config, windows):
        """Test the same seed draws the same distinct points"""
        grid = GridSettings(method="rf", params={"n_trees": [3, 5, 7], "max_depth": [2, 3]})

        _, a = random_search(fast_config, grid, windows, n_iter=4, seed=1)
        _, b = random_search(fast_config, grid, windows, n_iter=4, seed=1)

        points = [entry["params"] for entry in a]
        assert points == [entry["params"] for entry in b]
        assert len(points) == len({tuple(sorted(p.items())) for p in points})
        assert len(points) <= 4

    def test_random_search_needs_iterations(self, fast_config, windows):
        grid = GridSettings(method="rf", params={"n_trees": [3]})
        with pytest.raises(EmptyGrid):
            random_search(fast_config, grid, windows)
