"""
Tests for preflight utilities.
"""

from event_kiwi.utils.shared.preflight import (
    check_paths,
    check_split,
    estimate_time,
    run_preflight,
    validate_inputs,
)


class TestCheckPaths:
    """Tests for check_paths"""

    def test_present(self, tmp_path):
        assert check_paths({"data_root": str(tmp_path)}) == {"status": "pass"}

    def test_missing_and_none(self, tmp_path):
        result = check_paths({"data_root": None, "out": str(tmp_path / "nope")})

        assert result["status"] == "fail"
        assert result["missing"] == ["data_root=None", f"out={tmp_path / 'nope'}"]


class TestValidateInputs:
    """Tests for validate_inputs"""

    RULES = [
        {"field": "event", "required": True, "type": "integer", "min": 1, "max": 8},
        {"field": "method", "enum": ["rf", "tcn"]},
        {"field": "set", "pattern": r"^[\w.]+=.+$"},
    ]

    def test_pass(self):
        inputs = {"event": 2, "method": "rf", "set": "forest.n_trees=5"}
        assert validate_inputs(inputs, self.RULES) == {"status": "pass"}

    def test_errors(self):
        """Test each rule kind reports its own message"""
        result = validate_inputs({"event": 9, "method": "svm", "set": "oops"}, self.RULES)

        assert result["status"] == "fail"
        assert result["errors"] == [
            "'event' must be <= 8, got 9",
            "'method' must be one of ['rf', 'tcn'], got 'svm'",
            r"'set' doesn't match required pattern: ^[\w.]+=.+$",
        ]

    def test_required_and_type(self):
        assert validate_inputs({}, self.RULES)["errors"] == ["'event' is required but missing"]
        errors = validate_inputs({"event": "2"}, self.RULES)["errors"]
        assert errors == ["'event' must be integer, got str"]


class TestCheckSplit:
    """Tests for check_split"""

    def test_valid(self):
        assert check_split("tcn_split", (0.7, 0.1, 0.2)) == {"status": "pass"}

    def test_invalid(self):
        result = check_split("rf_split", (0.9, 0.0))
        assert len(result["errors"]) == 2


class TestEstimateTime:
    """Tests for estimate_time"""

    def test_minutes(self):
        result = estimate_time("windows * n_trees * 0.0005", {"windows": 2000, "n_trees": 175})
        assert result == {"estimated_seconds": 175, "human_readable": "2 minutes 55 seconds"}

    def test_hours(self):
        assert estimate_time("x", {"x": 7200})["human_readable"] == "2 hours"

    def test_bad_formula(self):
        assert "error" in estimate_time("missing_name * 2", {})


class TestRunPreflight:
    """Tests for run_preflight"""

    def test_all_pass_with_warning(self, tmp_path):
        result = run_preflight(
            inputs={"event": 2, "windows": 1000},
            required_paths={"data_root": str(tmp_path)},
            validation_rules=[{"field": "event", "type": "integer"}],
            splits={"rf_split": (0.8, 0.2)},
            time_formula="windows * 1.0",
            time_warn_threshold=600,
        )

        assert result["pass"]
        assert set(result["checks"]) == {"paths", "inputs", "splits", "time"}
        assert result["warnings"] == [
            "Estimated runtime 16 minutes 40 seconds exceeds 600 seconds"
        ]

    def test_blockers(self):
        """Test missing paths, bad inputs and bad splits all block"""
        result = run_preflight(
            inputs={"event": 0},
            required_paths={"data_root": None},
            validation_rules=[{"field": "event", "min": 1}],
            splits={"rf_split": (0.5, 0.2)},
        )

        assert not result["pass"]
        assert len(result["blockers"]) == 3
        assert result["blockers"][0] == "Missing paths: ['data_root=None']"
