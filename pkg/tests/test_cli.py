"""
Tests for the event-kiwi command line.
"""

import json

import pytest

from event_kiwi.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, exit_code, main, parse_args
from event_kiwi.errors import UsageError


class TestParseArgs:
    """Tests for parse_args"""

    def test_common_flags(self):
        cli = parse_args(
            [
                "evaluate",
                "--event",
                "3",
                "--seed",
                "7",
                "--set",
                "forest.n_trees=5",
                "--set",
                "tcn.epochs=2",
                "--out",
                "runs",
                "-vv",
            ]
        )

        assert cli.subcommand == "evaluate"
        assert cli.params == {"event": 3}
        assert cli.overrides == ["forest.n_trees=5", "tcn.epochs=2"]
        assert cli.verbosity == 2
        assert cli.tool_params() == {
            "event": 3,
            "config": None,
            "set": ["forest.n_trees=5", "tcn.epochs=2"],
            "seed": 7,
            "out": "runs",
        }

    def test_report_paths(self):
        cli = parse_args(["report", "a/report.csv", "b/report.csv"])
        assert cli.params == {"paths": ["a/report.csv", "b/report.csv"]}

    def test_predict_flags(self):
        cli = parse_args(["predict", "--model", "m.json", "--input", "ep.csv"])
        assert cli.params == {"model": "m.json", "input": "ep.csv"}

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["evaluate", "--bogus"],
            ["train", "--event", "2", "--method", "svm", "--task", "classify"],
            ["train", "--method", "rf", "--task", "classify"],
            ["dance"],
        ],
    )
    def test_usage_errors(self, argv):
        with pytest.raises(UsageError):
            parse_args(argv)


class TestExitCode:
    """Tests for exit_code"""

    @pytest.mark.parametrize(
        "result,code",
        [
            ('{"status": "success"}', EXIT_OK),
            ('{"topic": "help"}', EXIT_OK),
            ('{"status": "partial_success"}', EXIT_FAILED),
            ('{"status": "error"}', EXIT_FAILED),
            ("not json", EXIT_FAILED),
            ("[1, 2]", EXIT_FAILED),
        ],
    )
    def test_codes(self, result, code):
        assert exit_code(result) == code


class TestMain:
    """Tests for main"""

    def test_usage_error_prints_json(self, capsys):
        assert main(["evaluate", "--bogus"]) == EXIT_USAGE

        captured = capsys.readouterr()
        payload = json.loads(captured.out)
        assert payload["status"] == "error"
        assert payload["error"]["code"] == "USAGE_ERROR"
        assert "usage:" in captured.err

    def test_help(self, capsys):
        assert main(["help", "predict"]) == EXIT_OK
        assert "topic" in json.loads(capsys.readouterr().out)

    def test_failure_exit(self, capsys, tmp_path):
        """Test an error envelope maps to exit code 1"""
        code = main(["report", str(tmp_path / "missing.csv")])

        assert code == EXIT_FAILED
        payload = json.loads(capsys.readouterr().out)
        assert payload["error"]["code"] == "IO_FAILURE"

    @pytest.mark.integration
    def test_synth(self, capsys, tmp_path):
        """Test --seed sets the synth master seed and files land under --out"""
        code = main(
            [
                "synth",
                "--seed",
                "1",
                "--out",
                str(tmp_path),
                "--set",
                "synth.episodes=1",
                "--set",
                "synth.normals=1",
            ]
        )

        payload = json.loads(capsys.readouterr().out)
        assert code == EXIT_OK
        assert payload["master_seed"] == 1
        assert payload["episodes"] == {"event": 1, "normal": 1}
        assert len(list((tmp_path / "2").glob("SYNTH_*.csv"))) == 1
        assert len(list((tmp_path / "0").glob("*.csv"))) == 1
