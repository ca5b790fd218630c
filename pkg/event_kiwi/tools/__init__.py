"""Event Kiwi CLI tools."""

from .catalog import CatalogTool
from .evaluate import EvaluateTool
from .help import HelpTool
from .predict import PredictTool, predict_stream
from .report import ReportTool
from .synth import SynthTool
from .train import TrainTool

__all__ = [
    "CatalogTool",
    "EvaluateTool",
    "HelpTool",
    "PredictTool",
    "ReportTool",
    "SynthTool",
    "TrainTool",
    "predict_stream",
]
