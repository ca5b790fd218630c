"""
Model Store

Versioned JSON model files for both model kinds, and a directory of them.

Document fields (in order):
    format        "event-kiwi-model"
    version       FORMAT_VERSION
    kind          "forest" | "tcn"
    feature_mask  {"kept": [...], "dropped": [[name, reason], ...], "fill_values": {...}}
  forest:
    params        ForestParams fields
    n_features    width of the normalized feature vector
    normalizer    {"mean": [...], "std": [...]}
    trees         nested nodes, {"leaf": p} or {"f": i, "t": x, "l": node, "r": node}
  tcn:
    config        TcnConfig fields
    n_inputs      channels per window row
    standardizer  {"mean": [...], "std": [...]}
    params        {name: {"shape": [...], "data": [flat row-major values]}}

Floats are written with repr precision, so a round trip is exact.
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from ..core.types import EventType, Task
from ..data.ingestion import FeatureMask
from ..errors import CorruptModelFile, IoFailure
from ..learn.features import Normalizer
from ..learn.forest import ForestModel, ForestParams, node_from_dict, node_to_dict, tree_depth
from ..learn.tcn import Standardizer, TcnConfig, TcnModel, expected_shapes

logger = logging.getLogger(__name__)

FORMAT_NAME = "event-kiwi-model"
FORMAT_VERSION = 1

Model = Union[ForestModel, TcnModel]

_MODEL_FILE = re.compile(r"^event(\d)_(rf|tcn)_(classify|regress)\.json$")


def model_kind(model: Model) -> str:
    return "forest" if isinstance(model, ForestModel) else "tcn"


def model_method(model: Model) -> str:
    return "rf" if isinstance(model, ForestModel) else "tcn"


def model_task(model: Model) -> Task:
    return model.params.task if isinstance(model, ForestModel) else model.config.task


def model_to_dict(model: Model) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": model_kind(model),
        "feature_mask": model.feature_mask.to_dict() if model.feature_mask else None,
    }
    if isinstance(model, ForestModel):
        doc["params"] = model.params.model_dump(mode="json")
        doc["n_features"] = model.n_features
        doc["normalizer"] = model.normalizer.to_dict() if model.normalizer else None
        doc["trees"] = [node_to_dict(tree) for tree in model.trees]
    else:
        doc["config"] = model.config.model_dump(mode="json")
        doc["n_inputs"] = model.n_inputs
        doc["standardizer"] = model.standardizer.to_dict()
        doc["params"] = {
            name: {"shape": list(value.shape), "data": value.ravel().tolist()}
            for name, value in model.params.items()
        }
    return doc


def _require(doc: Dict[str, Any], key: str) -> Any:
    if key not in doc:
        raise CorruptModelFile(key, f"Model file is missing '{key}'")
    return doc[key]


def _float_vectors(data: Any, field: str, length: Optional[int] = None):
    try:
        mean = np.asarray(data["mean"], dtype=np.float64)
        std = np.asarray(data["std"], dtype=np.float64)
    except (KeyError, TypeError, ValueError):
        raise CorruptModelFile(field) from None
    if mean.ndim != 1 or mean.shape != std.shape or (length is not None and len(mean) != length):
        raise CorruptModelFile(field, f"'{field}' has inconsistent lengths")
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std))) or np.any(std < 0):
        raise CorruptModelFile(field, f"'{field}' holds non-finite or negative entries")
    return mean, std


def _feature_mask(doc: Dict[str, Any]) -> Optional[FeatureMask]:
    data = _require(doc, "feature_mask")
    if data is None:
        return None
    try:
        return FeatureMask.from_dict(data)
    except (KeyError, TypeError, ValueError):
        raise CorruptModelFile("feature_mask") from None


def _forest_from_dict(doc: Dict[str, Any], mask: Optional[FeatureMask]) -> ForestModel:
    try:
        params = ForestParams.model_validate(_require(doc, "params"))
    except ValidationError as e:
        raise CorruptModelFile("params", f"Bad forest params: {e.errors()[0]['msg']}") from None
    n_features = _require(doc, "n_features")
    if not isinstance(n_features, int) or n_features < 1:
        raise CorruptModelFile("n_features")
    if mask is not None and n_features != 9 * len(mask.kept):
        raise CorruptModelFile("n_features", "n_features does not match the feature mask")
    normalizer_data = _require(doc, "normalizer")
    normalizer = None
    if normalizer_data is not None:
        mean, std = _float_vectors(normalizer_data, "normalizer", n_features)
        normalizer = Normalizer(mean=mean, std=std)
    trees_data = _require(doc, "trees")
    if not isinstance(trees_data, list) or len(trees_data) != params.n_trees:
        raise CorruptModelFile("trees", f"Expected {params.n_trees} trees")
    trees = tuple(node_from_dict(tree) for tree in trees_data)
    for tree in trees:
        if params.max_depth is not None and tree_depth(tree) > params.max_depth:
            raise CorruptModelFile("trees", "Tree deeper than max_depth")
    return ForestModel(
        params=params, trees=trees, n_features=n_features, normalizer=normalizer, feature_mask=mask
    )


def _tcn_from_dict(doc: Dict[str, Any], mask: Optional[FeatureMask]) -> TcnModel:
    try:
        config = TcnConfig.model_validate(_require(doc, "config"))
    except ValidationError as e:
        raise CorruptModelFile("config", f"Bad TCN config: {e.errors()[0]['msg']}") from None
    n_inputs = _require(doc, "n_inputs")
    if not isinstance(n_inputs, int) or n_inputs < 1:
        raise CorruptModelFile("n_inputs")
    if mask is not None and n_inputs != len(mask.kept):
        raise CorruptModelFile("n_inputs", "n_inputs does not match the feature mask")
    mean, std = _float_vectors(_require(doc, "standardizer"), "standardizer", n_inputs)

    raw = _require(doc, "params")
    shapes = expected_shapes(config, n_inputs)
    if not isinstance(raw, dict) or set(raw) != set(shapes):
        raise CorruptModelFile("params", "Parameter names do not match the architecture")
    params = {}
    for name, shape in shapes.items():
        entry = raw[name]
        try:
            declared = tuple(entry["shape"])
            value = np.asarray(entry["data"], dtype=np.float64)
        except (KeyError, TypeError, ValueError):
            raise CorruptModelFile("params", f"Parameter '{name}' is malformed") from None
        if declared != shape or value.size != int(np.prod(shape)):
            raise CorruptModelFile(
                "params", f"Parameter '{name}' has shape {declared}, expected {shape}"
            )
        if not np.all(np.isfinite(value)):
            raise CorruptModelFile("params", f"Parameter '{name}' holds non-finite values")
        params[name] = value.reshape(shape)
    return TcnModel(
        config=config,
        params=params,
        standardizer=Standardizer(mean=mean, std=std),
        n_inputs=n_inputs,
        feature_mask=mask,
    )


def model_from_dict(doc: Any) -> Model:
    if not isinstance(doc, dict):
        raise CorruptModelFile("document", "Model file is not a JSON object")
    if _require(doc, "format") != FORMAT_NAME:
        raise CorruptModelFile("format", f"Not an {FORMAT_NAME} file")
    version = _require(doc, "version")
    if version != FORMAT_VERSION:
        raise CorruptModelFile(
            "version", f"Unsupported model version {version!r}, expected {FORMAT_VERSION}"
        )
    kind = _require(doc, "kind")
    mask = _feature_mask(doc)
    if kind == "forest":
        return _forest_from_dict(doc, mask)
    if kind == "tcn":
        return _tcn_from_dict(doc, mask)
    raise CorruptModelFile("kind", f"Unknown model kind {kind!r}")


def save_model(model: Model, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(model_to_dict(model)) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"Could not write model to {path}: {e}", {"path": str(path)}) from e
    logger.info(f"Saved {model_kind(model)} model to {path}")
    return path


def load_model(path: Union[str, Path]) -> Model:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"Could not read model {path}: {e}", {"path": str(path)}) from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorruptModelFile("document", f"{path} is not valid JSON: {e}") from None
    return model_from_dict(doc)


class ModelStore:
    """Directory of models named event{e}_{method}_{task}.json."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def path_for(self, event: EventType, method: str, task: Task) -> Path:
        return self.root / f"event{EventType(event).code}_{method}_{Task(task).value}.json"

    def save(self, model: Model, event: EventType) -> Path:
        return save_model(model, self.path_for(event, model_method(model), model_task(model)))

    def load(self, event: EventType, method: str, task: Task) -> Model:
        return load_model(self.path_for(event, method, task))

    def list_models(self) -> List[Dict[str, Any]]:
        if not self.root.is_dir():
            return []
        found = []
        for path in sorted(self.root.iterdir()):
            match = _MODEL_FILE.match(path.name)
            if match:
                found.append(
                    {
                        "event": int(match.group(1)),
                        "method": match.group(2),
                        "task": match.group(3),
                        "path": str(path),
                    }
                )
        return found
