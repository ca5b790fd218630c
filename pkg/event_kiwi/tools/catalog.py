"""Catalog tool: scan a data root and summarize it."""

import logging
from typing import Any, Dict

from ..data.ingestion import build_catalog, dataset_stats
from ..errors import MissingRoot
from .base import BaseTool, config_from_params

logger = logging.getLogger(__name__)


class CatalogTool(BaseTool):
    """Files per event folder plus minutes per event and source."""

    name = "catalog"

    def run(self, params: Dict[str, Any]) -> Dict[str, Any]:
        config = config_from_params(params)
        root = params.get("data_root") or config.experiment.data_root
        if not root:
            raise MissingRoot(
                "No data root: pass --data-root, set experiment.data_root or EVENT_KIWI_DATA_ROOT"
            )
        catalog = build_catalog(root, n_jobs=config.forest.n_jobs)

        files: Dict[str, int] = {}
        for entry in catalog.entries:
            key = "normal" if entry.event is None else f"event{entry.event.code}"
            files[key] = files.get(key, 0) + 1

        return {
            "data_root": str(root),
            "files": files,
            "minutes": dataset_stats(catalog),
            "warnings": list(catalog.warnings),
        }
