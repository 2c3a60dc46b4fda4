"""
Versioned JSON documents on disk. Every loader validates against its schema; nothing here
mutates an input file.
"""

from pathlib import Path
from typing import TypeVar

from loguru import logger
from pydantic import BaseModel

from vvfx.models import (
    FitConfig,
    McConfig,
    OptionSpec,
    ParamsFile,
    QuotesFile,
    SnapshotFile,
    SweepSpec,
    VVParams,
)

M = TypeVar("M", bound=BaseModel)


def _load(path: str | Path, model: type[M]) -> M:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path} does not exist")
    doc = model.model_validate_json(path.read_text(encoding="utf-8"))
    logger.debug("Loaded {} from {}", model.__name__, path)
    return doc


def _save(path: str | Path, doc: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(doc.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("Wrote {}", path)
    return path


def load_snapshot(path: str | Path) -> SnapshotFile:
    return _load(path, SnapshotFile)


def load_instrument(path: str | Path) -> OptionSpec:
    return _load(path, OptionSpec)


def load_quotes(path: str | Path) -> QuotesFile:
    return _load(path, QuotesFile)


def load_sweep(path: str | Path) -> SweepSpec:
    return _load(path, SweepSpec)


def load_fit_config(path: str | Path) -> FitConfig:
    return _load(path, FitConfig)


def load_mc_config(path: str | Path) -> McConfig:
    return _load(path, McConfig)


def load_params(path: str | Path) -> VVParams:
    return _load(path, ParamsFile).params


def save_params(path: str | Path, params: VVParams, provenance: dict | None = None) -> Path:
    return _save(path, ParamsFile(params=params, provenance=provenance or {}))


def save_snapshot(path: str | Path, snapshot: SnapshotFile) -> Path:
    return _save(path, snapshot)


def save_quotes(path: str | Path, quotes: QuotesFile) -> Path:
    return _save(path, quotes)
