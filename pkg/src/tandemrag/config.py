"""Service configuration: JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from pathlib import Path

from pydantic import BaseModel

from .errors import InvalidError

ENV_PREFIX = "TANDEMRAG_"


class ServiceConfig(BaseModel):
    host: str = "127.0.0.1"
    port: int = 8000
    data_dir: str = "data"
    k: int = 5
    embedder: dict = {"mode": "reference"}
    llm: dict = {"mode": "mock"}
    adapters: dict = {}
    rasterizer: str | None = None

    @classmethod
    def load(cls, path: Path | str | None = None) -> "ServiceConfig":
        """Read the config file (when given), then apply env overrides.

        Scalar fields accept TANDEMRAG_<FIELD>; adapter endpoints are handled
        by the adapter layer's own TANDEMRAG_ADAPTER_* variables.
        """
        data: dict = {}
        if path is not None:
            raw = Path(path).read_text(encoding="utf-8")
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InvalidError(f"config file is not valid JSON: {exc}",
                                   detail={"path": str(path)}) from exc
        for field in ("host", "data_dir", "rasterizer"):
            value = os.environ.get(ENV_PREFIX + field.upper())
            if value is not None:
                data[field] = value
        for field in ("port", "k"):
            value = os.environ.get(ENV_PREFIX + field.upper())
            if value is not None:
                try:
                    data[field] = int(value)
                except ValueError as exc:
                    raise InvalidError(
                        f"{ENV_PREFIX}{field.upper()} must be an integer") from exc
        for field in ("embedder", "llm"):
            mode = os.environ.get(ENV_PREFIX + field.upper() + "_MODE")
            if mode is not None:
                data.setdefault(field, {})
                data[field]["mode"] = mode
        return cls(**data)
