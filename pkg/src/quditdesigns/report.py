"""Seeded, replayable experiment records.

Every CLI run produces an :class:`ExperimentReport` (parameter map, seed,
tolerances, sample counts, result rows) that serializes to CSV and JSON,
plus a :class:`RunManifest` that can replay the run. CSV bodies contain no
timestamps and format floats with ``repr``, so identical manifests
reproduce byte-identical CSV output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import __version__

SCHEMA_VERSION = 1


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        # plain float() first: numpy scalar reprs carry a type prefix
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


@dataclass
class ExperimentReport:
    command: str
    params: dict
    seed: int | None
    columns: list[str]
    rows: list[dict]
    meta: dict = field(default_factory=dict)
    started: str = ""
    finished: str = ""
    schema: int = SCHEMA_VERSION
    version: str = __version__

    def csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_format_cell(row.get(c)) for c in self.columns))
        return "\n".join(lines) + "\n"

    def json_text(self) -> str:
        doc = {
            "schema": self.schema,
            "version": self.version,
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "started": self.started,
            "finished": self.finished,
            "columns": self.columns,
            "rows": self.rows,
            "meta": self.meta,
        }
        return json.dumps(doc, indent=2, default=_jsonable) + "\n"


def _jsonable(value):
    try:
        import numpy as np

        if isinstance(value, np.ndarray):
            return value.tolist()
        if isinstance(value, (np.floating, np.integer)):
            return value.item()
        if isinstance(value, np.bool_):
            return bool(value)
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"not JSON serializable: {type(value)}")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    """Replayable record of one CLI invocation: command, full parameter map,
    seed, artifact version and output paths."""

    command: str
    params: dict
    seed: int | None
    outputs: list[str]
    version: str = __version__
    schema: int = SCHEMA_VERSION

    def json_text(self) -> str:
        return (
            json.dumps(
                {
                    "schema": self.schema,
                    "version": self.version,
                    "command": self.command,
                    "params": self.params,
                    "seed": self.seed,
                    "outputs": self.outputs,
                },
                indent=2,
            )
            + "\n"
        )

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        doc = json.loads(text)
        return cls(
            command=doc["command"],
            params=doc["params"],
            seed=doc["seed"],
            outputs=list(doc.get("outputs", [])),
            version=doc.get("version", __version__),
            schema=doc.get("schema", SCHEMA_VERSION),
        )
