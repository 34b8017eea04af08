import os
import platform
from datetime import datetime, timezone
from typing import Dict, Iterable, List, Optional, Sequence, Union

import mpmath
import numpy as np
import orjson
import pandas as pd
import pydantic
import scipy
from pydantic import BaseModel

from models.pydantic_classes import RunManifest
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

_JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY
_FLOAT_FORMAT = "%.17g"

Payload = Union[BaseModel, dict, list]


def dumps(payload: Payload) -> bytes:
    """
    Serialize a report with sorted keys and two-space indentation.

    Pydantic models are dumped in JSON mode first, so complex fields become
    {"re": ..., "im": ...} objects.
    """
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    elif isinstance(payload, list):
        payload = [item.model_dump(mode="json") if isinstance(item, BaseModel) else item for item in payload]
    return orjson.dumps(payload, option=_JSON_OPTIONS)


def library_versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
    }


class ArtifactWriter:
    """
    Writes the CSV, JSON and gnuplot artifacts of one subcommand run plus its manifest.

    Data payloads never carry timestamps; wall time and start time go to the
    manifest only, so reruns with one seed give byte-identical data files.
    """

    def __init__(self, output_dir: str, subcommand: str, fmt: str = "both", emit_plots: str = "none"):
        self.directory = os.path.join(output_dir, subcommand)
        self.subcommand = subcommand
        self.fmt = fmt
        self.emit_plots = emit_plots
        self.artifacts: List[str] = []
        self.started = datetime.now(timezone.utc)
        os.makedirs(self.directory, exist_ok=True)

    def _path(self, name: str) -> str:
        path = os.path.join(self.directory, name)
        self.artifacts.append(path)
        return path

    @property
    def wants_json(self) -> bool:
        return self.fmt in ("json", "both")

    @property
    def wants_csv(self) -> bool:
        return self.fmt in ("csv", "both")

    def write_json(self, name: str, payload: Payload) -> Optional[str]:
        """
        Write payload as name.json.

        Args:
            name (str): File stem.
            payload (BaseModel | dict | list): Report to serialize.

        Returns:
            str: Path written, or None when the format excludes JSON.
        """
        if not self.wants_json:
            return None
        path = self._path(f"{name}.json")
        with open(path, "wb") as handle:
            handle.write(dumps(payload))
        logger.info(f"Wrote {path}")
        return path

    def write_csv(self, name: str, rows: Union[pd.DataFrame, Sequence[dict]],
                  columns: Optional[Iterable[str]] = None) -> Optional[str]:
        """
        Write rows as name.csv with full float precision.

        Args:
            name (str): File stem.
            rows (DataFrame | Sequence[dict]): Table rows.
            columns (Iterable[str], optional): Column order.

        Returns:
            str: Path written, or None when the format excludes CSV.
        """
        if not self.wants_csv:
            return None
        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
        path = self._path(f"{name}.csv")
        frame.to_csv(path, index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")
        logger.info(f"Wrote {path} ({len(frame)} rows)")
        return path

    def write_gnuplot(self, name: str, frame: pd.DataFrame, x: str, ys: Sequence[str], title: str = "",
                      logscale: str = "") -> Optional[List[str]]:
        """
        Write a whitespace-separated data file and a gnuplot script that plots it.

        Args:
            name (str): File stem of both files.
            frame (DataFrame): Data with columns x and ys.
            x (str): Abscissa column.
            ys (Sequence[str]): Ordinate columns, one curve each.
            title (str): Plot title.
            logscale (str): Axes for "set logscale", e.g. "xy".

        Returns:
            List[str]: Paths of the data file and script, or None when plots are off.
        """
        if self.emit_plots != "gnuplot":
            return None
        columns = [x] + list(ys)
        data_path = self._path(f"{name}.dat")
        frame[columns].to_csv(data_path, sep=" ", index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")
        lines = [f'set title "{title}"', f'set xlabel "{x}"', "set key left top"]
        if logscale:
            lines.append(f"set logscale {logscale}")
        curves = [f"'{os.path.basename(data_path)}' using 1:{i + 2} skip 1 with linespoints title '{y}'"
                  for i, y in enumerate(ys)]
        lines.append("plot " + ", \\\n     ".join(curves))
        script_path = self._path(f"{name}.gp")
        with open(script_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("\n".join(lines) + "\n")
        return [data_path, script_path]

    def write_manifest(self, inputs: dict, seed: int) -> RunManifest:
        """Record inputs, seed, library versions, wall time and the artifact list as manifest.json."""
        finished = datetime.now(timezone.utc)
        manifest = RunManifest(subcommand=self.subcommand, inputs=inputs, seed=seed, versions=library_versions(),
                               wall_time_seconds=(finished - self.started).total_seconds(),
                               started_at=self.started.isoformat(), artifacts=list(self.artifacts))
        path = os.path.join(self.directory, "manifest.json")
        with open(path, "wb") as handle:
            handle.write(dumps(manifest))
        return manifest
