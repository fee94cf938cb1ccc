"""ETH-UCY-format ingestion, external predictions, and run artifact output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyDatasetError, IncompletePredictionsError,
                     InvalidInputError, ParseError)
from .predictors import LookupPredictor
from .validation import check_trajectory


@dataclass
class TrajectorySample:
    """One windowed trajectory: observed past and future label, in meters."""

    past: np.ndarray
    future: np.ndarray
    agent_id: int = 0
    origin_frame: int = 0

    def __post_init__(self):
        self.past = check_trajectory(self.past, "past")
        self.future = check_trajectory(self.future, "future")
        self.agent_id = int(self.agent_id)
        self.origin_frame = int(self.origin_frame)


@dataclass
class RunManifest:
    """Provenance block emitted with every report."""

    config_hash: str
    seed: int
    dataset_id: str
    created_at: str
    artifacts: list = field(default_factory=list)


def load_ethucy(path, t_obs: int = 8, t_pred: int = 12,
                stride: int | None = None) -> list[TrajectorySample]:
    """Sliding windows of length t_obs + t_pred per agent from rows
    ``frame_id agent_id x y`` (whitespace separated).

    The default stride equals t_pred so test futures do not overlap;
    overlapping windows weaken the exchangeability assumption and are
    opt-in via an explicit stride. Agents with too few frames are skipped.
    """
    if t_obs < 1 or t_pred < 1:
        raise InvalidInputError("window lengths must be >= 1")
    stride = int(t_pred) if stride is None else int(stride)
    if stride < 1:
        raise InvalidInputError("stride must be >= 1")
    total = int(t_obs) + int(t_pred)

    per_agent: dict[int, list[tuple[float, float, float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            fields = text.split()
            if len(fields) != 4:
                raise ParseError(path, line_no, f"expected 4 columns, got {len(fields)}")
            try:
                frame, agent, x, y = (float(f) for f in fields)
            except ValueError:
                raise ParseError(path, line_no, f"non-numeric field in row {text!r}") from None
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ParseError(path, line_no, "non-finite coordinate")
            per_agent.setdefault(int(agent), []).append((frame, x, y))

    samples = []
    for agent_id in sorted(per_agent):
        rows = sorted(per_agent[agent_id], key=lambda r: r[0])
        coords = np.array([(x, y) for _, x, y in rows])
        frames = [int(f) for f, _, _ in rows]
        for start in range(0, len(rows) - total + 1, stride):
            window = coords[start:start + total]
            samples.append(TrajectorySample(
                past=window[:t_obs], future=window[t_obs:],
                agent_id=agent_id, origin_frame=frames[start]))
    if not samples:
        raise EmptyDatasetError(
            f"no windows of length {total} extracted from {path}")
    return samples


def export_ethucy(samples, path) -> None:
    """Write samples in the loader's text format, one synthetic agent per
    sample (frames 0..T-1, coordinates at 1e-6 text precision)."""
    lines = []
    for idx, sample in enumerate(samples):
        window = np.vstack([sample.past, sample.future])
        for frame, (x, y) in enumerate(window):
            lines.append(f"{frame} {idx} {x:.6f} {y:.6f}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def load_predictions(path, horizon: int | None = None) -> LookupPredictor:
    """Predictions CSV ``sample_index,t,x,y`` wrapped as a lookup predictor.

    Every sample index from 0 to the maximum and every horizon step must be
    present exactly once.
    """
    cells: dict[tuple[int, int], tuple[float, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or not "".join(row).strip():
                continue
            if line_no == 1 and not _is_numeric_row(row):
                continue  # optional header
            if len(row) != 4:
                raise ParseError(path, line_no, f"expected 4 columns, got {len(row)}")
            try:
                idx, t = int(float(row[0])), int(float(row[1]))
                x, y = float(row[2]), float(row[3])
            except ValueError:
                raise ParseError(path, line_no, f"non-numeric field in row {row!r}") from None
            if (idx, t) in cells:
                raise ParseError(path, line_no, f"duplicate cell for sample {idx}, step {t}")
            cells[(idx, t)] = (x, y)
    if not cells:
        raise EmptyDatasetError(f"no prediction rows found in {path}")

    n = max(i for i, _ in cells) + 1
    h = int(horizon) if horizon is not None else max(t for _, t in cells) + 1
    table = {}
    for i in range(n):
        steps = np.empty((h, 2))
        for t in range(h):
            if (i, t) not in cells:
                raise IncompletePredictionsError(
                    f"{path}: missing prediction for sample {i}, step {t}")
            steps[t] = cells[(i, t)]
        table[i] = steps
    return LookupPredictor(table, h)


def _is_numeric_row(row) -> bool:
    try:
        [float(f) for f in row]
        return True
    except ValueError:
        return False


def _atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, fieldnames, rows) -> None:
    """Atomic CSV write with a fixed column order."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    _atomic_write_text(path, buf.getvalue())


def write_json(path, payload) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def write_scores_csv(scores, path) -> None:
    """Export a score set as ``index,score,provenance`` rows."""
    write_csv(path, ["index", "score", "provenance"],
              [{"index": i, "score": float(v), "provenance": scores.provenance}
               for i, v in enumerate(scores.values)])


def config_hash(mapping: dict) -> str:
    """Stable digest of a configuration mapping."""
    canon = json.dumps(mapping, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def write_report(manifest: RunManifest, records, out_dir, name: str = "results",
                 fieldnames=None) -> tuple[str, str]:
    """Emit ``<name>.json`` (manifest + records) and ``<name>.csv`` atomically.

    An empty record list still produces a valid header-only CSV when
    fieldnames are given. Returns (json_path, csv_path).
    """
    records = list(records)
    if fieldnames is None:
        if not records:
            raise InvalidInputError("need explicit fieldnames to write an empty report")
        fieldnames = list(records[0].keys())
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{name}.csv")
    json_path = os.path.join(out_dir, f"{name}.json")
    for artifact in (csv_path, json_path):
        if artifact not in manifest.artifacts:
            manifest.artifacts.append(artifact)
    write_csv(csv_path, fieldnames, records)
    write_json(json_path, {"manifest": vars(manifest), "records": records})
    return json_path, csv_path
