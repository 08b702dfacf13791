"""Dataset directory format: manifest.json plus one CSV per impact.

Manifest (format_version 1)::

    {
      "format_version": 1,
      "impacts": [
        {"impact_id": "...", "dataset_tag": "...", "injury_label": true|false|null,
         "dt_seconds": 0.001, "n_elements": 8, "n_steps": 101,
         "mode": "F" | "ED", "data_path": "<impact_id>.csv"}
      ]
    }

Data CSV, mode F (kinematic)::

    element_id,step,f11,f12,f13,f21,f22,f23,f31,f32,f33

Data CSV, mode ED (FE export)::

    element_id,step,e11,e22,e33,e12,e13,e23,d11,d22,d33,d12,d13,d23

Rows are grouped per element (ascending element_id) with steps 0..n_steps-1
in order.  Floats are serialized with the shortest representation that
round-trips exactly (<= 17 significant digits), so write -> read is the
identity and rewriting unchanged records reproduces identical bytes.
"""

import csv
import json
import re
from pathlib import Path

import numpy as np

from .aggregate import ImpactRecord
from .errors import DatasetFormatError, InvalidTensor, RowCountMismatch, VersionMismatch
from .metrics import ElementHistory, HistoryMode

FORMAT_VERSION = 1

_F_COLUMNS = ["f11", "f12", "f13", "f21", "f22", "f23", "f31", "f32", "f33"]
_ED_COLUMNS = ["e11", "e22", "e33", "e12", "e13", "e23",
               "d11", "d22", "d33", "d12", "d13", "d23"]

_ID_PATTERN = re.compile(r"^[A-Za-z0-9._-]+$")


def _header_for(mode: HistoryMode) -> list[str]:
    cols = _F_COLUMNS if mode is HistoryMode.KINEMATIC else _ED_COLUMNS
    return ["element_id", "step"] + cols


def write_dataset(records, directory) -> Path:
    """Write records as a dataset directory; returns the manifest path.

    Output is deterministic: impacts sorted by id, elements by element_id,
    floats in shortest round-trip form.
    """
    records = sorted(records, key=lambda r: r.impact_id)
    ids = [r.impact_id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate impact ids")
    for impact_id in ids:
        if not _ID_PATTERN.match(impact_id):
            raise ValueError(f"impact id {impact_id!r} is not filesystem-safe")

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    entries = []
    for record in records:
        elements = sorted(record.elements, key=lambda el: el.element_id)
        modes = {el.mode for el in elements}
        if len(modes) != 1:
            raise ValueError(f"impact {record.impact_id!r}: elements mix history modes")
        mode = modes.pop()
        n_steps = {el.n_steps for el in elements}
        if len(n_steps) != 1:
            raise ValueError(f"impact {record.impact_id!r}: elements disagree on n_steps")
        n_steps = n_steps.pop()

        data_path = f"{record.impact_id}.csv"
        with open(directory / data_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_header_for(mode))
            for el in elements:
                rows = (
                    el.f.reshape(n_steps, 9)
                    if mode is HistoryMode.KINEMATIC
                    else np.hstack([el.e, el.d])
                )
                for step in range(n_steps):
                    writer.writerow(
                        [el.element_id, step] + [repr(float(x)) for x in rows[step]]
                    )

        entries.append(
            {
                "impact_id": record.impact_id,
                "dataset_tag": record.dataset_tag,
                "injury_label": record.injury_label,
                "dt_seconds": record.dt,
                "n_elements": len(elements),
                "n_steps": n_steps,
                "mode": mode.value,
                "data_path": data_path,
            }
        )

    manifest_path = directory / "manifest.json"
    manifest = {"format_version": FORMAT_VERSION, "impacts": entries}
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest_path


def _manifest_entry(entry, index, path):
    required = ("impact_id", "dataset_tag", "dt_seconds", "n_elements", "n_steps",
                "mode", "data_path")
    for key in required:
        if key not in entry:
            raise DatasetFormatError(f"{path}: impact #{index}: missing key {key!r}")
    if entry["mode"] not in ("F", "ED"):
        raise DatasetFormatError(
            f"{path}: impact {entry['impact_id']!r}: unknown mode {entry['mode']!r}"
        )
    if not entry["dt_seconds"] > 0:
        raise DatasetFormatError(f"{path}: impact {entry['impact_id']!r}: dt_seconds must be > 0")
    if entry["n_steps"] < 5:
        raise DatasetFormatError(
            f"{path}: impact {entry['impact_id']!r}: n_steps = {entry['n_steps']} < 5 "
            "(five-point stencil needs at least 5 samples)"
        )
    if entry["n_elements"] < 1:
        raise DatasetFormatError(f"{path}: impact {entry['impact_id']!r}: n_elements must be >= 1")
    label = entry.get("injury_label")
    if label is not None and not isinstance(label, bool):
        raise DatasetFormatError(
            f"{path}: impact {entry['impact_id']!r}: injury_label must be true/false/null"
        )


def _read_data_file(path, entry):
    mode = HistoryMode.KINEMATIC if entry["mode"] == "F" else HistoryMode.FE_EXPORT
    header = _header_for(mode)
    n_values = len(header) - 2
    n_elements, n_steps = entry["n_elements"], entry["n_steps"]
    impact_id = entry["impact_id"]

    if not path.exists():
        raise DatasetFormatError(f"{path}: data file for impact {impact_id!r} not found")

    data = np.empty((n_elements * n_steps, n_values))
    element_ids = np.empty(n_elements * n_steps, dtype=int)
    count = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}:1: empty data file") from None
        if first != header:
            raise DatasetFormatError(f"{path}:1: bad header for mode {entry['mode']}: {first}")
        for lineno, row in enumerate(reader, start=2):
            if count >= n_elements * n_steps:
                raise RowCountMismatch(
                    f"impact {impact_id!r}: more than the expected "
                    f"{n_elements * n_steps} data rows ({path})"
                )
            if len(row) != len(header):
                raise DatasetFormatError(
                    f"{path}:{lineno}: expected {len(header)} columns, found {len(row)}"
                )
            try:
                element_ids[count] = int(row[0])
                step = int(row[1])
                data[count] = [float(tok) for tok in row[2:]]
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc}") from None
            if step != count % n_steps:
                raise DatasetFormatError(
                    f"{path}:{lineno}: expected step {count % n_steps}, found {step}"
                )
            if not np.isfinite(data[count]).all():
                raise DatasetFormatError(f"{path}:{lineno}: non-finite value")
            count += 1

    if count != n_elements * n_steps:
        raise RowCountMismatch(
            f"impact {impact_id!r}: expected {n_elements * n_steps} data rows, "
            f"found {count} ({path})"
        )

    elements = []
    seen = set()
    for e in range(n_elements):
        block = slice(e * n_steps, (e + 1) * n_steps)
        ids = set(element_ids[block])
        if len(ids) != 1:
            raise DatasetFormatError(
                f"{path}: rows {e * n_steps + 2}..{(e + 1) * n_steps + 1}: "
                "element_id changes inside a step block"
            )
        element_id = int(ids.pop())
        if element_id in seen:
            raise DatasetFormatError(f"{path}: duplicate element_id {element_id}")
        seen.add(element_id)
        values = data[block]
        try:
            if mode is HistoryMode.KINEMATIC:
                history = ElementHistory(
                    element_id=element_id,
                    dt=entry["dt_seconds"],
                    mode=mode,
                    f=values.reshape(n_steps, 3, 3),
                )
            else:
                history = ElementHistory(
                    element_id=element_id,
                    dt=entry["dt_seconds"],
                    mode=mode,
                    e=values[:, :6].copy(),
                    d=values[:, 6:].copy(),
                )
        except (ValueError, InvalidTensor) as exc:
            raise DatasetFormatError(f"{path}: impact {impact_id!r}: {exc}") from None
        elements.append(history)
    return elements


def read_dataset(manifest_path) -> list[ImpactRecord]:
    """Load a dataset directory; inverse of :func:`write_dataset`."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DatasetFormatError(f"{manifest_path}: manifest not found")
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{manifest_path}: invalid JSON: {exc}") from None

    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"{manifest_path}: format_version {version!r}, supported: {FORMAT_VERSION}"
        )
    entries = manifest.get("impacts")
    if not isinstance(entries, list):
        raise DatasetFormatError(f"{manifest_path}: missing 'impacts' list")

    seen = set()
    records = []
    for index, entry in enumerate(entries):
        _manifest_entry(entry, index, manifest_path)
        if entry["impact_id"] in seen:
            raise DatasetFormatError(
                f"{manifest_path}: duplicate impact_id {entry['impact_id']!r}"
            )
        seen.add(entry["impact_id"])
        elements = _read_data_file(manifest_path.parent / entry["data_path"], entry)
        records.append(
            ImpactRecord(
                impact_id=entry["impact_id"],
                dataset_tag=entry["dataset_tag"],
                elements=elements,
                injury_label=entry.get("injury_label"),
            )
        )
    return sorted(records, key=lambda r: r.impact_id)
