"""Dataset manifest CSV: the unit of exchange between pipeline stages.

Format: header ``path,fabric_type,label`` with label one of
``defect_free`` / ``defective``. Paths are stored relative to the manifest
file where possible and resolved against its directory on read.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

LABEL_DEFECT_FREE = "defect_free"
LABEL_DEFECTIVE = "defective"
LABELS = (LABEL_DEFECT_FREE, LABEL_DEFECTIVE)

MANIFEST_FIELDS = ("path", "fabric_type", "label")


class ManifestError(ValueError):
    """Manifest file is missing fields or carries an unknown label."""


@dataclass(frozen=True)
class ManifestRow:
    path: str
    fabric_type: str
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ManifestError(f"unknown label {self.label!r}")


def label_index(label: str) -> int:
    """Logit index convention: 0 = defect_free, 1 = defective."""
    return LABELS.index(label)


def read_manifest(path) -> list[ManifestRow]:
    """Read a manifest, resolving relative sample paths against its directory."""
    path = Path(path)
    base = path.parent
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_FIELDS:
            raise ManifestError(
                f"manifest header must be {','.join(MANIFEST_FIELDS)!r}, "
                f"got {reader.fieldnames!r}"
            )
        for record in reader:
            sample = record["path"]
            if not os.path.isabs(sample):
                sample = str(base / sample)
            rows.append(ManifestRow(sample, record["fabric_type"], record["label"]))
    return rows


def write_manifest(rows, path) -> None:
    """Write rows with sample paths relative to the manifest's directory."""
    path = Path(path)
    base = path.parent.resolve()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for row in rows:
            rel = row.path
            if os.path.isabs(rel):
                rel = os.path.relpath(Path(rel).resolve(), base)
            writer.writerow([rel, row.fabric_type, row.label])
