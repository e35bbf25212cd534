"""CSV persistence for extracted per-image feature vectors.

Layout: one row per image, key columns (lesion_id, role, date) followed by
tag-free feature columns (``original-shape-Volume`` ...). Tags are re-attached
from the role on load, so a single dense header serves MR and CT rows alike.
Lines starting with ``#`` carry the embedded run configuration and are skipped
on read. Floats round-trip exactly via ``repr``.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .cohort import strip_image_tag
from .errors import DataError
from .pipeline import ROLE_TAGS

KEY_COLUMNS = ("lesion_id", "role", "date")


def write_features_csv(path: str | Path, store: dict, job_keys: list, config_comment: str) -> Path:
    """Write the store in the given key order (deterministic bytes)."""
    path = Path(path)
    suffix_names: list[str] | None = None
    lines = [f"# {config_comment}"]
    header_written = False
    for key in job_keys:
        fv = store.get(key)
        if fv is None:
            continue
        row = {strip_image_tag(n): v for n, v in fv.items()}
        if suffix_names is None:
            suffix_names = list(row)
            lines.append(",".join(KEY_COLUMNS + tuple(suffix_names)))
            header_written = True
        elif list(row) != suffix_names:
            raise DataError(f"inconsistent feature columns for {key}")
        lines.append(",".join(list(key) + [repr(row[n]) for n in suffix_names]))
    if not header_written:
        lines.append(",".join(KEY_COLUMNS))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_features_csv(path: str | Path) -> dict:
    """Load a feature CSV back into a tagged feature store."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"feature CSV not found: {path}")
    store: dict = {}
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise DataError(f"feature CSV {path} is empty")
    header = rows[0]
    if tuple(header[:3]) != KEY_COLUMNS:
        raise DataError(f"feature CSV {path} must start with columns {KEY_COLUMNS}")
    suffix_names = header[3:]
    for row in rows[1:]:
        if len(row) != len(header):
            raise DataError(f"feature CSV {path}: row width {len(row)} != header {len(header)}")
        lesion_id, role, date = row[:3]
        if role not in ROLE_TAGS:
            raise DataError(f"feature CSV {path}: unknown role {role!r}")
        tag = ROLE_TAGS[role]
        try:
            fv = {f"{tag}-{n}": float(v) for n, v in zip(suffix_names, row[3:])}
        except ValueError as exc:
            raise DataError(f"feature CSV {path}: bad value in row {row[:3]} ({exc})") from exc
        store[(lesion_id, role, date)] = fv
    return store
