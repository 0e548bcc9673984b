"""Dataset manifests: sample records, loading, validation, and summaries.

Manifest file format (JSON lines, one object per line):

    {"manifest_version": 1, "root_dir": "."}
    {"sample_id": "s1", "image_path": "images/s1.pgm", "label": "present", "condition": "hot"}
    ...

The header line is mandatory. `root_dir` is resolved against the manifest
file's own directory so manifests stay relocatable. Labels and conditions
match case-insensitively and are stored lowercase.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError

MANIFEST_VERSION = 1


class ClassLabel(enum.Enum):
    PRESENT = "present"
    ABSENT = "absent"

    def __str__(self) -> str:
        return self.value


class Condition(enum.Enum):
    HOT = "hot"
    ROOM = "room"

    def __str__(self) -> str:
        return self.value


def parse_label(text: str) -> ClassLabel:
    try:
        return ClassLabel(text.strip().lower())
    except ValueError:
        raise InputError(f"unknown label {text!r} (expected 'present' or 'absent')")


def parse_condition(text: str) -> Condition:
    try:
        return Condition(text.strip().lower())
    except ValueError:
        raise InputError(f"unknown condition {text!r} (expected 'hot' or 'room')")


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    image_path: str
    label: ClassLabel
    condition: Condition

    def __post_init__(self) -> None:
        if not self.sample_id:
            raise InputError("sample_id must be non-empty")
        if not self.image_path:
            raise InputError(f"record {self.sample_id!r}: image_path must be non-empty")


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[SampleRecord, ...]
    root_dir: Path

    def __post_init__(self) -> None:
        seen_ids: set[str] = set()
        seen_paths: set[str] = set()
        for rec in self.records:
            if rec.sample_id in seen_ids:
                raise InputError(f"duplicate sample_id {rec.sample_id!r}")
            if rec.image_path in seen_paths:
                raise InputError(
                    f"duplicate image_path {rec.image_path!r} (record {rec.sample_id!r})"
                )
            seen_ids.add(rec.sample_id)
            seen_paths.add(rec.image_path)

    def __len__(self) -> int:
        return len(self.records)

    def resolve_path(self, rec: SampleRecord) -> Path:
        return self.root_dir / rec.image_path

    def record_by_id(self, sample_id: str) -> SampleRecord:
        for rec in self.records:
            if rec.sample_id == sample_id:
                return rec
        raise InputError(f"unknown sample_id {sample_id!r}")


_REQUIRED_FIELDS = ("sample_id", "image_path", "label", "condition")


def load_manifest(path: str | Path, root: str | Path | None = None) -> DatasetManifest:
    """Load and validate a manifest file.

    `root` overrides the header's root_dir; relative roots are resolved
    against the manifest file's directory.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"manifest file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise InputError(f"{path}: empty manifest")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line 1: header parse failure: {exc}")
    if not isinstance(header, dict) or header.get("manifest_version") != MANIFEST_VERSION:
        raise InputError(
            f"{path}: line 1: expected header with manifest_version {MANIFEST_VERSION}"
        )

    if root is not None:
        root_dir = Path(root)
    else:
        declared = header.get("root_dir", ".")
        root_dir = path.parent / declared

    records: list[SampleRecord] = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: line {lineno}: parse failure: {exc}")
        if not isinstance(obj, dict):
            raise InputError(f"{path}: line {lineno}: record must be an object")
        missing = [k for k in _REQUIRED_FIELDS if k not in obj]
        if missing:
            raise InputError(
                f"{path}: line {lineno}: missing required field(s) {', '.join(missing)}"
            )
        try:
            records.append(
                SampleRecord(
                    sample_id=str(obj["sample_id"]),
                    image_path=str(obj["image_path"]),
                    label=parse_label(str(obj["label"])),
                    condition=parse_condition(str(obj["condition"])),
                )
            )
        except InputError as exc:
            raise InputError(f"{path}: line {lineno}: {exc}")

    if not records:
        raise InputError(f"{path}: empty manifest")
    try:
        return DatasetManifest(records=tuple(records), root_dir=root_dir)
    except InputError as exc:
        raise InputError(f"{path}: {exc}")


def save_manifest(manifest: DatasetManifest, path: str | Path, root_dir: str = ".") -> Path:
    """Write a manifest file; record order is preserved."""
    path = Path(path)
    lines = [json.dumps({"manifest_version": MANIFEST_VERSION, "root_dir": root_dir})]
    for rec in manifest.records:
        lines.append(
            json.dumps(
                {
                    "sample_id": rec.sample_id,
                    "image_path": rec.image_path,
                    "label": rec.label.value,
                    "condition": rec.condition.value,
                },
                sort_keys=True,
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def summarize(manifest: DatasetManifest) -> dict[tuple[ClassLabel, Condition], int]:
    """Counts per (label, condition); all four cells present, zero-filled."""
    counts = {(lb, cond): 0 for lb in ClassLabel for cond in Condition}
    for rec in manifest.records:
        counts[(rec.label, rec.condition)] += 1
    return counts


def filter_by_condition(manifest: DatasetManifest, condition: Condition) -> DatasetManifest:
    """Records with matching condition, original order preserved."""
    kept = tuple(r for r in manifest.records if r.condition == condition)
    return DatasetManifest(records=kept, root_dir=manifest.root_dir)
