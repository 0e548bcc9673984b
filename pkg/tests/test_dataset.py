from __future__ import annotations

import json
from pathlib import Path

import pytest

from vlm_iris.dataset import (
    ClassLabel,
    Condition,
    DatasetManifest,
    SampleRecord,
    filter_by_condition,
    load_manifest,
    save_manifest,
    summarize,
)
from vlm_iris.errors import InputError


def write_manifest(path, rows, header=None):
    lines = [json.dumps(header or {"manifest_version": 1, "root_dir": "."})]
    lines += [json.dumps(r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def row(i, label="present", condition="hot"):
    return {
        "sample_id": f"s{i}",
        "image_path": f"images/s{i}.pgm",
        "label": label,
        "condition": condition,
    }


def balanced_rows(n_per_cell):
    rows = []
    i = 0
    for condition in ("hot", "room"):
        for label in ("present", "absent"):
            for _ in range(n_per_cell):
                rows.append(row(i, label, condition))
                i += 1
    return rows


def test_load_200_record_balanced(tmp_path):
    path = write_manifest(tmp_path / "m.jsonl", balanced_rows(50))
    manifest = load_manifest(path)
    assert len(manifest) == 200
    assert manifest.records[0].sample_id == "s0"


def test_empty_manifest_is_error(tmp_path):
    path = write_manifest(tmp_path / "m.jsonl", [])
    with pytest.raises(InputError, match="empty manifest"):
        load_manifest(path)


def test_duplicate_sample_id_names_offender(tmp_path):
    rows = [row(1), dict(row(1), image_path="other.pgm")]
    path = write_manifest(tmp_path / "m.jsonl", rows)
    with pytest.raises(InputError, match="s1"):
        load_manifest(path)


def test_duplicate_image_path_rejected(tmp_path):
    rows = [row(1), dict(row(2), image_path="images/s1.pgm")]
    path = write_manifest(tmp_path / "m.jsonl", rows)
    with pytest.raises(InputError, match="images/s1.pgm"):
        load_manifest(path)


def test_unknown_label_names_line(tmp_path):
    path = write_manifest(tmp_path / "m.jsonl", [row(1), row(2, label="maybe")])
    with pytest.raises(InputError, match=r"line 3.*maybe"):
        load_manifest(path)


def test_missing_field_names_line(tmp_path):
    bad = row(1)
    del bad["condition"]
    path = write_manifest(tmp_path / "m.jsonl", [bad])
    with pytest.raises(InputError, match=r"line 2.*condition"):
        load_manifest(path)


def test_parse_failure_names_line(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text('{"manifest_version": 1}\nnot json\n')
    with pytest.raises(InputError, match="line 2"):
        load_manifest(path)


def test_missing_header_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(json.dumps(row(1)) + "\n")
    with pytest.raises(InputError, match="manifest_version"):
        load_manifest(path)


def test_case_insensitive_enums_stored_lowercase(tmp_path):
    path = write_manifest(
        tmp_path / "m.jsonl", [row(1, label="Present", condition="HOT")]
    )
    manifest = load_manifest(path)
    assert manifest.records[0].label is ClassLabel.PRESENT
    assert manifest.records[0].condition is Condition.HOT


def test_root_dir_resolution(tmp_path):
    sub = tmp_path / "data"
    sub.mkdir()
    path = write_manifest(
        sub / "m.jsonl", [row(1)], header={"manifest_version": 1, "root_dir": "frames"}
    )
    manifest = load_manifest(path)
    rec = manifest.records[0]
    assert manifest.resolve_path(rec) == sub / "frames" / "images/s1.pgm"
    override = load_manifest(path, root=tmp_path / "elsewhere")
    assert override.resolve_path(rec) == tmp_path / "elsewhere" / "images/s1.pgm"


def test_load_is_deterministic(tmp_path):
    path = write_manifest(tmp_path / "m.jsonl", balanced_rows(3))
    assert load_manifest(path) == load_manifest(path)


def test_save_load_roundtrip(tmp_path):
    path = write_manifest(tmp_path / "m.jsonl", balanced_rows(2))
    manifest = load_manifest(path)
    out = save_manifest(manifest, tmp_path / "copy.jsonl")
    assert load_manifest(out).records == manifest.records


def test_summarize_balanced(tmp_path):
    manifest = load_manifest(write_manifest(tmp_path / "m.jsonl", balanced_rows(50)))
    counts = summarize(manifest)
    assert set(counts.values()) == {50}
    assert len(counts) == 4


def test_summarize_zero_fills():
    records = tuple(
        SampleRecord(f"a{i}", f"a{i}.pgm", ClassLabel.ABSENT, Condition.HOT)
        for i in range(3)
    )
    counts = summarize(DatasetManifest(records=records, root_dir=Path(".")))
    assert counts[(ClassLabel.ABSENT, Condition.HOT)] == 3
    zero_cells = [k for k, v in counts.items() if v == 0]
    assert len(zero_cells) == 3


def test_summarize_direct_count(tmp_path):
    rows = [row(i, "present", "hot") for i in range(3)] + [row(9, "absent", "room")]
    manifest = load_manifest(write_manifest(tmp_path / "m.jsonl", rows))
    counts = summarize(manifest)
    assert counts[(ClassLabel.PRESENT, Condition.HOT)] == 3
    assert counts[(ClassLabel.ABSENT, Condition.ROOM)] == 1
    assert sum(counts.values()) == 4


def test_summarize_sums_to_total(small_dataset):
    manifest, _, _ = small_dataset
    assert sum(summarize(manifest).values()) == len(manifest)


def test_filter_balanced_halves(tmp_path):
    manifest = load_manifest(write_manifest(tmp_path / "m.jsonl", balanced_rows(50)))
    assert len(filter_by_condition(manifest, Condition.HOT)) == 100


def test_filter_empty_result_is_legal(tmp_path):
    rows = [row(i, condition="hot") for i in range(3)]
    manifest = load_manifest(write_manifest(tmp_path / "m.jsonl", rows))
    assert len(filter_by_condition(manifest, Condition.ROOM)) == 0


def test_filter_preserves_order(tmp_path):
    rows = [row(1, condition="hot"), row(2, condition="room"), row(3, condition="hot")]
    manifest = load_manifest(write_manifest(tmp_path / "m.jsonl", rows))
    hot = filter_by_condition(manifest, Condition.HOT)
    assert [r.sample_id for r in hot.records] == ["s1", "s3"]


def test_filter_partitions(tmp_path):
    manifest = load_manifest(write_manifest(tmp_path / "m.jsonl", balanced_rows(4)))
    hot = filter_by_condition(manifest, Condition.HOT).records
    room = filter_by_condition(manifest, Condition.ROOM).records
    assert sorted(r.sample_id for r in hot + room) == sorted(
        r.sample_id for r in manifest.records
    )
    assert not set(hot) & set(room)
