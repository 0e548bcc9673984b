"""Metric suite: confusion matrices, accuracy/F1/recall/precision, and
grid reports grouped by (colormap, prompting strategy, condition).

`present` is the positive class everywhere. Metrics are percentages kept at
full precision internally; display rounding is 2 decimals, half-up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal

from .classify import Prediction, classify_batch
from .colormaps import ColormapMode
from .dataset import ClassLabel, Condition, DatasetManifest, filter_by_condition
from .embed import EmbeddingProvider
from .errors import DataError, InputError
from .imageio import read_thermal
from .preprocess import PreprocessConfig, preprocess_pipeline
from .prompts import PromptBank, PromptingStrategy, select_single_prompt

REPORT_VERSION = 1
STRATEGY_KINDS = ("single", "centroid")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    f1: float
    recall: float
    precision: float
    precision_defined: bool = True
    recall_defined: bool = True
    f1_defined: bool = True


def round2(value: float) -> float:
    """Display rounding: 2 decimals, half-up."""
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def compute_metrics(cm: ConfusionMatrix) -> MetricSet:
    n = cm.total
    if n == 0:
        raise InputError("cannot compute metrics over zero samples")
    accuracy = 100.0 * (cm.tp + cm.tn) / n

    recall_defined = (cm.tp + cm.fn) > 0
    recall = 100.0 * cm.tp / (cm.tp + cm.fn) if recall_defined else 0.0

    precision_defined = (cm.tp + cm.fp) > 0
    precision = 100.0 * cm.tp / (cm.tp + cm.fp) if precision_defined else 0.0

    f1_defined = precision_defined and recall_defined and (precision + recall) > 0
    f1 = 2.0 * precision * recall / (precision + recall) if f1_defined else 0.0

    return MetricSet(
        accuracy=accuracy,
        f1=f1,
        recall=recall,
        precision=precision,
        precision_defined=precision_defined,
        recall_defined=recall_defined,
        f1_defined=f1_defined,
    )


def confusion(
    predictions: tuple[Prediction, ...] | list[Prediction], manifest: DatasetManifest
) -> ConfusionMatrix:
    truth = {rec.sample_id: rec.label for rec in manifest.records}
    seen: set[str] = set()
    tp = fp = fn = tn = 0
    for pred in predictions:
        if pred.sample_id not in truth:
            raise DataError(f"prediction for unknown sample_id {pred.sample_id!r}")
        if pred.sample_id in seen:
            raise DataError(f"duplicate prediction for sample_id {pred.sample_id!r}")
        seen.add(pred.sample_id)
        actual = truth[pred.sample_id]
        if actual is ClassLabel.PRESENT:
            if pred.label is ClassLabel.PRESENT:
                tp += 1
            else:
                fn += 1
        else:
            if pred.label is ClassLabel.PRESENT:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class EvalCell:
    metrics: MetricSet | None = None
    matrix: ConfusionMatrix | None = None
    selected_prompts: dict[ClassLabel, str] | None = None
    error: str | None = None


RowKey = tuple[ColormapMode, str, Condition]


@dataclass(frozen=True)
class EvalReport:
    rows: dict[RowKey, EvalCell]


def evaluate_grid(
    manifest: DatasetManifest,
    grid: list[tuple[ColormapMode, str]],
    provider: EmbeddingProvider,
    banks: dict[ColormapMode, PromptBank],
    cfg: PreprocessConfig = PreprocessConfig(),
    jobs: int = 1,
) -> EvalReport:
    """Run classification per grid cell and per condition in the manifest.

    Single-prompt selection runs once per cell over the whole manifest, so
    the chosen prompt pair stays fixed across conditions. A failing cell is
    reported in place without aborting the rest of the grid.
    """
    conditions = [c for c in Condition if any(r.condition == c for r in manifest.records)]
    rows: dict[RowKey, EvalCell] = {}
    for colormap, kind in grid:
        if kind not in STRATEGY_KINDS:
            raise InputError(f"unknown strategy kind {kind!r}")
        bank = banks.get(colormap)
        if bank is None:
            raise InputError(f"no prompt bank supplied for colormap {colormap.value!r}")
        cell_cfg = replace(cfg, colormap=colormap)

        strategy = PromptingStrategy(kind=kind)  # type: ignore[arg-type]
        selection_error: str | None = None
        if kind == "single":
            try:
                images = [
                    preprocess_pipeline(read_thermal(manifest.resolve_path(r)), cell_cfg)
                    for r in manifest.records
                ]
                strategy = select_single_prompt(bank, images, provider)
            except Exception as exc:
                selection_error = f"single-prompt selection failed: {exc}"

        for condition in conditions:
            key = (colormap, kind, condition)
            if selection_error is not None:
                rows[key] = EvalCell(error=selection_error)
                continue
            subset = filter_by_condition(manifest, condition)
            try:
                result = classify_batch(
                    subset, cell_cfg, provider, strategy, bank, jobs=jobs
                )
                cm = confusion(result.predictions, subset)
                rows[key] = EvalCell(
                    metrics=compute_metrics(cm),
                    matrix=cm,
                    selected_prompts=strategy.chosen,
                )
            except Exception as exc:
                rows[key] = EvalCell(error=str(exc))
    return EvalReport(rows=rows)


FULL_GRID: list[tuple[ColormapMode, str]] = [
    (mode, kind) for mode in ColormapMode for kind in STRATEGY_KINDS
]


def _row_sort_key(key: RowKey) -> tuple[int, int, int]:
    colormap, kind, condition = key
    return (
        list(ColormapMode).index(colormap),
        STRATEGY_KINDS.index(kind),
        list(Condition).index(condition),
    )


def render_report(report: EvalReport, format: str = "json") -> bytes:
    if format == "json":
        return _render_json(report)
    if format == "table":
        return _render_table(report)
    if format == "confusion":
        return _render_confusion(report)
    raise InputError(f"unknown report format {format!r} (json, table, confusion)")


def _render_json(report: EvalReport) -> bytes:
    rows = []
    for key in sorted(report.rows, key=_row_sort_key):
        colormap, kind, condition = key
        cell = report.rows[key]
        row: dict = {
            "colormap": colormap.value,
            "strategy": kind,
            "condition": condition.value,
            "error": cell.error,
        }
        row["metrics"] = (
            None
            if cell.metrics is None
            else {
                "accuracy": cell.metrics.accuracy,
                "f1": cell.metrics.f1,
                "recall": cell.metrics.recall,
                "precision": cell.metrics.precision,
                "precision_defined": cell.metrics.precision_defined,
                "recall_defined": cell.metrics.recall_defined,
                "f1_defined": cell.metrics.f1_defined,
            }
        )
        row["confusion"] = (
            None
            if cell.matrix is None
            else {
                "tp": cell.matrix.tp,
                "fp": cell.matrix.fp,
                "fn": cell.matrix.fn,
                "tn": cell.matrix.tn,
            }
        )
        row["selected_prompts"] = (
            None
            if cell.selected_prompts is None
            else {lb.value: p for lb, p in cell.selected_prompts.items()}
        )
        rows.append(row)
    doc = {"report_version": REPORT_VERSION, "rows": rows}
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def parse_report(data: bytes) -> EvalReport:
    try:
        doc = json.loads(data.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"bad report JSON: {exc}")
    if doc.get("report_version") != REPORT_VERSION:
        raise DataError("unsupported or missing report_version")
    rows: dict[RowKey, EvalCell] = {}
    for row in doc["rows"]:
        key = (
            ColormapMode(row["colormap"]),
            row["strategy"],
            Condition(row["condition"]),
        )
        metrics = None
        if row.get("metrics") is not None:
            m = row["metrics"]
            metrics = MetricSet(
                accuracy=m["accuracy"],
                f1=m["f1"],
                recall=m["recall"],
                precision=m["precision"],
                precision_defined=m["precision_defined"],
                recall_defined=m["recall_defined"],
                f1_defined=m["f1_defined"],
            )
        matrix = None
        if row.get("confusion") is not None:
            c = row["confusion"]
            matrix = ConfusionMatrix(tp=c["tp"], fp=c["fp"], fn=c["fn"], tn=c["tn"])
        selected = None
        if row.get("selected_prompts") is not None:
            selected = {
                ClassLabel(lb): p for lb, p in row["selected_prompts"].items()
            }
        rows[key] = EvalCell(
            metrics=metrics,
            matrix=matrix,
            selected_prompts=selected,
            error=row.get("error"),
        )
    return EvalReport(rows=rows)


def _fmt_metric(value: float, defined: bool = True) -> str:
    text = f"{round2(value):.2f}"
    return text if defined else text + "*"


def _render_table(report: EvalReport) -> bytes:
    conditions = sorted(
        {key[2] for key in report.rows}, key=lambda c: list(Condition).index(c)
    )
    pairs = sorted(
        {(key[0], key[1]) for key in report.rows},
        key=lambda p: (list(ColormapMode).index(p[0]), STRATEGY_KINDS.index(p[1])),
    )
    headers = ["preproc", "prompting"]
    for cond in conditions:
        headers += [f"{cond.value}:{m}" for m in ("acc", "f1", "rec", "prec")]
    lines = []
    table: list[list[str]] = [headers]
    for colormap, kind in pairs:
        row = [colormap.value, kind]
        for cond in conditions:
            cell = report.rows.get((colormap, kind, cond))
            if cell is None:
                row += ["-"] * 4
            elif cell.error is not None or cell.metrics is None:
                row += ["err"] * 4
            else:
                m = cell.metrics
                row += [
                    _fmt_metric(m.accuracy),
                    _fmt_metric(m.f1, m.f1_defined),
                    _fmt_metric(m.recall, m.recall_defined),
                    _fmt_metric(m.precision, m.precision_defined),
                ]
        table.append(row)
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    for r in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return ("\n".join(lines) + "\n").encode("utf-8")


def _render_confusion(report: EvalReport) -> bytes:
    blocks = []
    for key in sorted(report.rows, key=_row_sort_key):
        colormap, kind, condition = key
        cell = report.rows[key]
        head = f"[{colormap.value}/{kind}/{condition.value}]"
        if cell.error is not None or cell.matrix is None:
            blocks.append(f"{head}\n  error: {cell.error or 'no data'}\n")
            continue
        cm = cell.matrix
        blocks.append(
            f"{head}\n"
            f"                 pred_present  pred_absent\n"
            f"  true_present   {cm.tp:>12}  {cm.fn:>11}\n"
            f"  true_absent    {cm.fp:>12}  {cm.tn:>11}\n"
        )
    return "\n".join(blocks).encode("utf-8")
