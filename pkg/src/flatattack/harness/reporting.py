"""Report files: ASR/loss matrices, manifests, traces and adversarial sets.

Everything written here is a pure function of the report, so rerunning with
identical inputs reproduces identical bytes. Floats carry 17 significant
digits; JSON is key-sorted and holds no timestamps.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from flatattack.attacks.trace import export_trace_csv
from flatattack.errors import FlatAttackError, ModelFormatError
from flatattack.harness.diversity import DiversityCurve
from flatattack.harness.transfer import ComparisonRow, TransferReport
from flatattack.models.dataset import fmt_float
from flatattack.numerics import RNG_FORMAT_VERSION

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
ADVERSARIAL_SCHEMA_VERSION = 1


def _json_ready(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, np.generic):
        return _json_ready(value.item())
    return value


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_json_ready(payload), indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise FlatAttackError(f"could not write {path.name}: {e}", context={"path": str(path)}) from e
    return path


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise FlatAttackError(f"could not write {path.name}: {e}", context={"path": str(path)}) from e
    return path


def write_matrix_csv(path: Path, matrix: np.ndarray, row_ids: Sequence[str], col_ids: Sequence[str]) -> Path:
    """Surrogate rows by target columns; the corner cell is ``surrogate``."""
    return _write_rows(
        path,
        ["surrogate", *col_ids],
        ([rid, *[fmt_float(v) for v in row]] for rid, row in zip(row_ids, matrix)),
    )


def read_matrix_csv(path: Path) -> tuple[list[str], list[str], np.ndarray]:
    """Inverse of ``write_matrix_csv``: (row ids, column ids, matrix)."""
    path = Path(path)
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise FlatAttackError(f"could not read {path.name}: {e}", context={"path": str(path)}) from e
    if not rows or rows[0][0] != "surrogate":
        raise ModelFormatError(f"{path.name} is not a report matrix", field="header")
    try:
        matrix = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64)
    except ValueError as e:
        raise ModelFormatError(f"malformed matrix cell in {path.name}: {e}", field="cell") from e
    return [r[0] for r in rows[1:]], rows[0][1:], matrix.reshape(len(rows) - 1, len(rows[0]) - 1)


def report_manifest(report: TransferReport, run_config: Optional[dict[str, Any]] = None) -> dict[str, Any]:
    manifest: dict[str, Any] = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "rng_format_version": RNG_FORMAT_VERSION,
        "algorithm": report.algorithm,
        "attack": report.attack.effective(),
        "seeds": report.seeds,
        "surrogates": report.surrogate_ids,
        "targets": report.target_ids,
        "model_hashes": report.model_hashes,
        "n_examples": report.n_examples,
        "rank_agreement": {
            "spearman": report.rank_agreement.value,
            "degenerate": report.rank_agreement.degenerate,
            "n_targets": report.rank_agreement.n_targets,
        },
        "mean_whitebox_asr": report.mean_whitebox_asr,
        "mean_transfer_asr": report.mean_transfer_asr,
    }
    if run_config is not None:
        manifest["config"] = run_config
        manifest["seeds"] = {**report.seeds, "master": run_config.get("seed")}
    return manifest


def emit_report(
    report: TransferReport,
    out_dir: Path,
    run_config: Optional[dict[str, Any]] = None,
    with_traces: bool = True,
) -> list[Path]:
    """Write asr.csv, asr_filtered.csv, adv_loss.csv, manifest.json and
    traces/<surrogate>/<index>.csv under ``out_dir``."""
    out_dir = Path(out_dir)
    written = [
        write_matrix_csv(out_dir / "asr.csv", report.asr, report.surrogate_ids, report.target_ids),
        write_matrix_csv(out_dir / "asr_filtered.csv", report.asr_filtered, report.surrogate_ids, report.target_ids),
        write_matrix_csv(out_dir / "adv_loss.csv", report.adv_loss, report.surrogate_ids, report.target_ids),
        write_json(out_dir / "manifest.json", report_manifest(report, run_config)),
    ]
    if with_traces:
        for sid, traces in report.traces.items():
            for i, trace in enumerate(traces):
                written.append(export_trace_csv(trace, out_dir / "traces" / sid / f"{i:05d}.csv"))
    logger.info("Wrote %s report (%d files) to %s", report.algorithm, len(written), out_dir)
    return written


def write_comparison_csv(path: Path, rows: Sequence[ComparisonRow]) -> Path:
    return _write_rows(
        path,
        ["algorithm", "mean_whitebox_asr", "mean_transfer_asr", "min_transfer_asr", "max_transfer_asr", "rank_agreement"],
        (
            [
                r.algorithm,
                fmt_float(r.mean_whitebox_asr),
                fmt_float(r.mean_transfer_asr),
                fmt_float(r.min_transfer_asr),
                fmt_float(r.max_transfer_asr),
                fmt_float(r.rank_agreement),
            ]
            for r in rows
        ),
    )


def write_diversity_csv(path: Path, curves: Sequence[DiversityCurve]) -> Path:
    """Columns: t, then one loss-std column per strategy."""
    steps = len(curves[0].loss_std) if curves else 0
    return _write_rows(
        path,
        ["t", *[c.strategy for c in curves]],
        ([str(t), *[fmt_float(c.loss_std[t]) for c in curves]] for t in range(steps)),
    )


# ---------------------------------------------------------------------------
# Adversarial sets
# ---------------------------------------------------------------------------


def save_adversarial_set(
    path: Path,
    adversarial: np.ndarray,
    labels: np.ndarray,
    metadata: dict[str, Any],
) -> Path:
    """CSV ``index,label,x0..`` plus a ``.json`` sidecar holding the metadata."""
    path = Path(path)
    d = adversarial.shape[1]
    _write_rows(
        path,
        ["index", "label", *[f"x{k}" for k in range(d)]],
        ([str(i), str(int(y)), *[fmt_float(v) for v in row]] for i, (row, y) in enumerate(zip(adversarial, labels))),
    )
    write_json(path.with_suffix(".json"), {"schema_version": ADVERSARIAL_SCHEMA_VERSION, **metadata})
    return path


def load_adversarial_set(path: Path) -> tuple[np.ndarray, np.ndarray, dict[str, Any]]:
    """Returns (examples, labels, sidecar metadata)."""
    path = Path(path)
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        sidecar = json.loads(path.with_suffix(".json").read_text())
    except OSError as e:
        raise FlatAttackError(f"could not read adversarial set: {e}", context={"path": str(path)}) from e
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"adversarial-set sidecar is not valid JSON: {e}", field="sidecar") from e
    if sidecar.get("schema_version") != ADVERSARIAL_SCHEMA_VERSION:
        raise ModelFormatError(
            f"unsupported adversarial-set schema {sidecar.get('schema_version')!r}", field="schema_version"
        )
    if not rows or rows[0][:2] != ["index", "label"]:
        raise ModelFormatError("adversarial-set CSV header is missing", field="header")
    d = len(rows[0]) - 2
    body = rows[1:]
    try:
        examples = np.array([[float(v) for v in r[2:]] for r in body], dtype=np.float64).reshape(len(body), d)
        labels = np.array([int(r[1]) for r in body], dtype=np.int64)
    except (ValueError, IndexError) as e:
        raise ModelFormatError(f"malformed adversarial-set row: {e}", field="rows") from e
    return examples, labels, sidecar
