"""Tab-separated tables and JSON reports.

Tables are UTF-8 TSV with a header row. Floats are written with ``repr`` so
they read back to the same value.
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, NamedTuple, Sequence, TextIO, Union

from .exceptions import EmptyInputError, InvalidValueError, LengthMismatchError

PathLike = Union[str, Path]

ANALYSIS_COLUMNS = ("sample_id", "p", "l")
QUALITY_COLUMNS = ("sample_id", "batch", "s_f", "s_b", "q", "flagged")
WEIGHT_COLUMNS = ("sample_id", "batch", "q", "w")
REQUEST_COLUMNS = (
    "sample_id",
    "noise_level",
    "denoising_steps",
    "guidance_scale",
    "latent_seed",
    "generator_tag",
)


class AnalysisRow(NamedTuple):
    sample_id: str
    p: float
    l: int  # noqa: E741


class QualityRow(NamedTuple):
    sample_id: str
    batch: int
    q: float


def format_value(value: Any) -> str:
    """Format a cell; floats round-trip exactly."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(stream: TextIO, columns: Sequence[str], rows: Iterable[Sequence]):
    """Write a header and rows as TSV."""
    writer = csv.writer(stream, delimiter="\t", lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise LengthMismatchError(
                f"Row has {len(row)} cells for {len(columns)} columns."
            )
        writer.writerow([format_value(v) for v in row])


def read_table(stream: TextIO, required: Sequence[str]) -> List[Dict[str, str]]:
    """Read TSV rows as dictionaries.

    Raises:
        EmptyInputError: If there is no header.
        InvalidValueError: If a required column is missing or a row is ragged.
    """
    reader = csv.reader(stream, delimiter="\t")
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInputError("The table is empty.") from None
    missing = [name for name in required if name not in header]
    if missing:
        raise InvalidValueError(f"Missing columns: {', '.join(missing)}")

    rows = []
    for number, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            raise InvalidValueError(
                f"Line {number} has {len(cells)} cells for {len(header)} columns."
            )
        rows.append(dict(zip(header, cells)))
    return rows


def _parse(convert, text: str, column: str, sample_id: str):
    try:
        return convert(text)
    except ValueError:
        raise InvalidValueError(
            f"{sample_id}: invalid {column} value: {text!r}"
        ) from None


def read_analysis(stream: TextIO) -> List[AnalysisRow]:
    """Read ``sample_id, p, l`` rows."""
    rows = []
    for row in read_table(stream, ANALYSIS_COLUMNS):
        sample_id = row["sample_id"]
        p = _parse(float, row["p"], "p", sample_id)
        level = _parse(int, row["l"], "l", sample_id)
        rows.append(AnalysisRow(sample_id, p, level))
    return rows


def read_quality(stream: TextIO) -> List[QualityRow]:
    """Read ``sample_id, batch, q`` columns of a quality table.

    A table without a batch column is one batch.
    """
    rows = []
    for row in read_table(stream, ("sample_id", "q")):
        sample_id = row["sample_id"]
        batch = _parse(int, row.get("batch", "0"), "batch", sample_id)
        q = _parse(float, row["q"], "q", sample_id)
        rows.append(QualityRow(sample_id, batch, q))
    return rows


def dumps_report(report: Dict[str, Any]) -> str:
    """Serialize a report with sorted keys and a trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(path: PathLike, report: Dict[str, Any]) -> None:
    """Write a report file."""
    Path(path).write_text(dumps_report(report), encoding="utf-8")


REPORT_KEYS = ("seed", "epoch_losses", "probe_accuracy")


def read_report(path: PathLike) -> Dict[str, Any]:
    """Read a report file.

    Raises:
        InvalidValueError: If the file is not a JSON report.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except ValueError as e:
        raise InvalidValueError(f"{path}: not a JSON report: {e}") from None
    if not isinstance(data, dict) or any(key not in data for key in REPORT_KEYS):
        raise InvalidValueError(f"{path}: missing report fields")
    return data
