"""Raw chief-complaint corpus ingestion.

Reads the delimited corpus files (free-text complaint plus the two gout-flare
flags) into immutable records, and scans de-identification placeholders such
as ``<<TIME>>`` so later tokenization never splits them.
"""

import csv
import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AutoccError


class Flag(enum.Enum):
    """Gout-flare annotation value: yes, no, unknown, or unmarked ('-')."""

    Y = "Y"
    N = "N"
    U = "U"
    UNMARKED = "-"


_FLAG_VALUES = {"y": Flag.Y, "n": Flag.N, "u": Flag.U, "-": Flag.UNMARKED}

# Placeholders are <<NAME>> with NAME free of angle brackets; anything else
# (stray '<<', nesting) is literal text.
PLACEHOLDER_RE = re.compile(r"<<([^<>]+)>>")

_KNOWN_PLACEHOLDER_KINDS = {"TIME", "DATE", "HOSPITAL"}


class MissingColumn(AutoccError):
    code = "missing_column"


class BadFlag(AutoccError):
    code = "bad_flag"

    def __init__(self, row: int, value: str, column: str):
        super().__init__(f"row {row}: {column} flag {value!r} not in {{Y, N, U, -}}")
        self.row = row
        self.value = value
        self.column = column


class EncodingError(AutoccError):
    code = "encoding_error"


@dataclass(frozen=True)
class PlaceholderToken:
    kind: str  # TIME, DATE, HOSPITAL, or OTHER
    name: str  # exact NAME between the delimiters
    surface: str  # full source text including << >>
    start: int
    end: int


@dataclass(frozen=True)
class CCRecord:
    id: int
    text: str
    predict: Flag
    consensus: Flag


@dataclass
class CorpusLoad:
    """Loaded records plus the ingestion counters behind manifest.json."""

    records: list[CCRecord]
    rows_read: int
    rows_dropped: int
    placeholder_counts: dict[str, int] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def manifest(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_dropped": self.rows_dropped,
            "placeholder_counts": dict(sorted(self.placeholder_counts.items())),
        }


def scan_placeholders(text: str) -> list[PlaceholderToken]:
    """Return every non-overlapping ``<<NAME>>`` span, left to right."""
    tokens = []
    for m in PLACEHOLDER_RE.finditer(text):
        name = m.group(1)
        kind = name.strip().upper()
        if kind not in _KNOWN_PLACEHOLDER_KINDS:
            kind = "OTHER"
        tokens.append(
            PlaceholderToken(kind=kind, name=name, surface=m.group(0), start=m.start(), end=m.end())
        )
    return tokens


def _normalize_header(cell: str) -> str:
    return re.sub(r"[\s_]+", " ", cell.strip().lower())


_TEXT_HEADERS = {"chief complaint", "chiefcomplaint", "cc"}
_PREDICT_HEADERS = {"predict"}
_CONSENSUS_HEADERS = {"consensus"}


def _locate_columns(header: list[str]) -> tuple[int, int, int]:
    normalized = [_normalize_header(c) for c in header]

    def find(names: set[str], label: str) -> int:
        for i, cell in enumerate(normalized):
            if cell in names:
                return i
        raise MissingColumn(f"header {header!r} lacks a {label!r} column")

    return (
        find(_TEXT_HEADERS, "chief complaint"),
        find(_PREDICT_HEADERS, "predict"),
        find(_CONSENSUS_HEADERS, "consensus"),
    )


def _parse_flag(raw: str | None, row: int, column: str) -> Flag:
    value = (raw or "").strip()
    if value == "":
        # absent cell means unmarked, same as the corpus' literal '-'
        return Flag.UNMARKED
    flag = _FLAG_VALUES.get(value.lower())
    if flag is None:
        raise BadFlag(row, value, column)
    return flag


def load_corpus(path: str | Path, format: str | None = None) -> CorpusLoad:
    """Parse a TSV or CSV corpus file into CCRecords.

    ``format`` is "tsv" or "csv"; when omitted it is inferred from the file
    extension (default tsv). Rows whose complaint text is empty after trimming
    are dropped and counted, not fatal. Ids are assigned in file order from 0
    over the kept rows.
    """
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "tsv"
    delimiter = "," if format.lower() == "csv" else "\t"

    try:
        raw = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{path}: invalid UTF-8 ({exc})") from exc

    reader = csv.reader(raw.splitlines(), delimiter=delimiter)
    rows = list(reader)
    if not rows:
        raise MissingColumn(f"{path}: empty file, no header")
    text_col, predict_col, consensus_col = _locate_columns(rows[0])

    records: list[CCRecord] = []
    placeholder_counts: Counter[str] = Counter()
    rows_read = 0
    rows_dropped = 0
    for row_no, row in enumerate(rows[1:], start=1):
        if not any(cell.strip() for cell in row):
            continue  # blank line, not a data row
        rows_read += 1
        text = row[text_col].strip() if text_col < len(row) else ""
        if not text:
            rows_dropped += 1
            continue
        predict = _parse_flag(row[predict_col] if predict_col < len(row) else "", row_no, "predict")
        consensus = _parse_flag(
            row[consensus_col] if consensus_col < len(row) else "", row_no, "consensus"
        )
        for tok in scan_placeholders(text):
            placeholder_counts[tok.name.strip().upper()] += 1
        records.append(CCRecord(id=len(records), text=text, predict=predict, consensus=consensus))

    return CorpusLoad(
        records=records,
        rows_read=rows_read,
        rows_dropped=rows_dropped,
        placeholder_counts=dict(placeholder_counts),
    )
