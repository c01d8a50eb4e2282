"""CSV reader and writer for fingerprint databases.

Layout: header row, then one row per record with the columns WAP000..WAP515,
Loc_x, Loc_y, Floor, Building, GeoX, GeoY, GeoZ, OriX, OriY, OriZ and the
optional trailing Direction, Device, Timestamp. Files without the optional
columns are accepted; written files always carry them (empty cells when unset).
"""

import csv
import io
import logging
import math
from typing import Iterable, Optional, TextIO

from apps.core.exceptions import ParseError, RangeError, SchemaError

from .schemas import (
    ALL_COLUMNS,
    AP_COUNT,
    DEFAULT_SPACING_M,
    REQUIRED_COLUMNS,
    RSS_MAX,
    RSS_SENTINEL,
    Database,
    Direction,
    FingerprintRecord,
)

logger = logging.getLogger(__name__)

_LOC_X = AP_COUNT
_GEO = AP_COUNT + 4
_ORI = AP_COUNT + 7
_OPTIONAL = AP_COUNT + 10


def _row_error(cls, message: str, row: int, column: str):
    return cls(f"row {row}, column {column}: {message}", details={"row": row, "column": column})


def _parse_int(cell: str, row: int, column: str) -> int:
    try:
        return int(cell)
    except ValueError:
        raise _row_error(ParseError, f"'{cell}' is not an integer", row, column) from None


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise _row_error(ParseError, f"'{cell}' is not a number", row, column) from None
    if not math.isfinite(value):
        raise _row_error(RangeError, f"'{cell}' is not finite", row, column)
    return value


def _check_header(header: list[str]) -> int:
    """Validate the header and return the expected cell count per row."""
    header = [name.strip() for name in header]
    if tuple(header) == ALL_COLUMNS:
        return len(ALL_COLUMNS)
    if tuple(header) == REQUIRED_COLUMNS:
        return len(REQUIRED_COLUMNS)
    for pos, (got, expected) in enumerate(zip(header, ALL_COLUMNS)):
        if got != expected:
            raise SchemaError(
                f"header column {pos} is '{got}', expected '{expected}'",
                details={"row": -1, "column": expected},
            )
    raise SchemaError(
        f"header has {len(header)} columns, expected {len(REQUIRED_COLUMNS)} "
        f"or {len(ALL_COLUMNS)}",
        details={"row": -1, "column": None},
    )


def parse_row(cells: list[str], row: int) -> FingerprintRecord:
    """Convert one data row; errors name the 0-based row and the column."""
    rss = []
    for ap in range(AP_COUNT):
        value = _parse_int(cells[ap], row, ALL_COLUMNS[ap])
        if not RSS_SENTINEL <= value <= RSS_MAX:
            raise _row_error(
                RangeError,
                f"RSS {value} outside [{RSS_SENTINEL}, {RSS_MAX}]",
                row,
                ALL_COLUMNS[ap],
            )
        rss.append(value)

    loc = []
    for offset, column in enumerate(("Loc_x", "Loc_y")):
        value = _parse_int(cells[_LOC_X + offset], row, column)
        if value < 0:
            raise _row_error(RangeError, f"negative grid index {value}", row, column)
        loc.append(value)

    geo = tuple(_parse_float(cells[_GEO + k], row, ALL_COLUMNS[_GEO + k]) for k in range(3))
    ori = tuple(_parse_float(cells[_ORI + k], row, ALL_COLUMNS[_ORI + k]) for k in range(3))

    direction: Optional[Direction] = None
    device = ""
    timestamp: Optional[int] = None
    if len(cells) > _OPTIONAL:
        if cells[_OPTIONAL]:
            try:
                direction = Direction(cells[_OPTIONAL])
            except ValueError:
                raise _row_error(
                    ParseError, f"unknown direction '{cells[_OPTIONAL]}'", row, "Direction"
                ) from None
        device = cells[_OPTIONAL + 1]
        if cells[_OPTIONAL + 2]:
            timestamp = _parse_int(cells[_OPTIONAL + 2], row, "Timestamp")

    return FingerprintRecord.model_construct(
        rss=tuple(rss),
        loc_x=loc[0],
        loc_y=loc[1],
        floor=cells[AP_COUNT + 2],
        building=cells[AP_COUNT + 3],
        geo=geo,
        ori=ori,
        direction=direction,
        device=device,
        timestamp=timestamp,
    )


def parse_database(stream: TextIO, spacing_m: float = DEFAULT_SPACING_M) -> Database:
    """
    Parse a fingerprint CSV stream.

    Raises:
        SchemaError: header mismatch or a row with the wrong column count
        ParseError: non-numeric cell
        RangeError: RSS outside [-110, 0], negative grid index, non-finite reading
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: header row missing", details={"row": -1}) from None
    width = _check_header(header)

    records = []
    for row, cells in enumerate(reader):
        if not cells:
            continue
        if len(cells) != width:
            raise SchemaError(
                f"row {row}: {len(cells)} columns, expected {width}",
                details={"row": row, "column": ALL_COLUMNS[min(len(cells), width - 1)]},
            )
        records.append(parse_row(cells, row))

    logger.debug("Parsed %d fingerprint records", len(records))
    return Database(records=tuple(records), spacing_m=spacing_m)


def _format_row(record: FingerprintRecord) -> list[str]:
    return [
        *(str(v) for v in record.rss),
        str(record.loc_x),
        str(record.loc_y),
        record.floor,
        record.building,
        *(repr(float(v)) for v in record.geo),
        *(repr(float(v)) for v in record.ori),
        record.direction.value if record.direction else "",
        record.device,
        "" if record.timestamp is None else str(record.timestamp),
    ]


def write_database(records: Iterable[FingerprintRecord], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(ALL_COLUMNS)
    for record in records:
        writer.writerow(_format_row(record))


def serialize_database(db: Database) -> str:
    """CSV text of ``db``; floats use the shortest repr that round-trips."""
    buffer = io.StringIO()
    write_database(db.records, buffer)
    return buffer.getvalue()
