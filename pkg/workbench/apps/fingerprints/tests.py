"""Tests for fingerprints app."""

import csv
import io
import json

import numpy as np
import pytest

from apps.core.exceptions import ConfigError, ParseError, RangeError, SchemaError
from apps.fingerprints.factories import FingerprintRecordFactory, make_database
from apps.fingerprints.parser import parse_database, serialize_database, write_database
from apps.fingerprints.schemas import (
    ALL_COLUMNS,
    AP_COUNT,
    REQUIRED_COLUMNS,
    RSS_SENTINEL,
    Database,
    Direction,
)
from apps.fingerprints.selection import select
from apps.fingerprints.synthetic import (
    constant_field,
    field_model,
    linear_field,
    synthesize_database,
)
from apps.fingerprints.validation import validate
from apps.geomap.schemas import TestBed


def csv_rows(records):
    buffer = io.StringIO()
    write_database(records, buffer)
    return list(csv.reader(io.StringIO(buffer.getvalue())))


def to_text(rows):
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(rows)
    return buffer.getvalue()


class TestParseDatabase:
    """Tests for the CSV reader."""

    def test_round_trip_is_exact(self):
        """Test parse(serialize(db)) reproduces every field."""
        db = make_database(5, detected=(3, -67))
        parsed = parse_database(io.StringIO(serialize_database(db)))
        assert [r.model_dump() for r in parsed.records] == [r.model_dump() for r in db.records]
        assert serialize_database(parsed) == serialize_database(db)

    def test_float_round_trip(self):
        """Test awkward floats survive bit-exactly."""
        record = FingerprintRecordFactory(geo=(0.1 + 0.2, -1e-17, 123456.789012345678))
        parsed = parse_database(io.StringIO(serialize_database(Database(records=(record,)))))
        assert parsed.records[0].geo == record.geo

    def test_without_optional_columns(self):
        """Test 526-column files are accepted."""
        rows = [row[: len(REQUIRED_COLUMNS)] for row in csv_rows([FingerprintRecordFactory()])]
        db = parse_database(io.StringIO(to_text(rows)))
        assert len(db) == 1
        assert db.records[0].direction is None
        assert db.records[0].timestamp is None

    def test_header_only(self):
        """Test a header without rows is an empty database."""
        db = parse_database(io.StringIO(to_text([list(ALL_COLUMNS)])))
        assert len(db) == 0
        assert db.rss_matrix().shape == (0, AP_COUNT)

    def test_empty_input(self):
        """Test an input without header fails."""
        with pytest.raises(SchemaError):
            parse_database(io.StringIO(""))

    def test_bad_header(self):
        """Test a renamed column is reported."""
        header = list(ALL_COLUMNS)
        header[AP_COUNT] = "X"
        with pytest.raises(SchemaError) as exc_info:
            parse_database(io.StringIO(to_text([header])))
        assert exc_info.value.details["column"] == "Loc_x"

    def test_wrong_column_count(self):
        """Test a short row names its row index."""
        rows = csv_rows(FingerprintRecordFactory.create_batch(3))
        rows[2] = rows[2][:-5]
        with pytest.raises(SchemaError) as exc_info:
            parse_database(io.StringIO(to_text(rows)))
        assert exc_info.value.details["row"] == 1

    def test_rss_out_of_range(self):
        """Test RSS above 0 dBm is a RangeError with row and column."""
        rows = csv_rows(FingerprintRecordFactory.create_batch(2))
        rows[2][7] = "5"
        with pytest.raises(RangeError) as exc_info:
            parse_database(io.StringIO(to_text(rows)))
        assert exc_info.value.details == {"row": 1, "column": "WAP007"}

    def test_rss_below_sentinel(self):
        """Test RSS below -110 is rejected."""
        rows = csv_rows([FingerprintRecordFactory()])
        rows[1][0] = "-111"
        with pytest.raises(RangeError):
            parse_database(io.StringIO(to_text(rows)))

    def test_non_numeric_cell(self):
        """Test a non-numeric field cell is a ParseError."""
        rows = csv_rows([FingerprintRecordFactory()])
        rows[1][AP_COUNT + 4] = "abc"
        with pytest.raises(ParseError) as exc_info:
            parse_database(io.StringIO(to_text(rows)))
        assert exc_info.value.details == {"row": 0, "column": "GeoX"}

    def test_non_finite_reading(self):
        """Test NaN readings are rejected."""
        rows = csv_rows([FingerprintRecordFactory()])
        rows[1][AP_COUNT + 5] = "nan"
        with pytest.raises(RangeError):
            parse_database(io.StringIO(to_text(rows)))

    def test_negative_location(self):
        """Test negative grid indices are rejected."""
        rows = csv_rows([FingerprintRecordFactory()])
        rows[1][AP_COUNT + 1] = "-1"
        with pytest.raises(RangeError) as exc_info:
            parse_database(io.StringIO(to_text(rows)))
        assert exc_info.value.details["column"] == "Loc_y"

    def test_unknown_direction(self):
        """Test the Direction column is checked."""
        rows = csv_rows([FingerprintRecordFactory()])
        rows[1][len(REQUIRED_COLUMNS)] = "Sideways"
        with pytest.raises(ParseError):
            parse_database(io.StringIO(to_text(rows)))


class TestRecords:
    """Tests for record and database schemas."""

    def test_detected(self):
        """Test only non-sentinel APs count as detected."""
        assert FingerprintRecordFactory(detected=(10, -80)).detected == [10]
        assert FingerprintRecordFactory().detected == []

    def test_rss_length_validated(self):
        """Test the RSS vector length is enforced."""
        with pytest.raises(ValueError):
            FingerprintRecordFactory(rss=(RSS_SENTINEL,) * 3)

    def test_positions_in_metres(self):
        """Test grid indices scale by the spacing."""
        db = make_database(3)
        assert np.allclose(db.positions_m(), db.locations() * 0.6)


class TestValidate:
    """Tests for the consistency report."""

    def test_counts(self):
        """Test detection, floor and device counts."""
        records = (
            make_database(3, detected=(5, -60), floor="4F").records
            + make_database(2, detected=(5, -70), floor="5E", device="device-b").records
        )
        db = Database(records=records)
        report = validate(db)
        assert report.record_count == 5
        assert report.ap_detections[5] == 5
        assert report.detected_ap_count == 1
        assert report.floor_counts == {"4F": 3, "5E": 2}
        assert report.device_counts == {"device-a": 3, "device-b": 2}
        assert report.rss_histogram == {"4F": {-60: 3}, "5E": {-70: 2}}

    def test_bounds_violations(self):
        """Test rows outside the bed are listed."""
        bed = TestBed.parse("0.6x0.6")
        db = Database(
            records=(
                FingerprintRecordFactory(loc_x=1, loc_y=1),
                FingerprintRecordFactory(loc_x=2, loc_y=0),
            )
        )
        report = validate(db, bed)
        assert [(v.row, v.loc_x) for v in report.bounds_violations] == [(1, 2)]

    def test_bed_spacing_mismatch(self):
        """Test a bed on a different grid pitch is refused."""
        db = make_database(2)
        with pytest.raises(ConfigError) as exc_info:
            validate(db, TestBed.parse("3x1.5", spacing_m=0.5))
        assert exc_info.value.details == {"bed_spacing_m": 0.5, "db_spacing_m": 0.6}

    def test_empty_database(self):
        """Test an empty database reports zeros."""
        report = validate(Database())
        assert report.record_count == 0
        assert report.detected_ap_count == 0


class TestSelection:
    """Tests for record selection."""

    def test_select_keeps_order(self, linear_db):
        """Test selection filters and preserves order."""
        north = select(linear_db, direction=Direction.NORTH)
        assert len(north) == len(linear_db) // 4
        assert all(r.direction == Direction.NORTH for r in north.records)
        assert [r.timestamp for r in north.records] == sorted(r.timestamp for r in north.records)


class TestSynthesize:
    """Tests for toy databases."""

    def test_full_grid(self, small_bed):
        """Test every node gets one record per direction and device."""
        db = synthesize_database(small_bed, devices=("a", "b"))
        assert len(db) == small_bed.node_count * 4 * 2
        assert {(r.loc_x, r.loc_y) for r in db.records} == {
            (i, j) for i in range(small_bed.nx) for j in range(small_bed.ny)
        }

    def test_field_values(self, linear_db):
        """Test noise-free records carry the field at their position."""
        positions = linear_db.positions_m()
        geo = np.array([r.geo for r in linear_db.records])
        assert np.allclose(geo, linear_field(positions), atol=1e-12)

    def test_deterministic(self, small_bed):
        """Test equal seeds give equal databases."""
        a = synthesize_database(small_bed, geo_noise_ut=0.5, seed=3)
        b = synthesize_database(small_bed, geo_noise_ut=0.5, seed=3)
        assert serialize_database(a) == serialize_database(b)

    def test_rss_in_range(self, linear_db):
        """Test synthetic RSS stays in [-110, 0]."""
        rss = linear_db.rss_matrix()
        assert rss.min() >= RSS_SENTINEL
        assert rss.max() <= 0

    def test_field_models(self):
        """Test field lookup by name."""
        assert field_model("constant") is constant_field
        with pytest.raises(ConfigError):
            field_model("unknown")


class TestCommands:
    """Tests for ingest, validate and synth-db subcommands."""

    def test_synth_then_ingest(self, run_command, tmp_path):
        """Test a synthesized database parses back."""
        db_path = tmp_path / "db.csv"
        result = run_command("synth_db", "--bed", "1.2x1.2", "--seed", "1", "--out", db_path)
        assert result.code == 0
        result = run_command("ingest", "--in", db_path, "--out", tmp_path / "clean.csv")
        assert result.code == 0
        assert (tmp_path / "clean.csv").read_text() == db_path.read_text()

    def test_validate_json(self, run_command, db_csv, tmp_path):
        """Test the report is JSON and out-of-bed rows are warned about."""
        out = tmp_path / "report.json"
        result = run_command("validate", "--in", db_csv, "--bed", "1.2x1.2", "--out", out)
        assert result.code == 0
        report = json.loads(out.read_text())
        assert report["record_count"] == 96
        assert report["bounds_violations"]
        assert "outside the bed" in result.err

    def test_parse_error_exit_code(self, run_command, tmp_path):
        """Test a malformed database exits 1 with the error code."""
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        result = run_command("ingest", "--in", path)
        assert result.code == 1
        assert result.err.startswith("CommandError: code=SCHEMA ")
