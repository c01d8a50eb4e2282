"""Kalman-smooth the field (and optionally orientation) columns of a database.

Rows are grouped by (floor, building, device, direction) and each group is
filtered as one stream in file order.

Usage:
    python manage.py filter --in db.csv --out smooth.csv --q 0.01 --r 1.0
"""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.filters.kalman import DEFAULT_Q, DEFAULT_R, filter_groups
from apps.fingerprints.parser import parse_database, serialize_database
from apps.fingerprints.schemas import Database


class Command(WorkbenchCommand):
    help = "Kalman-filter GeoX/GeoY/GeoZ per capture group"

    def add_arguments(self, parser):
        parser.add_argument("--in", dest="input", type=Path, required=True, help="Database CSV")
        parser.add_argument("--out", type=Path, required=True, help="Filtered database CSV")
        parser.add_argument("--q", type=float, default=DEFAULT_Q, help="Process noise variance")
        parser.add_argument("--r", type=float, default=DEFAULT_R, help="Measurement noise variance")
        parser.add_argument("--ori", action="store_true", help="Also filter OriX/OriY/OriZ")

    def handle(self, *args, **options):
        with options["input"].open(newline="", encoding="utf-8") as fh:
            db = parse_database(fh)
        if not db.records:
            self.stdout.write(self.style.WARNING("No records to filter"))
            options["out"].write_text(serialize_database(db), encoding="utf-8")
            return

        keys = [(r.floor, r.building, r.device, r.direction) for r in db.records]
        geo = filter_groups(keys, [r.geo for r in db.records], options["q"], options["r"])
        ori = None
        if options["ori"]:
            ori = filter_groups(keys, [r.ori for r in db.records], options["q"], options["r"])

        records = []
        for row, record in enumerate(db.records):
            update = {"geo": tuple(float(v) for v in geo[row])}
            if ori is not None:
                update["ori"] = tuple(float(v) for v in ori[row])
            records.append(record.model_copy(update=update))

        filtered = Database(records=tuple(records), spacing_m=db.spacing_m)
        options["out"].parent.mkdir(parents=True, exist_ok=True)
        options["out"].write_text(serialize_database(filtered), encoding="utf-8")
        self.stdout.write(
            self.style.SUCCESS(
                f"Filtered {len(db)} record(s) in {len(set(keys))} group(s) -> {options['out']}"
            )
        )
