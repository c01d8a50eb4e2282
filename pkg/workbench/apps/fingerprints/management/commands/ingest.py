"""Parse a fingerprint CSV and report what was read.

Usage:
    python manage.py ingest --in db.csv
    python manage.py ingest --in db.csv --out clean.csv
"""

import logging
from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.fingerprints.parser import parse_database, serialize_database

logger = logging.getLogger(__name__)


class Command(WorkbenchCommand):
    help = "Parse a fingerprint database CSV (optionally rewrite it canonically)"

    def add_arguments(self, parser):
        parser.add_argument("--in", dest="input", type=Path, required=True, help="Database CSV")
        parser.add_argument(
            "--out", type=Path, default=None, help="Write the canonical 529-column CSV here"
        )
        parser.add_argument("--spacing", type=float, default=0.6, help="Grid pitch in metres")

    def handle(self, *args, **options):
        with options["input"].open(newline="", encoding="utf-8") as fh:
            db = parse_database(fh, spacing_m=options["spacing"])

        floors = sorted({r.floor for r in db.records})
        self.stdout.write(
            self.style.SUCCESS(f"Parsed {len(db)} record(s) from {options['input']}")
        )
        self.stdout.write(f"Floors: {', '.join(floors) or '-'}")

        if options["out"]:
            options["out"].parent.mkdir(parents=True, exist_ok=True)
            options["out"].write_text(serialize_database(db), encoding="utf-8")
            self.stdout.write(f"Wrote {options['out']}")
