"""Print a consistency report of a fingerprint database as JSON."""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.fingerprints.parser import parse_database
from apps.fingerprints.validation import validate
from apps.geomap.schemas import TestBed


class Command(WorkbenchCommand):
    help = "Report AP detection counts, per-floor counts and out-of-bed rows"

    def add_arguments(self, parser):
        parser.add_argument("--in", dest="input", type=Path, required=True, help="Database CSV")
        parser.add_argument(
            "--bed", default=None, help="Check grid bounds against WIDTHxHEIGHT (m), e.g. 30x7.2"
        )
        parser.add_argument("--spacing", type=float, default=0.6, help="Grid pitch in metres")
        parser.add_argument("--out", type=Path, default=None, help="Write the JSON report here")

    def handle(self, *args, **options):
        with options["input"].open(newline="", encoding="utf-8") as fh:
            db = parse_database(fh, spacing_m=options["spacing"])
        bed = TestBed.parse(options["bed"], options["spacing"]) if options["bed"] else None
        report = validate(db, bed)

        payload = report.model_dump_json(indent=2)
        if options["out"]:
            options["out"].parent.mkdir(parents=True, exist_ok=True)
            options["out"].write_text(payload + "\n", encoding="utf-8")
        else:
            self.stdout.write(payload)

        if report.bounds_violations:
            self.stderr.write(
                self.style.WARNING(f"{len(report.bounds_violations)} row(s) outside the bed")
            )
