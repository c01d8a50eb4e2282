"""Generate a toy fingerprint database on the full reference grid of a bed.

Usage:
    python manage.py synth_db --bed 30x7.2 --field linear --out db.csv --seed 7
"""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.fingerprints.parser import serialize_database
from apps.fingerprints.schemas import HEADINGS, Direction
from apps.fingerprints.synthetic import FIELD_MODELS, field_model, synthesize_database
from apps.geomap.schemas import TestBed


class Command(WorkbenchCommand):
    help = "Synthesize a fingerprint database (field model + path-loss RSS)"
    stochastic = True

    def add_arguments(self, parser):
        parser.add_argument("--bed", required=True, help="WIDTHxHEIGHT in metres, e.g. 30x7.2")
        parser.add_argument("--spacing", type=float, default=0.6, help="Grid pitch in metres")
        parser.add_argument("--field", choices=sorted(FIELD_MODELS), default="linear")
        parser.add_argument("--floor", default="4F")
        parser.add_argument("--building", default="IBSS")
        parser.add_argument("--devices", nargs="+", default=["device-a"])
        parser.add_argument(
            "--directions",
            nargs="+",
            choices=[d.value for d in Direction],
            default=[d.value for d in HEADINGS],
        )
        parser.add_argument("--aps", type=int, default=8, help="Number of transmitting APs")
        parser.add_argument("--geo-noise", type=float, default=0.0, help="Field noise sigma (uT)")
        parser.add_argument("--rss-noise", type=float, default=2.0, help="RSS noise sigma (dB)")
        parser.add_argument("--out", type=Path, required=True, help="Output CSV")

    def handle(self, *args, **options):
        bed = TestBed.parse(options["bed"], options["spacing"])
        db = synthesize_database(
            bed,
            field=field_model(options["field"]),
            floor=options["floor"],
            building=options["building"],
            devices=options["devices"],
            directions=[Direction(d) for d in options["directions"]],
            n_aps=options["aps"],
            geo_noise_ut=options["geo_noise"],
            rss_noise_db=options["rss_noise"],
            seed=options["seed"],
        )
        options["out"].parent.mkdir(parents=True, exist_ok=True)
        options["out"].write_text(serialize_database(db), encoding="utf-8")
        self.stdout.write(
            self.style.SUCCESS(
                f"Wrote {len(db)} record(s) over {bed.node_count} reference points "
                f"to {options['out']}"
            )
        )
