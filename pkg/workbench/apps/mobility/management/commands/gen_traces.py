"""Generate random-waypoint traces over a test bed.

Usage:
    python manage.py gen_traces --bed 30x7.2 --steps 100 --n 50000 --seed 42 --out traces.csv
    python manage.py gen_traces --model gamma --shape 2 --bed 30x7.2 --steps 20000 --out g.csv
"""

from pathlib import Path

import numpy as np

from apps.core.commands import WorkbenchCommand
from apps.core.utils import build_config
from apps.geomap.schemas import TestBed
from apps.metrics.plots import emit_trace, emit_waypoint_density
from apps.mobility.schemas import GammaSpeed, RwpConfig, TraceModel
from apps.mobility.storage import write_traces
from apps.mobility.waypoint import generate_traces


class Command(WorkbenchCommand):
    help = "Generate random-waypoint (or Gamma-speed RWP) traces"
    stochastic = True

    def add_arguments(self, parser):
        parser.add_argument("--model", choices=[m.value for m in TraceModel], default="rwp")
        parser.add_argument("--bed", required=True, help="WIDTHxHEIGHT in metres, e.g. 30x7.2")
        parser.add_argument("--spacing", type=float, default=0.6, help="Grid pitch in metres")
        parser.add_argument("--steps", type=int, required=True, help="Positions per trace")
        parser.add_argument("--n", type=int, default=1, help="Number of traces")
        parser.add_argument("--v-min", type=float, default=0.5, help="Minimum speed (m/s)")
        parser.add_argument("--v-max", type=float, default=1.5, help="Maximum speed (m/s)")
        parser.add_argument("--max-pause", type=float, default=0.0, help="Maximum pause (s)")
        parser.add_argument("--dt", type=float, default=1.0, help="Step duration (s)")
        parser.add_argument("--shape", type=float, default=2.0, help="Gamma shape k")
        parser.add_argument("--scale", type=float, default=0.5, help="Gamma scale theta")
        parser.add_argument("--out", type=Path, required=True, help="Output trace CSV")
        parser.add_argument(
            "--plot-dir", type=Path, default=None, help="Plot trace 0 and the waypoint density here"
        )

    def handle(self, *args, **options):
        bed = TestBed.parse(options["bed"], options["spacing"])
        cfg = build_config(
            RwpConfig,
            bed=bed,
            n_steps=options["steps"],
            v_min=options["v_min"],
            v_max=options["v_max"],
            max_pause_s=options["max_pause"],
            step_dt_s=options["dt"],
            seed=options["seed"],
        )
        model = TraceModel(options["model"])
        gamma = None
        if model is TraceModel.GAMMA:
            gamma = build_config(GammaSpeed, shape_k=options["shape"], scale_theta=options["scale"])

        traces = generate_traces(cfg, options["n"], model=model, gamma=gamma)
        write_traces(traces, options["out"])
        self.stdout.write(
            self.style.SUCCESS(
                f"Wrote {len(traces)} {model.value} trace(s) of {cfg.n_steps} steps "
                f"to {options['out']}"
            )
        )

        if options["plot_dir"]:
            plot_dir = options["plot_dir"]
            waypoints = np.vstack([t.waypoints for t in traces])
            for path in (
                *emit_trace(traces[0].positions, bed, plot_dir / "trace_0"),
                *emit_waypoint_density(waypoints, bed, plot_dir / "waypoint_density"),
            ):
                self.stdout.write(f"  {path}")
