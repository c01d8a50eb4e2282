"""Pytest configuration and fixtures."""

import io
from contextlib import redirect_stderr, redirect_stdout
from dataclasses import dataclass

import numpy as np
import pytest


@dataclass
class CommandResult:
    code: int
    out: str
    err: str


@pytest.fixture
def run_command(settings):
    """Run manage.py in-process and capture its exit code and output."""
    from apps.core.commands import run as run_manage

    # django.setup() would otherwise rebind log handlers to the captured streams
    settings.LOGGING_CONFIG = None

    def run(*argv) -> CommandResult:
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = run_manage(["manage.py", *(str(a) for a in argv)])
        return CommandResult(code=code, out=out.getvalue(), err=err.getvalue())

    return run


@pytest.fixture
def rng():
    """Fixed-seed generator for test data."""
    from apps.core.rng import make_rng

    return make_rng(1234)


@pytest.fixture
def small_bed():
    """A 3 m x 1.8 m bed: 6 x 4 reference nodes at 0.6 m."""
    from apps.geomap.schemas import TestBed

    return TestBed.parse("3x1.8")


@pytest.fixture
def linear_db(small_bed):
    """Noise-free database of the field (x, y, x + y) over the small bed."""
    from apps.fingerprints.synthetic import linear_field, synthesize_database

    return synthesize_database(small_bed, field=linear_field, seed=0)


@pytest.fixture
def linear_map(linear_db, small_bed):
    """Clough-Tocher map of the linear database."""
    from apps.geomap.maps import build_geomap

    return build_geomap(linear_db, small_bed)


@pytest.fixture
def unit_square_points(rng):
    """200 points in [0, 1)^2."""
    return rng.random((200, 2))


@pytest.fixture
def db_csv(tmp_path, linear_db):
    """The linear database written as CSV."""
    from apps.fingerprints.parser import serialize_database

    path = tmp_path / "db.csv"
    path.write_text(serialize_database(linear_db), encoding="utf-8")
    return path
