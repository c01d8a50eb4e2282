"""Shared base for workbench management commands and the exit-code runner.

Commands subclass :class:`WorkbenchCommand`; library errors surface as one
``CommandError: code=<CODE> message="..."`` line on stderr with exit code 1.
Usage errors exit 2. Subcommands may be spelled with hyphens
(``build-map``) as well as Django's module names (``build_map``).
"""

import logging
import sys
from typing import Any, Optional

import django
from django.conf import settings
from django.core.management import ManagementUtility, get_commands
from django.core.management.base import BaseCommand, CommandError

from .exceptions import WorkbenchError
from .logging import CommandContextFilter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def error_line(code: str, message: str) -> str:
    message = message.replace('"', "'").replace("\n", " ")
    return f'code={code} message="{message}"'


class WorkbenchCommand(BaseCommand):
    """
    Base class for every workbench subcommand.

    Set ``stochastic = True`` to get a ``--seed`` flag defaulting to
    ``settings.DEFAULT_SEED``.
    """

    stochastic = False
    requires_system_checks: list[str] = []

    @property
    def command_name(self) -> str:
        return type(self).__module__.rsplit(".", 1)[-1]

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        if self.stochastic:
            parser.add_argument(
                "--seed",
                type=int,
                default=settings.DEFAULT_SEED,
                help=f"Seed for every random draw (default: {settings.DEFAULT_SEED})",
            )
        return parser

    def execute(self, *args: Any, **options: Any) -> Optional[str]:
        context = CommandContextFilter(self.command_name)
        handlers = logging.getLogger("apps").handlers
        for handler in handlers:
            handler.addFilter(context)
        try:
            return super().execute(*args, **options)
        except WorkbenchError as exc:
            logger.debug("Command %s failed", self.command_name, exc_info=True)
            raise CommandError(error_line(exc.code, exc.message), returncode=EXIT_RUNTIME) from exc
        except OSError as exc:
            path = getattr(exc, "filename", None) or ""
            raise CommandError(
                error_line("IO", f"{exc.strerror or exc} {path}".strip()), returncode=EXIT_RUNTIME
            ) from exc
        finally:
            for handler in handlers:
                handler.removeFilter(context)


def run(argv: list[str]) -> int:
    """Run ``manage.py``-style ``argv`` and return the process exit code."""
    argv = list(argv)
    if len(argv) > 1 and not argv[1].startswith("-"):
        argv[1] = argv[1].replace("-", "_")
    django.setup()
    subcommand = argv[1] if len(argv) > 1 else "help"
    if not subcommand.startswith("-") and subcommand != "help" and subcommand not in get_commands():
        sys.stderr.write(f"Unknown command: {subcommand!r}. Type 'manage.py help' for usage.\n")
        return EXIT_USAGE
    try:
        ManagementUtility(argv).execute()
    except SystemExit as exc:
        if exc.code is None:
            return EXIT_OK
        return exc.code if isinstance(exc.code, int) else EXIT_RUNTIME
    return EXIT_OK
