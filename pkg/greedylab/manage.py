#!/usr/bin/env python
"""greedylab command-line entry point.

Experiment subcommands (space, greedy, cheb, sigma, param, example, bounds,
report) are management commands of the ``cli`` app.
"""
import os
import sys


def main():
    """Run a greedylab or Django administrative command."""
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "greedylab.settings")
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Is it installed and available on your "
            "PYTHONPATH environment variable?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == "__main__":
    main()
