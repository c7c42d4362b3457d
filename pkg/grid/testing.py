"""Helpers shared by the test suites of every app that needs a network."""
from pathlib import Path

from django.conf import settings

from .matpower import load_case
from .services import build_network

CASES_DIR = Path(__file__).resolve().parent / 'cases'


def fixture_case(name):
    return load_case(CASES_DIR / f'{name}.m')


def fixture_network(name):
    return build_network(fixture_case(name))


def pglib_case_path(name):
    """Path of a PGLib-OPF case under PGLIB_OPF_DIR (may not exist)"""
    return Path(settings.PGLIB_OPF_DIR) / f'pglib_opf_{name}.m'
