"""Accessors for the bundled soccer fixtures: the domain definition, the
reference policy the simulator experiments are built around, and the
minimal contradictory demonstration set."""

from importlib import resources

from .dsl import parse_policy
from .worldio import load_domain

__all__ = [
    "data_path",
    "bundled_domain",
    "bundled_reference",
]


def data_path(name: str):
    """Filesystem path of a bundled data file."""
    return resources.files(__package__).joinpath("data", name)


def bundled_domain():
    return load_domain(data_path("soccer.domain.json"))


def bundled_reference(domain=None):
    domain = domain or bundled_domain()
    text = data_path("reference.asp").read_text(encoding="utf-8")
    return parse_policy(text, domain)
