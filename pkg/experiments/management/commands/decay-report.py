# `manage.py decay-report`; the hyphenated module cannot be imported by name elsewhere
from ._decay_report import Command  # noqa: F401
