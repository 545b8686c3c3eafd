#!/usr/bin/env python
"""
Command-line entry point.

    python manage.py spectrum --preset desk-fd
    python manage.py simulate --config run.json --out-dir runs/desk
    python manage.py observability --preset observability-fd
    python manage.py decay-report --preset decay-report --format json
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'wavestab.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError("Django is not installed; pip install -r requirements.txt") from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
