import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from core.exceptions import CONFIG_EXIT_STATUS, WaveStabError
from experiments.artifacts import FORMATS
from experiments.config import ExperimentConfig
from experiments.runners import execute

logger = logging.getLogger(__name__)


class ExperimentCommand(BaseCommand):
    """Shared --config/--preset/--out-dir/--format handling for the experiment verbs"""
    verb = None

    def add_arguments(self, parser):
        parser.add_argument("--config", help="Path to a JSON run config")
        parser.add_argument("--preset", help="Name of a preset under experiments/presets")
        parser.add_argument("--out-dir", dest="out_dir", help="Directory that receives the artifacts")
        parser.add_argument("--format", dest="table_format", choices=FORMATS, default="csv",
                            help="Table format (default: csv)")

    def handle(self, *args, **options):
        try:
            config = ExperimentConfig.load(self.verb, config=options.get("config"), preset=options.get("preset"))
        except serializers.ValidationError as e:
            logger.error(f"Invalid {self.verb} config: {e.detail}")
            raise CommandError(f"Invalid config: {e.detail}", returncode=CONFIG_EXIT_STATUS)
        except WaveStabError as e:
            raise CommandError(str(e), returncode=e.exit_status)

        out_dir = options.get("out_dir") or Path(settings.WAVESTAB_OUTPUT_DIR) / f"{self.verb}-{config.digest}"
        try:
            summary = execute(config, out_dir, options["table_format"])
        except WaveStabError as e:
            logger.error(f"{self.verb} failed: {e}")
            raise CommandError(f"{self.verb} failed: {e}", returncode=e.exit_status)

        self.stdout.write(self.style.SUCCESS(f"{self.verb}: wrote {', '.join(summary.artifacts)} to {out_dir}"))
