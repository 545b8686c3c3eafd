from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Observability ratios of the control-free system across meshes"
    verb = "observability"
