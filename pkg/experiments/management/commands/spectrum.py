from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Damped discrete spectrum with the PDE overlay and the retained/filtered partition"
    verb = "spectrum"
