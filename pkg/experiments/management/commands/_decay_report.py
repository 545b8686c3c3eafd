from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Predicted and fitted decay rates over xi and Gamma grids, with the PDE and reference rows"
    verb = "decay-report"
