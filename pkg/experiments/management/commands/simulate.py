from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Integrate one run and write the energy trace, summary and log-energy plot"
    verb = "simulate"
