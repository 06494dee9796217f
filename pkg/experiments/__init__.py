# Package initialization for experiments module

# Import experiments for easier access
from .duality import DualityExperiment
from .semigroup import SemigroupExperiment
from .energy import EnergyRatioExperiment
from .robustness import RobustnessExperiment
from .gradient import GradientEstimateExperiment
from .contraction import ContractionExperiment
from .conditions import ConditionsExperiment
from .martingale import MartingaleExperiment
from .agreement import SolverAgreementExperiment
from .heat import HeatConvergenceExperiment
from .report import ExperimentReport, CheckRecord

# Registry keyed by the name used in run configs
EXPERIMENTS = {
    experiment.name: experiment
    for experiment in (
        DualityExperiment,
        SemigroupExperiment,
        EnergyRatioExperiment,
        RobustnessExperiment,
        GradientEstimateExperiment,
        ContractionExperiment,
        ConditionsExperiment,
        MartingaleExperiment,
        SolverAgreementExperiment,
        HeatConvergenceExperiment,
    )
}


def create_experiment(config):
    """Instantiate the experiment a validated RunConfig names"""
    return EXPERIMENTS[config.experiment](config)


def list_experiments():
    """One line per experiment: name, what it checks, default options"""
    lines = []
    for name, experiment in EXPERIMENTS.items():
        defaults = ", ".join(f"{key}={value}" for key, value in experiment.defaults.items())
        lines.append(f"{name}: {experiment.description} [defaults: {defaults}]")
    return "\n".join(lines)


# Package metadata
__all__ = [
    'DualityExperiment',
    'SemigroupExperiment',
    'EnergyRatioExperiment',
    'RobustnessExperiment',
    'GradientEstimateExperiment',
    'ContractionExperiment',
    'ConditionsExperiment',
    'MartingaleExperiment',
    'SolverAgreementExperiment',
    'HeatConvergenceExperiment',
    'ExperimentReport',
    'CheckRecord',
    'EXPERIMENTS',
    'create_experiment',
    'list_experiments'
]

__version__ = '0.1.0'
