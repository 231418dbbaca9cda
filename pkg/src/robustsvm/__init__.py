"""Adversarially robust kernel SVMs trained with doubly stochastic gradients,
an evasion-attack suite (FGSM, PGD, C&W-L2, ZOO-ADAM), and a benchmark
harness for robustness and convergence studies."""

from .attacks import AttackConfig, cw_l2, fgsm, pgd, run_attack, zoo_adam
from .config import Constant, Diminishing, TrainConfig, one_pass_iterations, parse_schedule
from .errors import DataFormatError, InputError, NumericalError
from .estimator import AdversarialKernelSVM
from .features import FeatureBlock, approx_kernel, phi, sample_block
from .kernels import (
    AdversarialBudget,
    RBFKernel,
    epsilon_prime,
    kernel_eval,
    regularized_hinge,
    worst_case_perturbation,
)
from .model import Model, Prediction, predict, predict_labels
from .training import EvalTrace, TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "AdversarialBudget",
    "AdversarialKernelSVM",
    "AttackConfig",
    "Constant",
    "DataFormatError",
    "Diminishing",
    "EvalTrace",
    "FeatureBlock",
    "InputError",
    "Model",
    "NumericalError",
    "Prediction",
    "RBFKernel",
    "TrainConfig",
    "TrainResult",
    "approx_kernel",
    "cw_l2",
    "epsilon_prime",
    "fgsm",
    "kernel_eval",
    "one_pass_iterations",
    "parse_schedule",
    "pgd",
    "phi",
    "predict",
    "predict_labels",
    "regularized_hinge",
    "run_attack",
    "sample_block",
    "train",
    "worst_case_perturbation",
    "zoo_adam",
    "__version__",
]
