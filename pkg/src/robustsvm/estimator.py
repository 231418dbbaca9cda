"""scikit-learn style front end for the doubly stochastic adversarial trainer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .config import Constant, Diminishing, Schedule, TrainConfig, parse_schedule
from .errors import InputError
from .kernels import RBFKernel
from .model import Model
from .training import EvalTrace, train


class AdversarialKernelSVM(ClassifierMixin, BaseEstimator):
    """Binary RBF-kernel SVM hardened by adversarial training.

    Fits the worst-case hinge objective with doubly stochastic gradients:
    every iteration draws a data batch and a fresh seeded random-feature
    block, so the fitted model stores coefficient blocks plus seeds and
    regenerates features on demand.

    Parameters
    ----------
    C : float
        Regularization trade-off in front of the data term.
    gamma : float
        RBF bandwidth, k(x, x') = exp(-gamma ||x - x'||^2).
    epsilon : float
        Input-space L2 perturbation budget trained against; 0 recovers
        plain (non-adversarial) doubly stochastic training.
    schedule : str
        'diminishing' (step theta/t) or 'constant' (step eta); also accepts
        the combined form 'diminishing:1.0' / 'constant:0.1', in which case
        step_size is ignored.
    step_size : float
        theta for the diminishing schedule (in (1/2, 1]), eta for the
        constant one (in (0, 1)).
    iterations, batch_size, block_size : int
        Loop length, samples per iteration, random features per iteration.
    learn_bias : bool
        Update the intercept with the gated subgradient; off by default.
    random_state : int
        Master seed; training, feature regeneration and prediction are
        deterministic functions of it.

    Attributes
    ----------
    model_ : Model
        The fitted coefficient blocks, seeds and tracked norm.
    classes_ : ndarray of shape (2,)
        Always [-1, 1].
    """

    def __init__(
        self,
        C: float = 1.0,
        gamma: float = 1.0,
        epsilon: float = 0.0,
        schedule: str = "diminishing",
        step_size: float = 1.0,
        iterations: int = 100,
        batch_size: int = 32,
        block_size: int = 256,
        learn_bias: bool = False,
        random_state: int = 0,
    ):
        self.C = C
        self.gamma = gamma
        self.epsilon = epsilon
        self.schedule = schedule
        self.step_size = step_size
        self.iterations = iterations
        self.batch_size = batch_size
        self.block_size = block_size
        self.learn_bias = learn_bias
        self.random_state = random_state

    def _schedule(self) -> Schedule:
        if ":" in self.schedule:
            return parse_schedule(self.schedule)
        if self.schedule == "diminishing":
            return Diminishing(self.step_size)
        if self.schedule == "constant":
            return Constant(self.step_size)
        raise InputError(f"unknown schedule {self.schedule!r}")

    def _config(self) -> TrainConfig:
        return TrainConfig(
            C=self.C,
            epsilon=self.epsilon,
            schedule=self._schedule(),
            batch_size=self.batch_size,
            block_size=self.block_size,
            iterations=self.iterations,
            master_seed=self.random_state,
            learn_bias=self.learn_bias,
        )

    def fit(self, X, y, trace: EvalTrace | None = None):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        result = train(X, y, self._config(), RBFKernel(gamma=self.gamma), trace=trace)
        self.model_ = result.model
        self.stats_ = result.stats
        self.classes_ = np.array([-1, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return self.model_.decision_function(X)

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return np.where(scores >= 0.0, 1, -1).astype(np.int64)

    def input_gradient(self, X) -> np.ndarray:
        """Gradient of the decision score with respect to the inputs."""
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return self.model_.input_gradient(X)

    def save(self, path) -> None:
        check_is_fitted(self, "model_")
        self.model_.save(path)

    @classmethod
    def from_model(cls, model: Model) -> "AdversarialKernelSVM":
        """Wrap an existing Model (e.g. one loaded from disk) as an estimator."""
        cfg = model.config
        est = cls(
            C=cfg.C,
            gamma=model.kernel.gamma,
            epsilon=cfg.epsilon,
            schedule="diminishing" if isinstance(cfg.schedule, Diminishing) else "constant",
            step_size=cfg.schedule.theta if isinstance(cfg.schedule, Diminishing) else cfg.schedule.eta,
            iterations=cfg.iterations,
            batch_size=cfg.batch_size,
            block_size=cfg.block_size,
            learn_bias=cfg.learn_bias,
            random_state=cfg.master_seed,
        )
        est.model_ = model
        est.classes_ = np.array([-1, 1])
        est.n_features_in_ = model.d
        return est
