"""Adversarial training of linear classifiers on separable data."""
from .losses import (
    Dataset,
    LabeledExample,
    Link,
    adversarial_perturbation,
    empirical_risk,
    link_derivative,
    link_value,
    pointwise_loss,
    robust_pointwise_loss,
    robust_risk,
    robust_subgradient,
)
from .trainers import (
    StepSchedule,
    TrainTrace,
    run_alpha_gd,
    run_alpha_perceptron,
    run_alpha_sgd,
    run_generic_adversarial_training,
    run_slow_gd_instance,
)

__version__ = "0.1.0"
