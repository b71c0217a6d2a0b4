"""Inverse design of D-pi-A nonlinear-optical molecules.

Group-contribution featurization, Bayesian-regularized neural network
property prediction, and evolutionary structure search, exposed through a
CLI and an HTTP service.
"""

__version__ = "0.1.0"
