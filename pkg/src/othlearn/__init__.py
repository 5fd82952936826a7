"""Workbench for training and comparing Othello evaluation functions.

The pipeline: self-play game generation -> NegaMax label propagation ->
per-phase model fitting (quadratic discriminant, Fisher's linear
discriminant, logistic regression) -> paired-game tournaments with
significance testing.
"""

__version__ = "0.1.0"
