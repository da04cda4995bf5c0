"""Symptom-check call engine: scripted dialog, confidence-scored intent
classification, uncertainty triage with a human labeling loop, a call
campaign simulator with ground truth, and a Bayesian community
infection-rate estimator."""

__version__ = "0.1.0"
