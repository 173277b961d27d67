"""Evaluation harness. Experiments and reports live in src.evaluation.experiments and src.evaluation.report."""

from src.evaluation.harness import EvalReport, TrialRecord, evaluate, trial_seeds
from src.evaluation.exceptions import ReportError

__all__ = ['EvalReport', 'TrialRecord', 'evaluate', 'trial_seeds', 'ReportError']
