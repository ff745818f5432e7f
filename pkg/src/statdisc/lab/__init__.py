"""Experiment harness: generators, the minimality search and campaigns."""

from .experiment import (
    ExperimentConfig,
    TrialRecord,
    conjecture_trial,
    run_experiment,
    run_trial,
)
from .generators import KINDS, random_instance, random_quadric
from .schema import REPORT_SCHEMA, SCHEMA_ID, validate_report
from .search import SearchResult, search_stationary_minimal

__all__ = [
    "ExperimentConfig", "TrialRecord", "conjecture_trial", "run_experiment", "run_trial",
    "KINDS", "random_instance", "random_quadric", "REPORT_SCHEMA", "SCHEMA_ID",
    "validate_report", "SearchResult", "search_stationary_minimal",
]
