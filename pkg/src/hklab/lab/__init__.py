"""Numerical checks of the intermediate inequalities behind the heat kernel bounds."""
from .common import HypothesisError
from .samples import SampleError, SolutionSample, lipschitz_weight, random_nonneg
from .suite import RUNNERS, Job, default_jobs, run_job, run_jobs

__all__ = ["HypothesisError", "SampleError", "SolutionSample", "lipschitz_weight", "random_nonneg",
           "RUNNERS", "Job", "default_jobs", "run_job", "run_jobs"]
