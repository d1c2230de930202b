"""Statistical structure learning over an observation table."""

from .citest import CITestResult, ci_test
from .ges import GESResult, ges_search, run_ges
from .notears import NotearsConfig, NotearsResult, notears_h, run_notears
from .pc import PCResult, pc_from_table, pc_search, run_pc
from .score import BICScorer, discrete_bic

__all__ = [
    "BICScorer", "CITestResult", "GESResult", "NotearsConfig", "NotearsResult", "PCResult",
    "ci_test", "discrete_bic", "ges_search", "notears_h", "pc_from_table", "pc_search",
    "run_ges", "run_notears", "run_pc",
]
