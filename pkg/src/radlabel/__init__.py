"""Three-state label extraction from radiology reports and its evaluation stack.

The package covers the full desk-scale workflow: anonymization, zero-shot
template filling over a pluggable chat endpoint, hierarchy-consistent label
sheets, human adjudication, inclusive/exclusive uncertainty policies,
stratified splitting, and statistical evaluation of any classifier's score
matrix (ROC/PR, Youden thresholds, DeLong tests, bootstrap intervals,
Benjamini-Hochberg correction).
"""

from .core import (
    BinaryLabelSheet,
    LabelSheet,
    LabelState,
    LabelTemplate,
    ReportDocument,
    ScoreMatrix,
    get_template,
    register_template,
    severity,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryLabelSheet",
    "LabelSheet",
    "LabelState",
    "LabelTemplate",
    "ReportDocument",
    "ScoreMatrix",
    "get_template",
    "register_template",
    "severity",
    "__version__",
]
