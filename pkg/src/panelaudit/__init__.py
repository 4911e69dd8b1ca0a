"""panelaudit: leakage-safe machine learning on panel data.

Split strategies, panel-aware cross-validation, lag-feature construction
with leakage linting, from-scratch learners, and an audit harness that
quantifies how much temporal and cross-sectional leakage inflates apparent
out-of-sample performance.
"""

from .panel_core import (
    PanelDataset,
    PanelSchema,
    ValidationPolicy,
    load_panel,
    validate_panel,
    write_panel,
)

__version__ = "0.1.0"
__all__ = [
    "PanelDataset",
    "PanelSchema",
    "ValidationPolicy",
    "load_panel",
    "validate_panel",
    "write_panel",
    "__version__",
]
