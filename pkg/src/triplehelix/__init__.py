"""Synergy among the geographic, organizational and technological attributes of firms.

The three-way transmission (signed mutual information) between geography,
size class and technology class of firm records measures how much the
configuration reduces uncertainty. :func:`decompose` splits it into
regional contributions and a between-region residual.
"""

from .decomposition import (
    GroupContribution,
    SynergyReport,
    assemble_report,
    decompose,
    delta_contribution,
    share_above_group,
)
from .entropy import (
    Codebook,
    ContingencyTensor,
    Distribution,
    InformationValue,
    build_tensor,
    conditional_transmission2,
    entropy,
    joint_entropy,
    transmission2,
    transmission3,
)
from .errors import ConfigError, DataError, EmptyDatasetError, ValidationError
from .ingestion import FirmRecord, IngestIssue, Schema, dataset_profile, filter_window, parse_records
from .pipeline import AnalysisConfig, run_pipeline
from .report import export_region_values, rank_correlations, render_table
from .taxonomy import classify_sector, normalize_city, resolve_geo, size_class, tech_category

__version__ = "0.1.0"
