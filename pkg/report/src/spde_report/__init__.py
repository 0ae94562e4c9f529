from .report import (
    SCHEMA_VERSION,
    ReportSpec,
    SchemaMismatch,
    read_csv_checked,
    read_path_series,
    render_report,
)

__all__ = [
    "SCHEMA_VERSION",
    "ReportSpec",
    "SchemaMismatch",
    "read_csv_checked",
    "read_path_series",
    "render_report",
]
