"""File formats: CSV data tables, JSON scenarios and reports, run manifests."""

from .documents import (
    SCHEMA_VERSION,
    read_report,
    read_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate_report,
    write_report,
    write_scenario,
)
from .manifest import RunManifest, digest_bytes, digest_file
from .tables import (
    SCALING_COLUMNS,
    TEMPERATURE_COLUMNS,
    read_map,
    read_series,
    read_sweep,
    write_map,
    write_series,
    write_sweep,
)

__all__ = [
    "SCHEMA_VERSION",
    "SCALING_COLUMNS",
    "TEMPERATURE_COLUMNS",
    "RunManifest",
    "digest_bytes",
    "digest_file",
    "read_map",
    "read_report",
    "read_scenario",
    "read_series",
    "read_sweep",
    "scenario_from_dict",
    "scenario_to_dict",
    "validate_report",
    "write_map",
    "write_report",
    "write_scenario",
    "write_series",
    "write_sweep",
]
