"""Result writer for experiment runs.

Tables are written as CSV with a fixed column order and 17 significant
digits, documents as sorted, indented JSON, so identical runs give
byte-identical files.
"""
import os
import json
import logging

import numpy as np
import pandas as pd

from bergman_lab.errors import ConfigError, NonFiniteError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def assert_finite(name, frame):
    """Raise NonFiniteError if any numeric column of ``frame`` holds NaN or infinity."""
    numeric = frame.select_dtypes(include=[np.number])
    if numeric.empty:
        return
    values = numeric.to_numpy(dtype=complex)
    if not np.all(np.isfinite(values)):
        bad = [column for column in numeric.columns if not np.all(np.isfinite(numeric[column].to_numpy(dtype=complex)))]
        raise NonFiniteError(f"table {name} has non-finite values", {"columns": bad})


def format_floats(frame):
    """Copy of ``frame`` with every float cell rendered as FLOAT_FORMAT text.

    Object columns are included, so mixed columns such as the compare
    region ("all" or a radius) keep full precision too.
    """
    formatted = frame.copy()
    for column in formatted.columns:
        series = formatted[column]
        if pd.api.types.is_float_dtype(series) or series.dtype == object:
            formatted[column] = series.map(lambda v: FLOAT_FORMAT % v if isinstance(v, float) else v)
    return formatted


class ReportWriter:
    """Write experiment tables and documents to an output directory."""

    def __init__(self, output_dir=None):
        """Initialize the writer.

        Args:
            output_dir (str, optional): Directory for result files (current directory by default)

        Raises:
            ConfigError: The directory cannot be created
        """
        self.output_dir = output_dir or os.getcwd()
        try:
            os.makedirs(self.output_dir, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"output directory is not writable: {self.output_dir}") from e

    def write_table(self, name, frame):
        """Write one table as ``<name>.csv``.

        Returns:
            str: Path to the written file
        """
        assert_finite(name, frame)
        filepath = os.path.join(self.output_dir, f"{name}.csv")
        format_floats(frame).to_csv(filepath, index=False, lineterminator="\n")
        logger.info(f"Wrote {len(frame)} rows to {filepath}")
        return filepath

    def write_document(self, name, document):
        """Write one JSON document as ``<name>.json``."""
        filepath = os.path.join(self.output_dir, f"{name}.json")
        with open(filepath, "w") as f:
            json.dump(document, f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"Wrote {filepath}")
        return filepath

    def write(self, output):
        """Write every table and document of an ExperimentOutput in their stored order.

        Returns:
            list: Paths of the written files
        """
        paths = [self.write_table(name, frame) for name, frame in output.tables.items()]
        paths += [self.write_document(name, document) for name, document in output.documents.items()]
        return paths
