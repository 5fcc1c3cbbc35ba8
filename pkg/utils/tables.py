"""
Table IO
Numeric TSV/CSV reading with cell-level errors, and fixed-precision writing
"""
import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd

from config import SIGNIFICANT_DIGITS
from errors import DataError, NonNumericCellError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = f"%.{SIGNIFICANT_DIGITS}g"


def separator_for(path: Union[str, Path]) -> str:
    return "," if str(path).lower().endswith(".csv") else "\t"


def read_numeric_table(path: Union[str, Path]) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """
    Read a header-first table of numbers (rows = samples).
    Missing or non-numeric cells are errors naming the row and column.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, sep=separator_for(path), dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Cannot parse {path}: {e}")

    if frame.shape[1] == 0 or frame.shape[0] == 0:
        raise DataError(f"{path} holds no data")

    values = np.empty(frame.shape, dtype=float)
    for col, name in enumerate(frame.columns):
        cells = frame[name].str.strip()
        numbers = pd.to_numeric(cells, errors="coerce")
        bad = numbers.isna() | (cells == "") | ~np.isfinite(numbers.fillna(0.0))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise NonNumericCellError(
                f"{path}: column '{name}', data row {row + 1} is not a number: {frame[name].iloc[row]!r}"
            )
        # to_numeric is not correctly rounded on 17-digit text
        values[:, col] = cells.astype(float).to_numpy()

    logger.debug(f"Read {values.shape[0]} x {values.shape[1]} table from {path}")
    return values, tuple(str(c) for c in frame.columns)


def write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    """Write a long-format table as TSV with six significant digits"""
    frame.to_csv(path, sep="\t", index=False, float_format=FLOAT_FORMAT, na_rep="NA")


def read_frame(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    try:
        return pd.read_csv(path, sep=separator_for(path))
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Cannot parse {path}: {e}")
