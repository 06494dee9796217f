"""
DataFrame builders for the CSV formats the lab writes outside the check table:
adapted fields, tridiagonal operators as triplets, and condition margins.
"""

import numpy as np
import pandas as pd

FIELD_COLUMNS = ["level", "node_index", "grid_index", "value"]
MATRIX_COLUMNS = ["node_index", "row", "col", "value"]
CONDITION_COLUMNS = ["condition", "margin", "holds", "x", "t", "level", "node"]


def field_frame(field, start_level=None, end_level=None):
    """
    Flatten an AdaptedField window into one row per (level, node, grid point)

    Args:
        field (AdaptedField): Field to export
        start_level (int): First level written, defaults to the field's window start
        end_level (int): Last level written, defaults to the field's window end

    Returns:
        pandas.DataFrame: Columns level, node_index, grid_index, value
    """
    start = field.start_level if start_level is None else max(start_level, field.start_level)
    end = field.end_level if end_level is None else min(end_level, field.end_level)
    frames = []
    for k in range(start, end + 1):
        values = field[k]
        nodes, points = np.indices(values.shape)
        frames.append(pd.DataFrame({
            "level": k,
            "node_index": nodes.ravel(),
            "grid_index": points.ravel(),
            "value": values.ravel(),
        }, columns=FIELD_COLUMNS))
    return pd.concat(frames, ignore_index=True)


def matrix_frame(stack, nodes=None):
    """Nonzero entries of a TridiagonalStack as (node_index, row, col, value) triplets"""
    nodes = range(stack.size) if nodes is None else nodes
    rows = []
    for node in nodes:
        for j in range(stack.n_x):
            if j > 0 and stack.lower[node, j] != 0.0:
                rows.append([node, j, j - 1, stack.lower[node, j]])
            if stack.diag[node, j] != 0.0:
                rows.append([node, j, j, stack.diag[node, j]])
            if j < stack.n_x - 1 and stack.upper[node, j] != 0.0:
                rows.append([node, j, j + 1, stack.upper[node, j]])
    return pd.DataFrame(rows, columns=MATRIX_COLUMNS)


def condition_frame(report):
    """One row per certified condition with its margin and argmin sample"""
    return pd.DataFrame(report.to_records(), columns=CONDITION_COLUMNS)
