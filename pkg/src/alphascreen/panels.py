"""Panel data containers for returns and observed factors.

Both panel types are immutable after construction: values are stored as
read-only float arrays, so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DimensionError
from .linalg import demean_columns, settings

__all__ = ["ReturnPanel", "FactorPanel", "check_aligned"]


def _freeze(values, shape_name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{shape_name} values must be a 2-d matrix")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(
            f"{shape_name} contains a non-finite value at row {bad[0]}, column {bad[1]}"
        )
    arr.setflags(write=False)
    return arr


def _check_strictly_increasing(time_index, what: str):
    for a, b in zip(time_index, time_index[1:]):
        if not a < b:
            raise ValueError(f"{what} time index is not strictly increasing at {a!r} -> {b!r}")


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """Excess returns for ``p`` entities over ``n`` periods.

    values
        (p, n) matrix; row i holds the return series of ``entity_ids[i]``.
    """

    values: np.ndarray
    entity_ids: tuple
    time_index: tuple

    def __post_init__(self):
        arr = _freeze(self.values, "return panel")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "entity_ids", tuple(self.entity_ids))
        object.__setattr__(self, "time_index", tuple(self.time_index))
        p, n = arr.shape
        if p < 1:
            raise DimensionError("return panel needs at least one entity")
        if n < 4:
            raise DimensionError(
                "return panel needs at least 4 periods so each chronological "
                "half supports demeaning plus one regressor"
            )
        if len(self.entity_ids) != p:
            raise DimensionError("entity_ids length does not match row count")
        if len(self.time_index) != n:
            raise DimensionError("time_index length does not match column count")
        _check_strictly_increasing(self.time_index, "return panel")

    @property
    def n_entities(self) -> int:
        return self.values.shape[0]

    @property
    def n_periods(self) -> int:
        return self.values.shape[1]

    def slice_periods(self, start: int, stop: int) -> "ReturnPanel":
        """Panel restricted to the periods ``time_index[start:stop]``."""
        return ReturnPanel(
            self.values[:, start:stop], self.entity_ids, self.time_index[start:stop]
        )


@dataclass(frozen=True, eq=False)
class FactorPanel:
    """Observed factor realizations: one row per period, one column per factor."""

    values: np.ndarray
    names: tuple
    time_index: tuple

    def __post_init__(self):
        arr = _freeze(self.values, "factor panel")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "time_index", tuple(self.time_index))
        n, r = arr.shape
        if len(self.names) != r:
            raise DimensionError("factor names length does not match column count")
        if len(self.time_index) != n:
            raise DimensionError("time_index length does not match row count")
        if n <= r + 1:
            raise DimensionError(
                f"need more than r+1 = {r + 1} periods to regress on {r} factors"
            )
        _check_strictly_increasing(self.time_index, "factor panel")
        sv = np.linalg.svd(demean_columns(arr), compute_uv=False)
        if sv[-1] <= settings.rank_rtol * sv[0]:
            raise DimensionError(
                "factor columns are linearly dependent after demeaning"
            )

    @property
    def n_periods(self) -> int:
        return self.values.shape[0]

    @property
    def n_factors(self) -> int:
        return self.values.shape[1]

    def slice_periods(self, start: int, stop: int) -> "FactorPanel":
        return FactorPanel(
            self.values[start:stop], self.names, self.time_index[start:stop]
        )


def check_aligned(returns: ReturnPanel, factors: FactorPanel):
    """Raise AlignmentError naming the first mismatching period, if any."""
    rt, ft = returns.time_index, factors.time_index
    for k in range(min(len(rt), len(ft))):
        if rt[k] != ft[k]:
            raise AlignmentError(
                f"panels disagree at position {k}: returns period {rt[k]!r} "
                f"vs factors period {ft[k]!r}"
            )
    if len(rt) != len(ft):
        if len(rt) > len(ft):
            raise AlignmentError(
                f"factors panel is missing period {rt[len(ft)]!r}"
            )
        raise AlignmentError(
            f"returns panel is missing period {ft[len(rt)]!r}"
        )
