"""Loading and discretizing multivariate time-series tables.

CSV layout: a header row naming columns, one row per time step, optional
leading ``t`` column with strictly increasing integer stamps. Blank
fields are missing values. Continuous columns are binned at empirical
quantiles; categorical columns are label-encoded.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

MISSING_STATE = -1


@dataclass
class ColumnData:
    """One channel: raw values plus typing.

    Continuous columns hold floats with NaN for missing; categorical
    columns hold the original string labels with "" for missing.
    """

    name: str
    kind: str
    raw: list


@dataclass
class TimeSeriesTable:
    columns: list[ColumnData]
    timestamps: list[int] | None = None

    @property
    def n_steps(self) -> int:
        return len(self.columns[0].raw) if self.columns else 0

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> ColumnData:
        for c in self.columns:
            if c.name == name:
                return c
        raise ValidationError(f"unknown column {name!r}")


def load_csv(path, categorical=()) -> TimeSeriesTable:
    """Read a time-series CSV.

    ``categorical`` lists column names to keep as labels even when every
    value parses as a number. Raises ``ValidationError`` with the row and
    column on ragged rows, bad floats, or out-of-order timestamps.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = [[cell.strip() for cell in row] for row in reader if row]
    unknown = set(categorical) - set(header)
    if unknown:
        raise ValidationError(
            "unknown column in schema: " + ", ".join(sorted(unknown))
        )
    has_t = bool(header) and header[0] == "t"
    names = header[1:] if has_t else header
    if not names:
        raise ValidationError(f"{path}: no data columns")
    if len(set(names)) != len(names):
        raise ValidationError(f"{path}: duplicate column names")
    cells = [[] for _ in names]
    timestamps = [] if has_t else None
    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ValidationError(
                f"{path}: row {r} has {len(row)} fields, expected {len(header)}"
            )
        if has_t:
            try:
                stamp = int(row[0])
            except ValueError:
                raise ValidationError(
                    f"{path}: row {r} timestamp {row[0]!r} is not an integer"
                ) from None
            if timestamps and stamp <= timestamps[-1]:
                raise ValidationError(
                    f"{path}: row {r} timestamp {stamp} does not increase"
                )
            timestamps.append(stamp)
        for c, cell in enumerate(row[1:] if has_t else row):
            cells[c].append(cell)
    columns = []
    for name, col in zip(names, cells):
        if name in categorical:
            columns.append(ColumnData(name, "categorical", col))
            continue
        values = []
        numeric = True
        for r, cell in enumerate(col, start=2):
            if cell == "":
                values.append(float("nan"))
                continue
            try:
                values.append(float(cell))
            except ValueError:
                numeric = False
                break
        if numeric:
            columns.append(ColumnData(name, "continuous", values))
        else:
            columns.append(ColumnData(name, "categorical", col))
    return TimeSeriesTable(columns, timestamps)


@dataclass
class BinSpec:
    """Quantile bins for one continuous column.

    ``cuts`` are interior boundaries (len = n_bins - 1, strictly
    increasing); state j covers (cuts[j-1], cuts[j]].
    ``representative`` maps each state to the value reported for it.
    """

    cuts: np.ndarray
    representative: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.cuts) + 1

    def state_of(self, x: float) -> int:
        if np.isnan(x):
            return MISSING_STATE
        return int(np.searchsorted(self.cuts, x, side="left"))


@dataclass
class LabelMap:
    """Stable label -> state encoding for a categorical column."""

    labels: list[str]
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def n_states(self) -> int:
        return len(self.labels)

    def state_of(self, label: str) -> int:
        if label == "":
            return MISSING_STATE
        if label not in self.index:
            raise ValidationError(f"unseen label {label!r}")
        return self.index[label]


def quantile_cuts(values: np.ndarray, n_bins: int) -> np.ndarray:
    """Interior bin boundaries at the j/n_bins empirical quantiles.

    Duplicate boundaries (heavy ties in the data) are dropped, which
    shrinks the bin count; a constant column collapses to a single bin
    with a warning.
    """
    if n_bins < 1:
        raise ValidationError(f"n_bins {n_bins} < 1")
    clean = values[~np.isnan(values)]
    if clean.size == 0:
        raise ValidationError("column has no observed values to bin")
    qs = np.arange(1, n_bins) / n_bins
    cuts = np.quantile(clean, qs)
    cuts = np.unique(cuts)
    # a boundary at the maximum would leave the top bin unreachable
    cuts = cuts[cuts < clean.max()]
    if len(cuts) + 1 < n_bins:
        warnings.warn(
            f"requested {n_bins} bins, ties reduce to {len(cuts) + 1}",
            stacklevel=2,
        )
    return cuts


def representative_values(cuts: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Per-bin mean of the training values falling in each bin.

    A bin that caught no training point gets the midpoint of its
    boundaries (or the nearest boundary for the open end bins).
    """
    clean = values[~np.isnan(values)]
    states = np.searchsorted(cuts, clean, side="left")
    n_bins = len(cuts) + 1
    reps = np.empty(n_bins)
    for j in range(n_bins):
        hit = clean[states == j]
        if hit.size:
            reps[j] = hit.mean()
        elif n_bins == 1:
            reps[j] = 0.0
        elif j == 0:
            reps[j] = cuts[0]
        elif j == n_bins - 1:
            reps[j] = cuts[-1]
        else:
            reps[j] = 0.5 * (cuts[j - 1] + cuts[j])
    return reps


def fit_bins(values, n_bins: int) -> BinSpec:
    values = np.asarray(values, dtype=float)
    cuts = quantile_cuts(values, n_bins)
    return BinSpec(cuts, representative_values(cuts, values))


def apply_bins(spec: BinSpec, values) -> np.ndarray:
    """Map values to states; NaN maps to the missing marker."""
    values = np.asarray(values, dtype=float)
    states = np.searchsorted(spec.cuts, values, side="left").astype(np.int64)
    states[np.isnan(values)] = MISSING_STATE
    return states


def encode_table(table: TimeSeriesTable, n_bins: int = 7, specs=None):
    """Discretize every column of ``table``.

    Returns (states array (n_steps, n_vars) with -1 for missing, codecs)
    where codecs[i] is the fitted BinSpec or LabelMap per column. Pass
    ``specs`` to reuse codecs fitted elsewhere.
    """
    n = len(table.columns)
    out = np.full((table.n_steps, n), MISSING_STATE, dtype=np.int64)
    codecs = []
    for i, col in enumerate(table.columns):
        if col.kind == "continuous":
            values = np.asarray(col.raw, dtype=float)
            spec = specs[i] if specs else fit_bins(values, n_bins)
            out[:, i] = apply_bins(spec, values)
        else:
            if specs:
                spec = specs[i]
            else:
                labels = sorted({lab for lab in col.raw if lab != ""})
                if not labels:
                    raise ValidationError(f"column {col.name}: no observed labels")
                spec = LabelMap(labels)
            out[:, i] = [spec.state_of(lab) for lab in col.raw]
        codecs.append(spec)
    return out, codecs
