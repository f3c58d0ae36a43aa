"""Typed tabular data: variable specs, CSV ingestion, centering and encoding."""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"

_KIND_ALIASES = {
    "continuous": CONTINUOUS,
    "g": CONTINUOUS,
    "gaussian": CONTINUOUS,
    "categorical": CATEGORICAL,
    "c": CATEGORICAL,
}


class DataError(ValueError):
    """Raised for malformed, inconsistent or out-of-range input data."""


@dataclass(frozen=True)
class VariableSpec:
    name: str
    kind: str = CONTINUOUS
    levels: int = 1
    labels: Optional[tuple] = None

    def __post_init__(self):
        kind = _KIND_ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise DataError(f"variable {self.name!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == CONTINUOUS and self.levels != 1:
            raise DataError(f"variable {self.name!r}: continuous variables have levels=1")
        if kind == CATEGORICAL and self.levels < 2:
            raise DataError(f"variable {self.name!r}: categorical variables need levels >= 2")
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.levels or len(set(labels)) != len(labels):
                raise DataError(f"variable {self.name!r}: need {self.levels} distinct labels")
            object.__setattr__(self, "labels", labels)

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    def to_dict(self) -> dict:
        out = {"name": self.name, "kind": self.kind, "levels": self.levels}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "VariableSpec":
        labels = d.get("labels")
        return cls(d["name"], d["kind"], int(d["levels"]), tuple(labels) if labels else None)


def spec_hash(spec: Sequence[VariableSpec]) -> str:
    """Short, stable digest identifying a variable specification."""
    text = ";".join(f"{v.name},{v.kind},{v.levels}" for v in spec)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _check_spec(spec: Sequence[VariableSpec]) -> tuple:
    spec = tuple(spec)
    names = [v.name for v in spec]
    if len(set(names)) != len(names):
        raise DataError("variable names must be unique")
    return spec


def data_fingerprint(values: np.ndarray) -> str:
    """Digest of a value matrix; identifies the training data of a model."""
    return hashlib.sha256(np.ascontiguousarray(values, dtype=float).tobytes()).hexdigest()[:16]


@dataclass(frozen=True)
class Dataset:
    """An n-by-p table with one :class:`VariableSpec` per column.

    Categorical cells hold integer codes ``1..K`` (stored as floats).
    ``means`` is the per-column mean subtracted by :func:`center_continuous`
    (NaN for categorical columns), or ``None`` if the data is uncentered.
    """

    spec: tuple
    values: np.ndarray
    means: Optional[np.ndarray] = None

    def __post_init__(self):
        spec = _check_spec(self.spec)
        object.__setattr__(self, "spec", spec)
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(spec):
            raise DataError(
                f"values must be an n x {len(spec)} matrix, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"missing or non-finite value at row {bad[0] + 1}, column {spec[bad[1]].name!r}")
        for j, v in enumerate(spec):
            if v.is_categorical:
                col = values[:, j]
                ok = (col == np.round(col)) & (col >= 1) & (col <= v.levels)
                if not ok.all():
                    i = int(np.argmin(ok))
                    raise DataError(
                        f"row {i + 1}, column {v.name!r}: category code {col[i]:g} "
                        f"outside 1..{v.levels}"
                    )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.means is not None:
            means = np.array(self.means, dtype=float)
            means.setflags(write=False)
            object.__setattr__(self, "means", means)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> list:
        return [v.name for v in self.spec]

    @property
    def is_centered(self) -> bool:
        return self.means is not None

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def codes(self, j: int) -> np.ndarray:
        """Integer category codes of categorical column ``j``."""
        return self.values[:, j].astype(np.int64)

    def subset(self, rows) -> "Dataset":
        """Row subset; keeps the recorded centering state."""
        return replace(self, values=self.values[np.asarray(rows)])

    def uncentered(self) -> np.ndarray:
        """Values with the recorded continuous means added back."""
        if self.means is None:
            return self.values.copy()
        out = self.values.copy()
        cont = ~np.isnan(self.means)
        out[:, cont] += self.means[cont]
        return out


@dataclass(frozen=True)
class TimeIndex:
    """Measurement day and within-day beep number for each row."""

    day: np.ndarray = field(repr=False)
    beep: np.ndarray = field(repr=False)

    def __post_init__(self):
        day = np.asarray(self.day, dtype=np.int64)
        beep = np.asarray(self.beep, dtype=np.int64)
        if day.shape != beep.shape or day.ndim != 1:
            raise DataError("day and beep must be 1-d sequences of equal length")
        same_day = day[1:] == day[:-1]
        if np.any(day[1:] < day[:-1]) or np.any(same_day & (beep[1:] <= beep[:-1])):
            raise DataError("time index must be sorted by (day, beep), strictly increasing within day")
        object.__setattr__(self, "day", day)
        object.__setattr__(self, "beep", beep)

    def __len__(self):
        return len(self.day)


def load_spec(path) -> list:
    """Read a sidecar spec file with one ``name,kind,levels[,labels]`` line per variable.

    Labels, when given, are ``|``-separated and fix the category order.
    Blank lines and lines starting with ``#`` are ignored.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"spec file not found: {path}")
    spec = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [s.strip() for s in line.split(",")]
        if len(parts) not in (3, 4):
            raise DataError(f"{path}:{lineno}: expected name,kind,levels[,labels]")
        try:
            levels = int(parts[2])
        except ValueError:
            raise DataError(f"{path}:{lineno}: levels must be an integer") from None
        labels = tuple(parts[3].split("|")) if len(parts) == 4 and parts[3] else None
        spec.append(VariableSpec(parts[0], parts[1], levels, labels))
    return list(_check_spec(spec))


def spec_text(spec: Sequence[VariableSpec], header_lines: Sequence[str] = ()) -> str:
    lines = [f"# {h}" for h in header_lines]
    for v in spec:
        line = f"{v.name},{v.kind},{v.levels}"
        if v.labels is not None:
            line += "," + "|".join(v.labels)
        lines.append(line)
    return "\n".join(lines) + "\n"


def write_spec(spec: Sequence[VariableSpec], path, header_lines: Sequence[str] = ()) -> None:
    Path(path).write_text(spec_text(spec, header_lines), encoding="utf-8")


def _data_lines(path: Path):
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return csv.reader(lines)


def load_csv(path, spec: Sequence[VariableSpec]) -> Dataset:
    """Load a comma-separated file with a header row into a validated :class:`Dataset`.

    Categorical columns may hold integer codes ``1..K`` or arbitrary labels.
    Labels are mapped to codes by the order declared in the spec when present,
    otherwise by order of first appearance.
    """
    path = Path(path)
    spec = _check_spec(spec)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    reader = _data_lines(path)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    names = [v.name for v in spec]
    if header != names:
        raise DataError(f"{path}: header {header} does not match spec names {names}")
    rows = [r for r in reader if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data rows")

    n, p = len(rows), len(spec)
    values = np.empty((n, p))
    for i, r in enumerate(rows):
        if len(r) != p:
            raise DataError(f"{path}: row {i + 1} has {len(r)} cells, expected {p}")
    for j, v in enumerate(spec):
        cells = [rows[i][j].strip() for i in range(n)]
        if not v.is_categorical:
            for i, c in enumerate(cells):
                try:
                    values[i, j] = float(c)
                except ValueError:
                    raise DataError(f"row {i + 1}, column {v.name!r}: cannot parse {c!r}") from None
            continue
        values[:, j] = _category_codes(cells, v)
    return Dataset(spec, values)


def _category_codes(cells: list, v: VariableSpec) -> np.ndarray:
    if v.labels is not None:
        lookup = {lab: k for k, lab in enumerate(v.labels, 1)}
    else:
        try:
            ints = [int(c) for c in cells]
        except ValueError:
            ints = None
        if ints is not None:
            for i, code in enumerate(ints):
                if not 1 <= code <= v.levels:
                    raise DataError(
                        f"row {i + 1}, column {v.name!r}: category code {code} outside 1..{v.levels}"
                    )
            return np.array(ints, dtype=float)
        lookup = {}
        for c in cells:
            lookup.setdefault(c, len(lookup) + 1)
    out = np.empty(len(cells))
    for i, c in enumerate(cells):
        code = lookup.get(c)
        if code is None or code > v.levels:
            raise DataError(f"row {i + 1}, column {v.name!r}: unexpected category {c!r}")
        out[i] = code
    return out


def csv_text(d: Dataset, header_lines: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for h in header_lines:
        buf.write(f"# {h}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(d.names)
    cat = [v.is_categorical for v in d.spec]
    for row in d.values:
        w.writerow([str(int(x)) if c else repr(float(x)) for x, c in zip(row, cat)])
    return buf.getvalue()


def write_csv(d: Dataset, path, header_lines: Sequence[str] = ()) -> None:
    Path(path).write_text(csv_text(d, header_lines), encoding="utf-8")


def load_time_index(path) -> TimeIndex:
    """Read a CSV with ``day`` and ``beep`` columns."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"time index file not found: {path}")
    reader = _data_lines(path)
    header = [h.strip().lower() for h in next(reader)]
    if "day" not in header or "beep" not in header:
        raise DataError(f"{path}: time index needs 'day' and 'beep' columns")
    di, bi = header.index("day"), header.index("beep")
    days, beeps = [], []
    for i, r in enumerate(reader, 1):
        if not any(c.strip() for c in r):
            continue
        try:
            days.append(int(r[di]))
            beeps.append(int(r[bi]))
        except (ValueError, IndexError):
            raise DataError(f"{path}: cannot parse time index row {i}") from None
    return TimeIndex(days, beeps)


def center_continuous(d: Dataset, means: Optional[np.ndarray] = None) -> Dataset:
    """Subtract column means from the continuous columns.

    With ``means`` given (e.g. training means for held-out data) those are
    subtracted instead of the sample means. Categorical columns are untouched.
    """
    if d.is_centered:
        raise DataError("dataset is already centered")
    cont = np.array([not v.is_categorical for v in d.spec])
    if means is None:
        rec = np.full(d.p, np.nan)
        rec[cont] = d.values[:, cont].mean(axis=0)
    else:
        rec = np.asarray(means, dtype=float)
        if rec.shape != (d.p,) or not np.all(np.isfinite(rec[cont])):
            raise DataError("means must supply a finite value for every continuous column")
        rec = np.where(cont, rec, np.nan)
    values = d.values.copy()
    values[:, cont] -= rec[cont]
    return Dataset(d.spec, values, rec)


def continuous_scales(d: Dataset) -> np.ndarray:
    """Sample standard deviation of each continuous column (NaN for categorical)."""
    out = np.full(d.p, np.nan)
    for j, v in enumerate(d.spec):
        if not v.is_categorical:
            sd = d.values[:, j].std(ddof=1) if d.n > 1 else 0.0
            out[j] = sd if sd > 0 else 1.0
    return out


def zscore_continuous(d: Dataset, scales: Optional[np.ndarray] = None) -> Dataset:
    """Divide continuous columns by ``scales`` (default: their own standard deviations)."""
    if d.is_centered:
        raise DataError("scale before centering")
    scales = continuous_scales(d) if scales is None else np.asarray(scales, dtype=float)
    values = d.values.copy()
    cont = ~np.isnan(scales)
    values[:, cont] /= scales[cont]
    return Dataset(d.spec, values)


def encode_categorical(column, K: int) -> np.ndarray:
    """One-hot indicator matrix (n x K) for integer codes in ``1..K``."""
    codes = np.asarray(column)
    if codes.size and (np.any(codes != np.round(codes)) or codes.min() < 1 or codes.max() > K):
        raise DataError(f"category codes must be integers in 1..{K}")
    codes = codes.astype(np.int64)
    out = np.zeros((codes.size, K))
    out[np.arange(codes.size), codes - 1] = 1.0
    return out


def marginal_distribution(column, K: int) -> np.ndarray:
    """Relative frequency of each category ``1..K``."""
    codes = np.asarray(column)
    if codes.size == 0:
        raise DataError("cannot compute marginals of an empty column")
    counts = encode_categorical(codes, K).sum(axis=0)
    return counts / codes.size
