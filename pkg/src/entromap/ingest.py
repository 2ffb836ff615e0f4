"""Price panels, stage definitions and per-stage log-return panels.

Missing prices are NaN throughout; a missing price invalidates both returns
that touch it (no gap bridging).
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np


class IngestError(ValueError):
    """Malformed input; ``line`` is the 1-based source line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PricePanel:
    dates: np.ndarray  # datetime64[D], strictly increasing
    tickers: tuple[str, ...]
    prices: np.ndarray  # (T_raw, N_raw), NaN = missing

    def __post_init__(self):
        object.__setattr__(self, "dates", _frozen(np.asarray(self.dates, dtype="datetime64[D]")))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "prices", _frozen(np.asarray(self.prices, dtype=np.float64)))
        if self.prices.shape != (len(self.dates), len(self.tickers)):
            raise IngestError(f"price matrix shape {self.prices.shape} does not match dates x tickers")
        if len(self.dates) > 1 and not np.all(np.diff(self.dates).astype(np.int64) > 0):
            raise IngestError("dates must be strictly increasing")
        if len(set(self.tickers)) != len(self.tickers):
            raise IngestError("duplicate tickers")
        present = self.prices[~np.isnan(self.prices)]
        if np.any(present <= 0):
            raise IngestError("prices must be positive")

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.prices)


@dataclass(frozen=True)
class StageDefinition:
    code: str
    start: np.datetime64  # inclusive
    end: np.datetime64  # exclusive
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "start", np.datetime64(self.start, "D"))
        object.__setattr__(self, "end", np.datetime64(self.end, "D"))
        if self.kind not in ("bull", "bear"):
            raise IngestError(f"stage {self.code}: kind must be bull or bear, got {self.kind!r}")
        if not self.start < self.end:
            raise IngestError(f"stage {self.code}: start must precede end")

    def mask(self, dates: np.ndarray) -> np.ndarray:
        return (dates >= self.start) & (dates < self.end)


@dataclass(frozen=True)
class ReturnMatrix:
    """Full-period log returns; row ``t`` is dated at the later price."""

    dates: np.ndarray
    tickers: tuple[str, ...]
    returns: np.ndarray  # NaN = missing

    def __post_init__(self):
        object.__setattr__(self, "dates", _frozen(np.asarray(self.dates, dtype="datetime64[D]")))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "returns", _frozen(self.returns))


@dataclass(frozen=True)
class ReturnPanel:
    stage: StageDefinition
    tickers: tuple[str, ...]
    returns: np.ndarray  # (T, N), complete
    dates: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "returns", _frozen(np.asarray(self.returns, dtype=np.float64)))
        if self.dates is not None:
            object.__setattr__(self, "dates", _frozen(np.asarray(self.dates, dtype="datetime64[D]")))
        r = self.returns
        if r.ndim != 2 or r.shape[1] != len(self.tickers):
            raise IngestError(f"stage {self.stage.code}: returns shape {r.shape} does not match tickers")
        if r.shape[0] < 2:
            raise IngestError(f"stage {self.stage.code}: need at least 2 return rows, got {r.shape[0]}")
        if np.isnan(r).any():
            raise IngestError(f"stage {self.stage.code}: missing returns in panel")
        zero_cols = np.flatnonzero(np.all(r == 0.0, axis=0))
        if zero_cols.size:
            raise IngestError(f"stage {self.stage.code}: all-zero returns for {self.tickers[zero_cols[0]]}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.returns.shape


# ---------------------------------------------------------------------------
# parsers
# ---------------------------------------------------------------------------


def _parse_date(text: str, line: int) -> np.datetime64:
    try:
        return np.datetime64(dt.date.fromisoformat(text.strip()), "D")
    except ValueError:
        raise IngestError(f"bad date {text!r}", line) from None


def _expect_header(reader, expected: Sequence[str], what: str) -> None:
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError(f"empty {what} file", 1) from None
    if [h.strip() for h in header] != list(expected):
        raise IngestError(f"malformed {what} header {header!r}; expected {','.join(expected)}", 1)


def _as_stream(source: TextIO | str) -> TextIO:
    return io.StringIO(source) if isinstance(source, str) else source


def parse_prices(source: TextIO | str) -> PricePanel:
    """Parse a long-format ``date,ticker,close`` CSV into a :class:`PricePanel`.

    Empty or unparseable ``close`` fields become missing.  Non-positive
    prices, duplicate ``(date, ticker)`` pairs and bad dates raise
    :class:`IngestError` naming the line.
    """
    reader = csv.reader(_as_stream(source))
    _expect_header(reader, ("date", "ticker", "close"), "price")
    cells: dict[tuple[np.datetime64, str], float] = {}
    tickers: dict[str, None] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise IngestError(f"expected 3 fields, got {len(row)}", lineno)
        date = _parse_date(row[0], lineno)
        ticker = row[1].strip()
        if not ticker:
            raise IngestError("empty ticker", lineno)
        text = row[2].strip()
        try:
            price = float(text) if text else math.nan
        except ValueError:
            price = math.nan
        if not math.isnan(price) and (price <= 0 or math.isinf(price)):
            raise IngestError(f"non-positive price {text!r}", lineno)
        key = (date, ticker)
        if key in cells:
            raise IngestError(f"duplicate row for ({row[0].strip()}, {ticker})", lineno)
        cells[key] = price
        tickers.setdefault(ticker)
    dates = np.array(sorted({d for d, _ in cells}), dtype="datetime64[D]")
    names = tuple(tickers)
    row_of = {d: i for i, d in enumerate(dates)}
    col_of = {t: j for j, t in enumerate(names)}
    prices = np.full((len(dates), len(names)), np.nan)
    for (d, t), p in cells.items():
        prices[row_of[d], col_of[t]] = p
    return PricePanel(dates, names, prices)


def parse_universe(source: TextIO | str) -> dict[str, bool]:
    """``ticker,st_flag`` CSV -> mapping ticker -> special-treatment flag."""
    reader = csv.reader(_as_stream(source))
    _expect_header(reader, ("ticker", "st_flag"), "universe")
    flags: dict[str, bool] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2 or row[1].strip() not in ("0", "1"):
            raise IngestError(f"expected ticker,0|1 got {row!r}", lineno)
        ticker = row[0].strip()
        if ticker in flags:
            raise IngestError(f"duplicate ticker {ticker}", lineno)
        flags[ticker] = row[1].strip() == "1"
    return flags


def parse_industries(source: TextIO | str) -> dict[str, str]:
    reader = csv.reader(_as_stream(source))
    _expect_header(reader, ("ticker", "industry"), "industry")
    out: dict[str, str] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise IngestError(f"expected ticker,industry got {row!r}", lineno)
        out[row[0].strip()] = row[1].strip()
    return out


def _month_start(text: str, line: int) -> np.datetime64:
    try:
        return np.datetime64(text.strip(), "M").astype("datetime64[D]")
    except ValueError:
        raise IngestError(f"bad month {text!r}; expected YYYY-MM", line) from None


def parse_stages(source: TextIO | str) -> list[StageDefinition]:
    """Parse ``CODE,start=YYYY-MM,end=YYYY-MM,kind=bull|bear`` lines.

    Blank lines and ``#`` comments are skipped.  Stages must be ordered by
    start date and non-overlapping.
    """
    stages: list[StageDefinition] = []
    for lineno, raw in enumerate(_as_stream(source), start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise IngestError(f"expected 4 fields, got {len(parts)}", lineno)
        code, *kv = parts
        fields: dict[str, str] = {}
        for item in kv:
            key, sep, value = item.partition("=")
            if not sep or key not in ("start", "end", "kind"):
                raise IngestError(f"bad field {item!r}", lineno)
            fields[key] = value
        if set(fields) != {"start", "end", "kind"}:
            raise IngestError("need start=, end= and kind=", lineno)
        try:
            stage = StageDefinition(code, _month_start(fields["start"], lineno),
                                    _month_start(fields["end"], lineno), fields["kind"])
        except IngestError as exc:
            raise IngestError(str(exc), lineno) from None
        if stages and stage.start < stages[-1].end:
            raise IngestError(f"stage {code} overlaps or precedes {stages[-1].code}", lineno)
        if any(s.code == code for s in stages):
            raise IngestError(f"duplicate stage code {code}", lineno)
        stages.append(stage)
    return stages


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def compute_log_returns(panel: PricePanel) -> ReturnMatrix:
    logp = np.log(panel.prices)
    return ReturnMatrix(panel.dates[1:], panel.tickers, np.diff(logp, axis=0))


def filter_universe(returns: ReturnMatrix, tickers: Sequence[str], st_flags: dict[str, bool],
                    stages: Iterable[StageDefinition]) -> list[str]:
    """Tickers surviving the exclusion rules, in input order.

    A ticker is dropped if it is flagged special-treatment, has any missing
    return inside a stage window, or has identically zero returns across an
    entire (non-empty) stage window.
    """
    missing = [t for t in tickers if t not in st_flags]
    if missing:
        raise IngestError(f"no st_flag for tickers {missing[:5]}")
    col = {t: j for j, t in enumerate(returns.tickers)}
    stages = list(stages)
    keep = []
    for t in tickers:
        if st_flags[t] or t not in col:
            continue
        r = returns.returns[:, col[t]]
        ok = True
        for stage in stages:
            w = r[stage.mask(returns.dates)]
            if w.size == 0:
                continue
            if np.isnan(w).any() or np.all(w == 0.0):
                ok = False
                break
        if ok:
            keep.append(t)
    if not keep:
        raise IngestError("no tickers survive the universe filter")
    return keep


def slice_stage(returns: ReturnMatrix, tickers: Sequence[str], stage: StageDefinition) -> ReturnPanel:
    col = {t: j for j, t in enumerate(returns.tickers)}
    rows = stage.mask(returns.dates)
    if rows.sum() < 2:
        raise IngestError(f"stage {stage.code}: window holds {int(rows.sum())} return rows, need >= 2")
    cols = [col[t] for t in tickers]
    return ReturnPanel(stage, tuple(tickers), returns.returns[np.ix_(rows, cols)], returns.dates[rows])
