"""Seeded synthetic market for demos and end-to-end tests.

Returns follow a block factor model: a market factor, one factor per
industry block and idiosyncratic noise.  Bear stages load more heavily on
the shared factors, which raises cross-correlation.  Two decoy stocks are
appended, one flagged special-treatment and one with a trading gap, so the
universe filter has something to remove.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

INDUSTRIES = ("Materials", "Industrials", "Health care", "Consumer staples")


@dataclass(frozen=True)
class SynthStage:
    code: str
    start: str  # YYYY-MM
    end: str
    kind: str
    market_loading: float
    block_loading: float


DEFAULT_STAGES = (
    SynthStage("BULL1", "2010-01", "2012-01", "bull", 0.3, 0.5),
    SynthStage("BEAR1", "2012-01", "2014-01", "bear", 1.2, 0.9),
)


def _weekly_dates(start: str, end: str) -> np.ndarray:
    first = np.datetime64(start, "M").astype("datetime64[D]")
    last = np.datetime64(end, "M").astype("datetime64[D]")
    return np.arange(first, last, np.timedelta64(7, "D"))


def generate(seed: int = 7, n_stocks: int = 20, stages=DEFAULT_STAGES, noise: float = 0.02,
             factor_vol: float = 0.02) -> dict[str, str]:
    """Return file contents keyed by name: prices.csv, universe.csv, stages.txt, industries.csv."""
    rng = np.random.default_rng(seed)
    n_blocks = len(INDUSTRIES)
    tickers = [f"S{600000 + k:06d}" for k in range(n_stocks)]
    block = np.arange(n_stocks) % n_blocks
    decoys = ["S699998", "S699999"]  # special-treatment, gap
    # one extra price row before the first stage so its first week has a return
    dates = [np.datetime64(stages[0].start, "M").astype("datetime64[D]") - np.timedelta64(7, "D")]
    rets = [np.zeros(n_stocks + 2)]
    for st in stages:
        d = _weekly_dates(st.start, st.end)
        T = d.size
        market = rng.normal(0.0, factor_vol, size=T)
        blocks = rng.normal(0.0, factor_vol, size=(T, n_blocks))
        r = (st.market_loading * market[:, None] + st.block_loading * blocks[:, block]
             + rng.normal(0.0, noise, size=(T, n_stocks)))
        extra = rng.normal(0.0, noise, size=(T, 2))
        dates.extend(d.tolist())
        rets.extend(np.column_stack([r, extra]))
    R = np.array(rets)
    prices = 10.0 * np.exp(np.cumsum(R, axis=0))
    names = tickers + decoys
    gap_row = len(dates) // 3

    buf = io.StringIO()
    buf.write("date,ticker,close\n")
    for t, d in enumerate(dates):
        for k, name in enumerate(names):
            cell = "" if (name == decoys[1] and t == gap_row) else f"{prices[t, k]:.6f}"
            buf.write(f"{np.datetime64(d, 'D')},{name},{cell}\n")
    universe = "ticker,st_flag\n" + "".join(f"{t},{1 if t == decoys[0] else 0}\n" for t in names)
    industries = "ticker,industry\n" + "".join(f"{t},{INDUSTRIES[block[k]]}\n" for k, t in enumerate(tickers))
    stage_text = "".join(f"{s.code},start={s.start},end={s.end},kind={s.kind}\n" for s in stages)
    return {"prices.csv": buf.getvalue(), "universe.csv": universe, "stages.txt": stage_text,
            "industries.csv": industries}


def write_dataset(out_dir: str | Path, seed: int = 7) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, text in generate(seed).items():
        p = out / name
        p.write_text(text, encoding="utf-8", newline="\n")
        paths[name] = p
    return paths


def bundled_dataset() -> dict[str, Path]:
    """Paths of the synthetic dataset shipped with the package."""
    root = Path(__file__).parent / "data" / "synthetic"
    return {name: root / name for name in ("prices.csv", "universe.csv", "stages.txt", "industries.csv")}
