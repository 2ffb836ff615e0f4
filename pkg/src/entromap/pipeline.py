"""End-to-end run: prices -> per-stage networks, modules, indicators and files."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__, formats, ingest, lasso_net, mapeq_flow, mapeq_search, report, topo

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    prices: Path
    universe: Path
    stages: Path
    out: Path
    industries: Path | None = None
    seed: int = 42
    folds: int = lasso_net.DEFAULT_FOLDS
    restarts: int = 10
    top_k: int = 5
    crosstab_k: int = 9
    max_outer_passes: int = 100
    min_gain_bits: float = 1e-10

    def settings(self) -> dict:
        d = asdict(self)
        for key in ("prices", "universe", "stages", "out", "industries"):
            d.pop(key)
        return d


@dataclass
class StageOutcome:
    code: str
    status: str = "ok"
    phase: str | None = None
    error: str | None = None
    files: list[str] = field(default_factory=list)


@dataclass
class RunSummary:
    out: Path
    stages: list[StageOutcome]

    @property
    def ok(self) -> bool:
        return all(s.status == "ok" for s in self.stages)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def config_hash(config: PipelineConfig) -> str:
    """Hash of the settings and input file contents (paths are ignored)."""
    inputs = {"prices": _sha256(config.prices), "universe": _sha256(config.universe),
              "stages": _sha256(config.stages)}
    if config.industries is not None:
        inputs["industries"] = _sha256(config.industries)
    blob = json.dumps({"settings": config.settings(), "inputs": inputs}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _viable(returns: ingest.ReturnMatrix, tickers, flags, stage) -> str | None:
    """Reason the stage cannot run on its own, or None."""
    if stage.mask(returns.dates).sum() < 2:
        return "stage window holds fewer than 2 return rows"
    try:
        ingest.filter_universe(returns, tickers, flags, [stage])
    except ingest.IngestError as exc:
        return str(exc)
    return None


def _run_stage(config: PipelineConfig, returns, universe, stage, industries, outcome: StageOutcome):
    stage_dir = config.out / stage.code
    outcome.phase = "slice"
    panel = ingest.slice_stage(returns, universe, stage)
    tickers = list(panel.tickers)
    outcome.phase = "lasso"
    fits = lasso_net.fit_network(panel.returns, folds=config.folds, seed=config.seed)
    adj = lasso_net.build_adjacency(fits, len(tickers))
    outcome.phase = "flow"
    fs = mapeq_flow.build_flow_system(adj)
    outcome.phase = "search"
    result = mapeq_search.optimize(fs, mapeq_search.SearchConfig(
        seed=config.seed, n_restarts=config.restarts, max_outer_passes=config.max_outer_passes,
        min_gain_bits=config.min_gain_bits))
    outcome.phase = "topology"
    cent = topo.centralities(adj, "directed")
    indicators = topo.indicator_table(adj, cent)
    outcome.phase = "report"
    part = result.best
    stock_module = report.collapse_partition(fs, part)
    shares = report.flow_shares(fs, part)
    order = report.module_order(shares)
    table = report.stock_module_table(fs, part, adj, stock_module)
    ranking = report.centrality_ranking(cent, tickers, industries or {}, stock_module, config.top_k)
    graph = report.module_graph(fs, part, order)
    node_names = [f"{tickers[k % len(tickers)]}:{'out' if k < len(tickers) else 'in'}" for k in range(fs.n_flow)]
    flow_doc = mapeq_flow.flow_to_json(fs, part, node_names, list(graph.names), order)

    outcome.phase = "write"
    stage_dir.mkdir(parents=True, exist_ok=True)
    files = {
        "edges.tsv": lasso_net.write_edge_list(adj, tickers),
        "flow.json": formats.write_json(flow_doc),
        "modules.csv": formats.write_module_table(table),
        "indicators.csv": formats.write_indicators([(stage.code, indicators)]),
        "centrality.csv": formats.write_centrality(ranking),
        "modules.dot": formats.write_dot(graph, stage.code),
    }
    if industries is not None:
        k = min(config.crosstab_k, len(order))
        files["crosstab.csv"] = formats.write_cross_tab(
            report.cross_tab(stock_module, tickers, industries, order, k))
    for name in sorted(files):
        _write(stage_dir / name, files[name])
    outcome.files = sorted(files)
    outcome.phase = None
    log.info("stage %s: %d stocks, %d edges, %d modules, L=%.4f bits", stage.code, len(tickers),
             len(adj), part.m, result.report.total)
    return indicators


def run_pipeline(config: PipelineConfig) -> RunSummary:
    """Run every stage and write its artefacts under ``config.out/<stage code>/``.

    Input parse errors abort the run.  A failing stage is recorded in the
    manifest with the phase it failed in, and the remaining stages continue.
    """
    with open(config.prices, encoding="utf-8") as fh:
        prices = ingest.parse_prices(fh)
    with open(config.universe, encoding="utf-8") as fh:
        flags = ingest.parse_universe(fh)
    with open(config.stages, encoding="utf-8") as fh:
        stages = ingest.parse_stages(fh)
    industries = None
    if config.industries is not None:
        with open(config.industries, encoding="utf-8") as fh:
            industries = ingest.parse_industries(fh)
    else:
        log.warning("no industry file given; cross-tabs skipped")

    returns = ingest.compute_log_returns(prices)
    tickers = list(prices.tickers)
    reasons = {s.code: _viable(returns, tickers, flags, s) for s in stages}
    viable = [s for s in stages if reasons[s.code] is None]
    universe = ingest.filter_universe(returns, tickers, flags, viable) if viable else []

    config.out.mkdir(parents=True, exist_ok=True)
    outcomes, indicator_rows = [], []
    for stage in stages:
        outcome = StageOutcome(stage.code)
        outcomes.append(outcome)
        if reasons[stage.code] is not None:
            outcome.status, outcome.phase, outcome.error = "failed", "universe", reasons[stage.code]
            log.error("stage %s aborted in phase universe: %s", stage.code, outcome.error)
            continue
        try:
            indicator_rows.append((stage.code, _run_stage(config, returns, universe, stage, industries, outcome)))
        except Exception as exc:  # isolate stage failures
            outcome.status, outcome.error = "failed", f"{type(exc).__name__}: {exc}"
            log.error("stage %s aborted in phase %s: %s", stage.code, outcome.phase, outcome.error)

    _write(config.out / "indicators.csv", formats.write_indicators(indicator_rows))
    manifest = {
        "tool": "entromap",
        "version": __version__,
        "seed": config.seed,
        "config_hash": config_hash(config),
        "settings": config.settings(),
        "universe_size": len(universe),
        "stages": [asdict(o) for o in outcomes],
    }
    _write(config.out / "manifest.json", formats.write_json(manifest))
    return RunSummary(config.out, outcomes)
