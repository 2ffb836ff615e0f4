"""Writers and parsers for every pipeline output file.

All writers return ``str`` with LF line endings and a fixed field order;
floats are written with ``repr`` so they parse back bit-for-bit, except the
module-table percentages which are two-decimal by design.
"""

from __future__ import annotations

import csv
import io
import json
import re
from typing import Sequence

import numpy as np

from .report import IndustryCrossTab, ModuleGraph, ModuleRow, RankEntry, StockModuleTable
from .topo import INDICATOR_LABELS, IndicatorTable


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _csv_rows(text: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def _num(x) -> str:
    return repr(float(x))


# module table ---------------------------------------------------------------

MODULE_HEADER = ("module", "node_count", "link_count", "within_pct", "flow_in_pct", "flow_out_pct")
ISOLATED_ROW = "isolated"


def write_module_table(table: StockModuleTable) -> str:
    rows = [(r.name, r.node_count, r.link_count, f"{r.within_pct:.2f}", f"{r.flow_in_pct:.2f}",
             f"{r.flow_out_pct:.2f}") for r in table.rows]
    rows.append((ISOLATED_ROW, table.isolated_count, 0, "0.00", "0.00", "0.00"))
    return ("# flow_in_pct: boundary flow entering the module; flow_out_pct: flow leaving it (exit rate)\n"
            + _csv_text(MODULE_HEADER, rows))


def read_module_table(text: str) -> StockModuleTable:
    body = "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))
    header, rows = _csv_rows(body)
    if tuple(header) != MODULE_HEADER:
        raise ValueError(f"unexpected module table header {header}")
    out, isolated = [], 0
    for r in rows:
        if r[0] == ISOLATED_ROW:
            isolated = int(r[1])
            continue
        out.append(ModuleRow(r[0], int(r[1]), int(r[2]), float(r[3]), float(r[4]), float(r[5])))
    return StockModuleTable(tuple(out), isolated)


# indicators -----------------------------------------------------------------

INDICATOR_HEADER = ("stage",) + tuple(INDICATOR_LABELS.values())


def write_indicators(rows: Sequence[tuple[str, IndicatorTable]]) -> str:
    out = []
    for code, table in rows:
        values = table.as_row()
        out.append([code] + [str(v) if isinstance(v, int) else _num(v) for v in values.values()])
    return _csv_text(INDICATOR_HEADER, out)


def read_indicators(text: str) -> list[tuple[str, IndicatorTable]]:
    header, rows = _csv_rows(text)
    if tuple(header) != INDICATOR_HEADER:
        raise ValueError("unexpected indicator header")
    return [(r[0], IndicatorTable.from_row(dict(zip(header, r)))) for r in rows]


# centrality rankings ----------------------------------------------------------

CENTRALITY_HEADER = ("kind", "rank", "ticker", "industry", "value")


def write_centrality(ranking: dict[str, tuple[RankEntry, ...]]) -> str:
    rows = []
    for kind, entries in ranking.items():
        for rank, e in enumerate(entries, start=1):
            rows.append((kind, rank, e.ticker, e.industry, _num(e.value)))
    return _csv_text(CENTRALITY_HEADER, rows)


def read_centrality(text: str) -> dict[str, tuple[RankEntry, ...]]:
    header, rows = _csv_rows(text)
    if tuple(header) != CENTRALITY_HEADER:
        raise ValueError("unexpected centrality header")
    out: dict[str, list[RankEntry]] = {}
    for kind, _, ticker, industry, value in rows:
        out.setdefault(kind, []).append(RankEntry(ticker, industry, float(value)))
    return {k: tuple(v) for k, v in out.items()}


# industry cross-tab -----------------------------------------------------------


def write_cross_tab(tab: IndustryCrossTab) -> str:
    rows = [[ind] + [int(c) for c in tab.counts[k]] for k, ind in enumerate(tab.industries)]
    return _csv_text(("industry",) + tab.modules, rows)


def read_cross_tab(text: str) -> IndustryCrossTab:
    header, rows = _csv_rows(text)
    if not header or header[0] != "industry":
        raise ValueError("unexpected cross-tab header")
    counts = np.array([[int(c) for c in r[1:]] for r in rows], dtype=np.int64).reshape(len(rows), len(header) - 1)
    return IndustryCrossTab(tuple(r[0] for r in rows), tuple(header[1:]), counts)


# flow JSON --------------------------------------------------------------------


def write_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def read_json(text: str):
    return json.loads(text)


# module graph (DOT) -------------------------------------------------------------

_NODE_RE = re.compile(r'^\s*"([^"]+)" \[size=([^,]+), exit_freq=([^\]]+)\];$')
_EDGE_RE = re.compile(r'^\s*"([^"]+)" -> "([^"]+)" \[weight=([^\]]+)\];$')


def write_dot(graph: ModuleGraph, name: str = "modules") -> str:
    lines = [f'digraph "{name}" {{']
    for n, u, q in zip(graph.names, graph.usage, graph.exit_freq):
        lines.append(f'  "{n}" [size={_num(u)}, exit_freq={_num(q)}];')
    for a, b, w in graph.edges:
        lines.append(f'  "{a}" -> "{b}" [weight={_num(w)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def read_dot(text: str) -> ModuleGraph:
    names, usage, exits, edges = [], [], [], []
    for line in text.splitlines()[1:-1]:
        m = _NODE_RE.match(line)
        if m:
            names.append(m.group(1))
            usage.append(float(m.group(2)))
            exits.append(float(m.group(3)))
            continue
        m = _EDGE_RE.match(line)
        if not m:
            raise ValueError(f"unrecognised DOT line {line!r}")
        edges.append((m.group(1), m.group(2), float(m.group(3))))
    return ModuleGraph(tuple(names), tuple(usage), tuple(exits), tuple(edges))
