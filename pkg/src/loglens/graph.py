"""Station/AP connection graphs from raw entries, and their file exports.

Node weights count the entries mentioning the node; edge weights count the
entries mentioning both endpoints. Station labels are reduced to the
manufacturer resolved from the MAC's OUI prefix, preserving device-level
patterns while anonymizing identities; unknown prefixes are labeled
``unregistered``.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable
from xml.etree import ElementTree as ET

from .errors import ConfigError, DataError
from .parsecfg import ParserConfig

# Small built-in OUI prefix table; extend via `register_oui` for other corpora.
OUI_PREFIXES: dict[str, str] = {
    "3c:d9:2b": "Hewlett Packard",
    "f0:18:98": "Apple",
    "28:6a:ba": "Apple",
    "00:03:93": "Apple",
    "a0:88:b4": "Intel",
    "84:3a:4b": "Intel",
    "00:a0:f8": "Zebra Technologies",
    "00:26:5a": "D-Link",
    "b8:27:eb": "Raspberry Pi Foundation",
    "00:16:6f": "Nokia",
    "fc:fb:fb": "Cisco Systems",
    "3c:5a:b4": "Google",
    "00:50:56": "VMware",
    "52:54:00": "QEMU",
}

UNREGISTERED = "unregistered"


def register_oui(prefix: str, manufacturer: str) -> None:
    OUI_PREFIXES[prefix.lower()] = manufacturer


def manufacturer(mac: str) -> str:
    """Manufacturer for a MAC address, from its first three octets."""
    prefix = mac.lower().replace("-", ":")[:8]
    return OUI_PREFIXES.get(prefix, UNREGISTERED)


@dataclass(frozen=True)
class GraphNode:
    node_id: str
    kind: str  # "station" | "ap"
    label: str
    weight: int


@dataclass
class ConnectionGraph:
    nodes: dict[str, GraphNode] = field(default_factory=dict)
    edges: dict[tuple[str, str], int] = field(default_factory=dict)

    def validate(self) -> None:
        for (s, p), w in self.edges.items():
            if w < 1:
                raise DataError(f"edge ({s}, {p}) has weight {w} < 1")
            if s not in self.nodes or p not in self.nodes:
                raise DataError(f"edge ({s}, {p}) references a missing node")
        for node in self.nodes.values():
            if node.weight < 1:
                raise DataError(f"node {node.node_id} has weight {node.weight} < 1")

    def filtered(self, node_min: int = 0, edge_min: int = 0) -> "ConnectionGraph":
        """Drop nodes/edges below the weight thresholds, then dangling edges."""
        if node_min < 0 or edge_min < 0:
            raise ConfigError("thresholds must be >= 0")
        nodes = {nid: n for nid, n in self.nodes.items() if n.weight >= node_min}
        edges = {
            (s, p): w
            for (s, p), w in self.edges.items()
            if w >= edge_min and s in nodes and p in nodes
        }
        return ConnectionGraph(nodes=nodes, edges=edges)

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.node_id, "kind": n.kind, "label": n.label, "weight": n.weight}
                for n in sorted(self.nodes.values(), key=lambda n: n.node_id)
            ],
            "edges": [
                {"source": s, "target": p, "weight": w}
                for (s, p), w in sorted(self.edges.items())
            ],
        }


def build_graph(
    texts: Iterable[str],
    config: ParserConfig,
    station_var: str = "station",
    ap_var: str = "ap",
) -> ConnectionGraph:
    """Bipartite station/AP graph over a window of raw entries."""
    for var in (station_var, ap_var):
        if var not in {v.name for v in config.variables}:
            raise ConfigError(f"variable {var!r} not defined in the parser config")
    st_pat = config.variable(station_var).compile()
    ap_pat = config.variable(ap_var).compile()

    node_weight: dict[str, int] = {}
    node_kind: dict[str, str] = {}
    edge_weight: dict[tuple[str, str], int] = {}
    for text in texts:
        stations = sorted(set(st_pat.findall(text)))
        aps = sorted(set(ap_pat.findall(text)))
        for s in stations:
            node_weight[s] = node_weight.get(s, 0) + 1
            node_kind[s] = "station"
        for p in aps:
            node_weight[p] = node_weight.get(p, 0) + 1
            node_kind[p] = "ap"
        for s in stations:
            for p in aps:
                edge_weight[(s, p)] = edge_weight.get((s, p), 0) + 1

    nodes = {
        nid: GraphNode(
            node_id=nid,
            kind=kind,
            label=manufacturer(nid) if kind == "station" else nid,
            weight=node_weight[nid],
        )
        for nid, kind in node_kind.items()
    }
    graph = ConnectionGraph(nodes=nodes, edges=edge_weight)
    graph.validate()
    return graph


FORMAT_GEXF = "gexf"
FORMAT_CSV = "csv"
FORMAT_JSON = "json"


def export_graph(
    graph: ConnectionGraph,
    path: Path | str,
    node_min: int = 0,
    edge_min: int = 0,
    fmt: str = FORMAT_GEXF,
) -> ConnectionGraph:
    """Write the thresholded graph to `path`; returns what was exported."""
    out = graph.filtered(node_min, edge_min)
    if fmt == FORMAT_GEXF:
        Path(path).write_bytes(_to_gexf(out))
    elif fmt == FORMAT_CSV:
        lines = ["source,target,weight"]
        lines += [f"{s},{p},{w}" for (s, p), w in sorted(out.edges.items())]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif fmt == FORMAT_JSON:
        Path(path).write_text(json.dumps(out.to_dict(), indent=2) + "\n", encoding="utf-8")
    else:
        raise ConfigError(f"unknown graph format: {fmt!r}")
    return out


def _to_gexf(graph: ConnectionGraph) -> bytes:
    ET.register_namespace("", "http://www.gexf.net/1.2draft")
    gexf = ET.Element("{http://www.gexf.net/1.2draft}gexf", version="1.2")
    g = ET.SubElement(gexf, "{http://www.gexf.net/1.2draft}graph", defaultedgetype="undirected")
    attrs = ET.SubElement(g, "{http://www.gexf.net/1.2draft}attributes", attrib={"class": "node"})
    for aid, (title, atype) in enumerate((("kind", "string"), ("weight", "long"))):
        ET.SubElement(
            attrs,
            "{http://www.gexf.net/1.2draft}attribute",
            id=str(aid),
            title=title,
            type=atype,
        )
    nodes_el = ET.SubElement(g, "{http://www.gexf.net/1.2draft}nodes")
    for n in sorted(graph.nodes.values(), key=lambda n: n.node_id):
        node_el = ET.SubElement(
            nodes_el, "{http://www.gexf.net/1.2draft}node", id=n.node_id, label=n.label
        )
        av = ET.SubElement(node_el, "{http://www.gexf.net/1.2draft}attvalues")
        ET.SubElement(av, "{http://www.gexf.net/1.2draft}attvalue", attrib={"for": "0", "value": n.kind})
        ET.SubElement(av, "{http://www.gexf.net/1.2draft}attvalue", attrib={"for": "1", "value": str(n.weight)})
    edges_el = ET.SubElement(g, "{http://www.gexf.net/1.2draft}edges")
    for eid, ((s, p), w) in enumerate(sorted(graph.edges.items())):
        ET.SubElement(
            edges_el,
            "{http://www.gexf.net/1.2draft}edge",
            id=str(eid),
            source=s,
            target=p,
            weight=str(w),
        )
    tree = ET.ElementTree(gexf)
    ET.indent(tree)
    buf = io.BytesIO()
    tree.write(buf, encoding="utf-8", xml_declaration=True)
    return buf.getvalue()
