"""Static exports: intent DAGs as Graphviz DOT, topology and metrics files.

Every export sorts identifiers so equal inputs produce byte-equal output,
which keeps golden-file comparisons and replay-determinism checks simple.
"""

import json
from pathlib import Path

from .intents import IntentDAG, IntentState, LightpathIntent, intent_kind
from .simulation import Metrics


# -- intent DAG ---------------------------------------------------------------


def dag_document(dag: IntentDAG) -> dict:
    """JSON-able snapshot of a DAG: nodes with kind/state, sorted edges."""
    nodes = []
    for iid in sorted(dag.nodes):
        nodes.append(
            {
                "id": str(iid),
                "kind": intent_kind(dag.payload(iid)),
                "state": dag.aggregate_state(iid).value,
            }
        )
    edges = sorted(
        (str(parent), str(child))
        for parent in dag.nodes
        for child in dag.children(parent)
    )
    return {"domain": dag.domain, "nodes": nodes, "edges": [list(e) for e in edges]}


def dot_from_document(doc: dict) -> str:
    lines = ["digraph intents {"]
    for node in doc["nodes"]:
        label = f"{node['kind']} / {node['id']} / {node['state']}"
        lines.append(f'  "{node["id"]}" [label="{label}"];')
    for parent, child in doc["edges"]:
        lines.append(f'  "{parent}" -> "{child}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dag(dag: IntentDAG) -> str:
    """Render a DAG as Graphviz DOT, one node per intent, stable ordering."""
    return dot_from_document(dag_document(dag))


# -- topology -----------------------------------------------------------------


def export_topology(domains: dict) -> dict:
    """Snapshot of every domain's graph plus overlays for installed intents."""
    doc = {"domains": [], "intents": []}
    for did in sorted(domains):
        ctrl = domains[did]
        graph = ctrl.graph
        nodes = []
        for node in sorted(graph.routers):
            router = graph.routers[node]
            oxc = graph.oxcs[node]
            nodes.append(
                {
                    "id": str(node),
                    "ports": router.port_count,
                    "port_rate": router.port_rate,
                    "ports_used": router.ports_used,
                    "add_drop": oxc.add_drop_capacity,
                    "add_drop_used": oxc.add_drop_used,
                    "stub": ctrl.registry.get(node) != did,
                }
            )
        links = []
        for key in sorted(graph.fiber_links):
            link = graph.fiber_links[key]
            holders = {
                str(slot): str(holder)
                for slot, holder in enumerate(link.slot_grid, start=1)
                if holder is not None
            }
            links.append(
                {
                    "a": str(key[0]),
                    "b": str(key[1]),
                    "length": link.length,
                    "operational": link.operational,
                    "border": key[0].domain != key[1].domain,
                    "slots": holders,
                }
            )
        virtual = [
            {
                "a": str(v.endpoints[0]),
                "b": str(v.endpoints[1]),
                "capacity": v.capacity,
                "lightpath": str(v.lightpath),
            }
            for v in graph.virtual_links
        ]
        doc["domains"].append(
            {"id": did, "nodes": nodes, "fiber_links": links, "virtual_links": virtual}
        )

        for iid in sorted(ctrl.dag.nodes):
            if ctrl.dag.parents(iid):
                continue
            if ctrl.dag.aggregate_state(iid) is not IntentState.INSTALLED:
                continue
            overlays = []
            for leaf in ctrl.dag.leaves_under(iid):
                payload = ctrl.dag.payload(leaf)
                if isinstance(payload, LightpathIntent):
                    overlays.append(
                        {
                            "path": [str(n) for n in payload.path],
                            "slots": list(payload.slot_range),
                        }
                    )
            doc["intents"].append(
                {
                    "domain": did,
                    "id": str(iid),
                    "kind": intent_kind(ctrl.dag.payload(iid)),
                    "state": "installed",
                    "paths": overlays,
                }
            )
    return doc


# -- metrics ---------------------------------------------------------------------


def metrics_csv(metrics: Metrics) -> str:
    """Metrics as CSV: summary `metric,value` rows, then one row per intent."""
    lines = [
        "metric,value",
        f"offered,{metrics.offered}",
        f"blocked,{metrics.blocked}",
        f"installed_ok,{metrics.installed_ok}",
        f"failures_recovered,{metrics.failures_recovered}",
        f"mean_slot_utilization,{metrics.mean_slot_utilization()!r}",
        "intent_id,outcome,compile_time,install_time",
    ]
    for record in metrics.per_intent:
        compile_time = "" if record.compile_time is None else repr(record.compile_time)
        install_time = "" if record.install_time is None else repr(record.install_time)
        lines.append(
            f"{record.intent_id},{record.outcome},{compile_time},{install_time}"
        )
    return "\n".join(lines) + "\n"


def event_log_text(event_log: list) -> str:
    """Replayable event log, one JSON object per line."""
    return "".join(json.dumps(entry, sort_keys=True) + "\n" for entry in event_log)


# -- run artifacts ------------------------------------------------------------------


def write_run_artifacts(out_dir, result) -> list:
    """Write metrics, event log, topology, DAGs, and a state snapshot.

    Returns the list of written paths.  ``state.json`` bundles the topology
    and DAG documents so exports can be re-rendered without re-running.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def _write(name, text):
        path = out / name
        path.write_text(text)
        written.append(path)

    topo = export_topology(result.domains)
    dags = {str(did): dag_document(result.domains[did].dag) for did in sorted(result.domains)}

    _write("metrics.csv", metrics_csv(result.metrics))
    _write("events.log", event_log_text(result.event_log))
    _write("topology.json", json.dumps(topo, indent=2, sort_keys=True) + "\n")
    for did, doc in dags.items():
        _write(f"dag_{did}.dot", dot_from_document(doc))
    state = {"topology": topo, "dags": dags}
    _write("state.json", json.dumps(state, indent=2, sort_keys=True) + "\n")
    return written
