__all__ = ["team_colours", "flow_graph"]

from collections import Counter
from typing import Dict, Tuple

import networkx as nx

from .sim import TraceReport

team_colours = {
    "red": {"hex": "#d1495b", "rgb": "RGB(209, 73, 91)"},
    "green": {"hex": "#66a182", "rgb": "RGB(102, 161, 130)"},
    "yellow": {"hex": "#edae49", "rgb": "RGB(237, 174, 73)"},
    "blue_grey": {"hex": "#9db2bf", "rgb": "RGB(157, 178, 191)"},
    "grey": {"hex": "#dde6ed", "rgb": "RGB(221, 230, 237)"},
    "blue": {"hex": "#00789c", "rgb": "RGB(0, 120, 156)"},
    "dark_blue": {"hex": "#27374d", "rgb": "RGB(39, 55, 77)"},
    "orange": {"hex": "#eb7956", "rgb": "RGB(235, 121, 86)"},
    "white": {"hex": "#ffffff", "rgb": "RGB(255, 255, 255)"},
}

_NODE_COLOURS = {
    "Solana origin": "dark_blue",
    "Guardians": "blue",
    "Relayers": "green",
    "Adversary": "red",
    "Portal": "blue",
    "Portal rejected": "orange",
    "Aztec inbox": "dark_blue",
    "Aztec consumer": "green",
    "Aztec rejected": "orange",
    "Receipts recorded": "yellow",
}


def flow_graph(trace: TraceReport) -> nx.DiGraph:
    """
    Summarise a trace as the flow of messages across the bridge.

    Nodes are the actors and outcomes (Solana origin, Guardians, Relayers, Adversary, Portal, Aztec ...);
    an edge's "value" counts the trace events that moved along it and its "color" marks rejections. Edges
    nothing moved along are left out.

    Args:
        trace (TraceReport): A trace from `run_scenario`.

    Returns:
        nx.DiGraph: Graph with "color" node attributes and "value" / "color" edge attributes, ready for
            `zkcbridge.plotting.generate_sankey`.
    """
    origin = trace.header.get("origin", {})
    origin_pair = (origin.get("chain"), origin.get("emitter"))
    flows: Dict[Tuple[str, str], int] = Counter()

    for event in trace.events:
        name = event["event"]
        if name == "message_posted" and (event["emitter_chain"], event["emitter"]) == origin_pair:
            flows["Solana origin", "Guardians"] += 1
        elif name == "vaa_delivered" and event["relayers"]:
            flows["Guardians", "Relayers"] += 1
        elif name == "adversary_action":
            flows["Guardians", "Adversary"] += 1
        elif name == "portal_call":
            source = "Adversary" if event["caller"] == "adversary" else "Relayers"
            target = "Portal" if event["outcome"] == "ok" else "Portal rejected"
            flows[source, target] += 1
        elif name == "portal_event" and event["kind"] == "InboxEnqueued":
            flows["Portal", "Aztec inbox"] += 1
        elif name == "aztec_consume":
            target = "Aztec consumer" if event["outcome"] == "ok" else "Aztec rejected"
            flows["Aztec inbox", target] += 1
        elif name == "receipt_call" and event["outcome"] == "ok":
            flows["Aztec consumer", "Receipts recorded"] += 1

    G = nx.DiGraph()
    used = {node for edge in flows for node in edge}
    for node, colour in _NODE_COLOURS.items():
        if node in used:
            G.add_node(node, color=team_colours[colour]["hex"])
    for (source, target), value in flows.items():
        rejected = target.endswith("rejected")
        colour = team_colours["orange" if rejected else "blue_grey"]["hex"]
        G.add_edge(source, target, value=value, color=colour)
    return G
