__all__ = ["generate_sankey", "visualise_network"]

from typing import Optional

import networkx as nx
import plotly.graph_objects as go
from pyvis.network import Network


def generate_sankey(G: nx.Graph, show: bool = False) -> go.Figure:
    """
    Generate a Sankey diagram from a NetworkX graph.

    The graph `G` should have nodes and edges with specific attributes as follows:

    Node attributes:
    - "color": The color of the node.

    Edge attributes:
    - "value": The value (weight) of the edge, which determines the thickness of the link in the Sankey diagram.
    - "color": The color of the edge.

    Parameters:
    G (nx.Graph): A NetworkX graph, for example from `zkcbridge.graphing.flow_graph`.
    show (bool, optional): Whether to open the figure as well. Defaults to False.

    Returns:
    go.Figure: The Sankey figure.

    Example:
    --------
    ```python
    import zkcbridge

    trace = zkcbridge.sim.run_scenario(zkcbridge.sim.catalog_scenario("replay"))
    fig = generate_sankey(zkcbridge.graphing.flow_graph(trace))
    fig.write_html("replay.html")
    ```
    """
    nodes = list(G.nodes)
    index = {node: i for i, node in enumerate(nodes)}
    edges = list(G.edges(data=True))

    fig = go.Figure(
        data=[
            go.Sankey(
                node=dict(
                    pad=15,
                    thickness=10,
                    line=dict(color="black", width=0.5),
                    label=[f"{node}" for node in nodes],
                    align="left",
                    color=[G.nodes[node].get("color", "grey") for node in nodes],
                ),
                link=dict(
                    source=[index[source] for source, _, _ in edges],
                    target=[index[target] for _, target, _ in edges],
                    value=[attrs.get("value", 1) for _, _, attrs in edges],
                    color=[attrs.get("color", "lightgrey") for _, _, attrs in edges],
                ),
            )
        ]
    )

    if show:
        fig.show()
    return fig


def visualise_network(
    G: nx.DiGraph,
    filename: Optional[str] = None,
    heading: str = "",
    height: str = "600px",
    show_physics: bool = False,
    **kwargs,
) -> Network:
    """
    Draw a message flow graph as an interactive pyvis network.

    Each edge is labelled with the number of trace events that moved along it, and edges into a "rejected"
    outcome are drawn dashed. `G` is copied first, so its attributes are left as they were.

    Args:
        G (nx.DiGraph): Flow graph from `zkcbridge.graphing.flow_graph`.
        filename (Optional[str], optional): HTML file to write. Defaults to None (nothing is written).
        heading (str, optional): Heading shown above the network. Defaults to "".
        height (str, optional): CSS height of the canvas. Defaults to "600px".
        show_physics (bool, optional): Whether to add the physics control panel. Defaults to False.
        **kwargs: Passed on to `pyvis.network.Network`.

    Returns:
        Network: The pyvis network.
    """
    H = G.copy()
    for source, target, attrs in H.edges(data=True):
        value = attrs.get("value", 1)
        attrs["label"] = str(value)
        attrs["title"] = f"{source} -> {target}: {value} event{'s' if value != 1 else ''}"
        attrs["dashes"] = target.endswith("rejected")
    for node, attrs in H.nodes(data=True):
        received, sent = H.in_degree(node, weight="value"), H.out_degree(node, weight="value")
        attrs["title"] = f"{node}: {received} in, {sent} out"

    nt = Network(directed=True, heading=heading, height=height, **kwargs)
    nt.from_nx(H)

    if show_physics:
        nt.show_buttons(filter_=["physics"])

    if filename is not None:
        nt.save_graph(filename)

    return nt
