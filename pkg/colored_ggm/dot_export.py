"""
DOT Export of Colored Graphs

Renders a colored graph as an undirected DOT graph (pydot). Members of a
color class share one color from a fixed palette; classes with a single
member are drawn in gamboge. Output depends only on the graph and the
variable names.
"""

from typing import Iterator, Optional, Sequence

import pydot

from .estimation.models import ColoredGraph

SINGLETON_COLOR = "#E49B0F"

PALETTE = (
    "#1F77B4", "#D62728", "#2CA02C", "#9467BD", "#17BECF",
    "#8C564B", "#E377C2", "#7F7F7F", "#BCBD22", "#393B79",
    "#637939", "#843C39", "#7B4173", "#3182BD", "#31A354",
)


def _quoted(value: str) -> str:
    return f'"{value}"'


def _class_colors(sizes: Sequence[int], palette: Iterator[str]) -> list:
    return [SINGLETON_COLOR if size == 1 else next(palette) for size in sizes]


def _cycle(colors: Sequence[str]) -> Iterator[str]:
    while True:
        yield from colors


def build_dot(graph: ColoredGraph, variables: Optional[Sequence[str]] = None, name: str = "colored_ggm") -> pydot.Dot:
    """
    Build the DOT graph.

    Vertex classes take palette colors first, then edge classes continue
    through the same palette.
    """
    variables = list(variables) if variables else [f"x{v + 1}" for v in range(graph.p)]
    dot = pydot.Dot(name, graph_type="graph")
    palette = _cycle(PALETTE)

    vertex_colors = _class_colors([len(block) for block in graph.vertex_classes], palette)
    color_of = {}
    for block, color in zip(graph.vertex_classes, vertex_colors):
        for v in block:
            color_of[v] = color
    for v in range(graph.p):
        dot.add_node(pydot.Node(
            f"v{v + 1}",
            label=_quoted(variables[v]),
            style="filled",
            fillcolor=_quoted(color_of[v]),
        ))

    edge_colors = _class_colors([len(block) for block in graph.edge_classes], palette)
    for block, color in zip(graph.edge_classes, edge_colors):
        for q, l in block:
            dot.add_edge(pydot.Edge(f"v{q + 1}", f"v{l + 1}", color=_quoted(color), penwidth=2))
    return dot


def export_dot(graph: ColoredGraph, variables: Optional[Sequence[str]] = None) -> str:
    """DOT text of a colored graph."""
    return build_dot(graph, variables).to_string()
