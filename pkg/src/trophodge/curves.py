"""Gallery of standard test curves."""

from __future__ import annotations

from .curve import Edge, TropicalCurve

__all__ = [
    "triangle",
    "theta_graph",
    "k4",
    "projective_line",
    "star",
    "triangle_with_legs",
    "single_edge",
]

INF = float("inf")


def triangle(length: float = 1.0) -> TropicalCurve:
    """Three vertices in a cycle; genus 1."""
    return TropicalCurve(
        ("A", "B", "C"),
        (
            Edge("ab", "A", "B", length),
            Edge("bc", "B", "C", length),
            Edge("ca", "C", "A", length),
        ),
    )


def theta_graph(length: float = 1.0) -> TropicalCurve:
    """Two vertices joined by three parallel edges; genus 2."""
    return TropicalCurve(
        ("U", "V"),
        (
            Edge("e1", "U", "V", length),
            Edge("e2", "U", "V", length),
            Edge("e3", "U", "V", length),
        ),
    )


def k4(length: float = 1.0) -> TropicalCurve:
    """Complete graph on four vertices; genus 3."""
    vertices = ("P", "Q", "R", "S")
    edges = []
    for i, a in enumerate(vertices):
        for b in vertices[i + 1 :]:
            edges.append(Edge(f"{a.lower()}{b.lower()}", a, b, length))
    return TropicalCurve(vertices, tuple(edges))


def projective_line() -> TropicalCurve:
    """The normalized projective line: two infinite edges joined at a seam."""
    return TropicalCurve(
        ("L", "R", "O"),
        (
            Edge("left", "L", "O", INF),
            Edge("right", "R", "O", INF),
        ),
        normalizations=({"edge": "axis", "vertex": "O", "left": "left", "right": "right"},),
    )


def star(legs: int = 3) -> TropicalCurve:
    """One center with ``legs`` infinite legs; genus 0."""
    vertices = ["O"] + [f"L{i}" for i in range(1, legs + 1)]
    edges = tuple(Edge(f"leg{i}", f"L{i}", "O", INF) for i in range(1, legs + 1))
    return TropicalCurve(tuple(vertices), edges)


def triangle_with_legs(length: float = 1.0) -> TropicalCurve:
    """Triangle plus two infinite legs; genus 1."""
    base = triangle(length)
    vertices = base.vertices + ("LA", "LB")
    edges = base.edges + (
        Edge("legA", "LA", "A", INF),
        Edge("legB", "LB", "B", INF),
    )
    return TropicalCurve(vertices, edges)


def single_edge(length: float = 1.0) -> TropicalCurve:
    """A single finite edge; not a valid tropical curve (both endpoints have
    degree one) but a handy oracle fixture for the discrete systems."""
    return TropicalCurve(("A", "B"), (Edge("e", "A", "B", length),))
