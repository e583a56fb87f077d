"""Compatibility graphs of generators/projectors and their colorings."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codes import ProjectorCode, StabilizerCode
from .pauli import PauliOperator, bitwise_commutes, multiply

MAX_EXACT_VERTICES = 16


@dataclass(frozen=True)
class CompatGraph:
    """Undirected graph with adjacency stored as one bit set per vertex."""

    adjacency: tuple[int, ...]
    kind: str = "bitwise"

    def __post_init__(self):
        adj = tuple(int(a) for a in self.adjacency)
        object.__setattr__(self, "adjacency", adj)
        for v, nbrs in enumerate(adj):
            if (nbrs >> v) & 1:
                raise ValueError(f"self-loop at vertex {v}")
            for u in range(len(adj)):
                if ((nbrs >> u) & 1) != ((adj[u] >> v) & 1):
                    raise ValueError(f"asymmetric adjacency between {v} and {u}")

    @classmethod
    def from_edges(cls, num_vertices: int, edges, kind: str = "bitwise") -> CompatGraph:
        adj = [0] * num_vertices
        for i, j in edges:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return cls(tuple(adj), kind)

    @property
    def num_vertices(self) -> int:
        return len(self.adjacency)

    def degree(self, v: int) -> int:
        return bin(self.adjacency[v]).count("1")

    @property
    def max_degree(self) -> int:
        return max((self.degree(v) for v in range(self.num_vertices)), default=0)

    def has_edge(self, i: int, j: int) -> bool:
        return bool((self.adjacency[i] >> j) & 1)

    def edges(self) -> list[tuple[int, int]]:
        return [
            (i, j)
            for i in range(self.num_vertices)
            for j in range(i + 1, self.num_vertices)
            if self.has_edge(i, j)
        ]


@dataclass(frozen=True)
class Coloring:
    assignment: tuple[int, ...]
    exact: bool = False

    @property
    def num_colors(self) -> int:
        return max(self.assignment, default=-1) + 1

    @property
    def classes(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(v for v, c in enumerate(self.assignment) if c == color)
            for color in range(self.num_colors)
        )

    def is_valid_for(self, graph: CompatGraph) -> bool:
        if len(self.assignment) != graph.num_vertices:
            return False
        return all(self.assignment[i] != self.assignment[j] for i, j in graph.edges())

    def to_dict(self) -> dict:
        return {
            "assignment": {str(v): c for v, c in enumerate(self.assignment)},
            "classes": [list(c) for c in self.classes],
            "chi": self.num_colors,
            "exact": self.exact,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def bitwise_graph(generators: Sequence[PauliOperator]) -> CompatGraph:
    """Edge (i, j) iff generators i and j do not bit-wise commute."""
    m = len(generators)
    edges = [
        (i, j)
        for i in range(m)
        for j in range(i + 1, m)
        if not bitwise_commutes(generators[i], generators[j])
    ]
    return CompatGraph.from_edges(m, edges, "bitwise")


def support_graph(pcode: ProjectorCode) -> CompatGraph:
    """Edge (i, j) iff the supports of projectors i and j overlap."""
    supports = [set(p.support) for p in pcode.projectors]
    m = len(supports)
    edges = [(i, j) for i in range(m) for j in range(i + 1, m) if supports[i] & supports[j]]
    return CompatGraph.from_edges(m, edges, "support")


def _pick_vertex(graph: CompatGraph, colors: list[int], saturation: list[int]) -> int:
    best, best_key = -1, None
    for v in range(graph.num_vertices):
        if colors[v] >= 0:
            continue
        key = (bin(saturation[v]).count("1"), graph.degree(v), -v)
        if best_key is None or key > best_key:
            best, best_key = v, key
    return best


def color_greedy(graph: CompatGraph) -> Coloring:
    """DSATUR: highest saturation first, ties by degree then lowest index."""
    m = graph.num_vertices
    colors = [-1] * m
    saturation = [0] * m  # bit set of neighbour colours
    for _ in range(m):
        v = _pick_vertex(graph, colors, saturation)
        c = 0
        while (saturation[v] >> c) & 1:
            c += 1
        colors[v] = c
        for u in range(m):
            if graph.has_edge(v, u):
                saturation[u] |= 1 << c
    return Coloring(tuple(colors), exact=m == 0)


def color_exact(graph: CompatGraph, max_vertices: int = MAX_EXACT_VERTICES) -> Coloring:
    """Minimum coloring by DSATUR-ordered branch and bound."""
    m = graph.num_vertices
    if m > max_vertices:
        raise ValueError(f"exact coloring limited to {max_vertices} vertices, got {m}")
    greedy = color_greedy(graph)
    best = {"chi": greedy.num_colors, "colors": list(greedy.assignment)}
    if m == 0:
        return Coloring((), exact=True)

    colors = [-1] * m

    def saturation_sets() -> list[int]:
        sat = [0] * m
        for v in range(m):
            if colors[v] >= 0:
                for u in range(m):
                    if graph.has_edge(v, u):
                        sat[u] |= 1 << colors[v]
        return sat

    def search(num_colored: int, used: int) -> None:
        if used >= best["chi"]:
            return
        if num_colored == m:
            best["chi"], best["colors"] = used, colors.copy()
            return
        sat = saturation_sets()
        v = _pick_vertex(graph, colors, sat)
        for c in range(used + 1):
            if max(used, c + 1) >= best["chi"]:
                break
            if (sat[v] >> c) & 1:
                continue
            colors[v] = c
            search(num_colored + 1, max(used, c + 1))
            colors[v] = -1

    search(0, 0)
    return Coloring(tuple(best["colors"]), exact=True)


def color(graph: CompatGraph, exact: bool | None = None) -> Coloring:
    """Exact coloring when affordable, DSATUR otherwise."""
    if exact is None:
        exact = graph.num_vertices <= MAX_EXACT_VERTICES
    return color_exact(graph) if exact else color_greedy(graph)


def optimize_generator_set(
    code: StabilizerCode,
    budget: int = 200,
    seed: int = 0,
    restarts: int = 4,
) -> tuple[StabilizerCode, Coloring]:
    """Hill-climb over generator sets ``S_i <- S_i S_j`` to lower chi(G_S).

    Moves that do not increase the chromatic number are accepted. Restart ``r``
    draws from its own stream seeded by ``(seed, r)``; the overall result is the
    minimum-chi set, ties going to the lowest restart index.
    """
    exact = code.m <= MAX_EXACT_VERTICES
    start = color(bitwise_graph(code.generators), exact)
    best_code, best_col = code, start
    if code.m < 2:
        return best_code, best_col

    for r in range(restarts):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, r])))
        cur_code, cur_col = code, start
        for _ in range(budget):
            i, j = rng.choice(code.m, size=2, replace=False)
            gens = list(cur_code.generators)
            gens[i] = multiply(gens[i], gens[j])
            cand = cur_code.with_generators(gens)  # revalidates independence and commutation
            cand_col = color(bitwise_graph(cand.generators), exact)
            if cand_col.num_colors <= cur_col.num_colors:
                cur_code, cur_col = cand, cand_col
                if cur_col.num_colors < best_col.num_colors:
                    best_code, best_col = cur_code, cur_col
            if best_col.num_colors <= 1:
                return best_code, best_col
    return best_code, best_col
