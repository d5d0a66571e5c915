"""Structural divergence between two thresholded DBNs.

Every metric here is oriented so that lower means more similar, which lets the
detector apply one decision rule regardless of the metric chosen.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .core import BinaryDbn, NodeSetMismatch


class DivergenceKind(str, Enum):
    SHD = "shd"
    JACCARD = "jaccard"
    LAPLACIAN_SPECTRAL = "laplacian_spectral"


def _check(g1: BinaryDbn, g2: BinaryDbn):
    if g1.node_count != g2.node_count or g1.lag != g2.lag:
        raise NodeSetMismatch(
            f"graphs differ: nodes {g1.node_count} vs {g2.node_count}, lag {g1.lag} vs {g2.lag}")


def shd(g1: BinaryDbn, g2: BinaryDbn, include_inter: bool = True, reversal_cost: int = 2) -> int:
    """Size of the symmetric difference of the typed edge sets.

    Lag is part of an inter edge's identity. With ``reversal_cost=1`` an intra edge
    present as ``j->i`` in one graph and ``i->j`` in the other counts once instead
    of twice.
    """
    _check(g1, g2)
    if reversal_cost not in (1, 2):
        raise ValueError("reversal_cost must be 1 or 2")
    e1 = g1.typed_edges(include_inter)
    e2 = g2.typed_edges(include_inter)
    dist = len(e1 - e2) + len(e2 - e1)
    if reversal_cost == 1:
        only1 = g1.intra_edges - g2.intra_edges
        only2 = g2.intra_edges - g1.intra_edges
        dist -= sum(1 for j, i in only1 if (i, j) in only2)
    return dist


def jaccard_similarity(g1: BinaryDbn, g2: BinaryDbn, include_inter: bool = True) -> float:
    _check(g1, g2)
    e1 = g1.typed_edges(include_inter)
    e2 = g2.typed_edges(include_inter)
    union = e1 | e2
    if not union:
        return 1.0
    return len(e1 & e2) / len(union)


def undirected_adjacency(g: BinaryDbn, include_inter: bool = True) -> np.ndarray:
    """Collapse intra and all-lag inter edges onto one simple undirected graph."""
    adj = np.zeros((g.node_count, g.node_count))
    pairs = list(g.intra_edges)
    if include_inter:
        pairs += [(j, i) for j, _, i in g.inter_edges]
    for j, i in pairs:
        if j != i:
            adj[j, i] = adj[i, j] = 1.0
    return adj


def laplacian_spectrum(g: BinaryDbn, include_inter: bool = True) -> np.ndarray:
    adj = undirected_adjacency(g, include_inter)
    lap = np.diag(adj.sum(axis=1)) - adj
    return np.linalg.eigvalsh(lap)


def laplacian_spectral_distance(g1: BinaryDbn, g2: BinaryDbn, include_inter: bool = True) -> float:
    _check(g1, g2)
    diff = laplacian_spectrum(g1, include_inter) - laplacian_spectrum(g2, include_inter)
    return float(np.linalg.norm(diff))


def divergence(kind, g1: BinaryDbn, g2: BinaryDbn, include_inter: bool = True,
               reversal_cost: int = 2) -> float:
    kind = DivergenceKind(kind)
    if kind is DivergenceKind.SHD:
        return float(shd(g1, g2, include_inter, reversal_cost))
    if kind is DivergenceKind.JACCARD:
        return 1.0 - jaccard_similarity(g1, g2, include_inter)
    return laplacian_spectral_distance(g1, g2, include_inter)
