"""Adjacency-matrix utilities.

Entry ``W[i, j]`` is the weight of the edge ``i -> j``. Regime indices are
1-based node labels with 0 reserved for the observational regime, while
array indices stay 0-based: intervening on node ``k`` touches column ``k - 1``.
"""
from __future__ import annotations

from collections import deque
from pathlib import Path

import numpy as np

from .errors import DatasetParseError, InvalidInputError


def as_adjacency(W, *, zero_diagonal: bool = False) -> np.ndarray:
    W = np.array(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise InvalidInputError(f"adjacency matrix must be square, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise InvalidInputError("adjacency matrix has non-finite entries")
    if zero_diagonal:
        np.fill_diagonal(W, 0.0)
    elif np.any(np.diag(W) != 0):
        raise InvalidInputError("adjacency matrix has a nonzero diagonal")
    return W


def mask_intervention(W, k: int) -> np.ndarray:
    """Copy of ``W`` with the incoming edges of node ``k`` removed (k=0: unchanged)."""
    W = np.array(W, dtype=float)
    p = W.shape[0]
    if not 0 <= k <= p:
        raise IndexError(f"regime index {k} out of range 0..{p}")
    if k:
        W[:, k - 1] = 0.0
    return W


def threshold(W, tau: float) -> np.ndarray:
    """Binary support ``|w_ij| > tau`` (strict). The result may contain cycles."""
    if tau < 0:
        raise InvalidInputError("threshold must be nonnegative")
    return (np.abs(np.asarray(W, dtype=float)) > tau).astype(np.int8)


def _check_binary(B) -> np.ndarray:
    B = np.asarray(B)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {B.shape}")
    B = B != 0
    if B.diagonal().any():
        raise InvalidInputError("self-loops (nonzero diagonal) are not allowed")
    return B


def topological_order(B) -> tuple[list[int] | None, set[int]]:
    """Kahn's algorithm.

    Returns ``(order, set())`` when acyclic. Otherwise returns ``(None, nodes)``
    where ``nodes`` is the vertex set of one directed cycle. Nodes are 0-based;
    ties are broken by the smallest index so the order is deterministic.
    """
    B = _check_binary(B)
    p = B.shape[0]
    indeg = B.sum(axis=0).astype(int)
    queue = deque(i for i in range(p) if indeg[i] == 0)
    order = []
    while queue:
        i = queue.popleft()
        order.append(i)
        for j in np.flatnonzero(B[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(int(j))
    if len(order) == p:
        return order, set()
    return None, set(find_cycle(B))


def is_acyclic(B) -> bool:
    return topological_order(B)[0] is not None


def find_cycle(B) -> list[int]:
    """Nodes of one directed cycle in order, or ``[]`` if the graph is acyclic."""
    B = _check_binary(B)
    p = B.shape[0]
    color = np.zeros(p, dtype=np.int8)  # 0 new, 1 on stack, 2 done
    parent = [-1] * p
    for root in range(p):
        if color[root]:
            continue
        stack = [(root, iter(np.flatnonzero(B[root])))]
        color[root] = 1
        while stack:
            node, children = stack[-1]
            for child in children:
                child = int(child)
                if color[child] == 0:
                    color[child] = 1
                    parent[child] = node
                    stack.append((child, iter(np.flatnonzero(B[child]))))
                    break
                if color[child] == 1:
                    cycle = [node]
                    while cycle[-1] != child:
                        cycle.append(parent[cycle[-1]])
                    return cycle[::-1]
            else:
                color[node] = 2
                stack.pop()
    return []


def postprocess(W, tau: float = 0.0) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Zero the diagonal, threshold at ``tau``, then break any remaining cycles.

    While the thresholded support has a cycle, the smallest-magnitude edge on
    a detected cycle is removed. Returns the cleaned weight matrix and the
    removed edges (0-based, in removal order).
    """
    W = as_adjacency(W, zero_diagonal=True)
    W[np.abs(W) <= tau] = 0.0
    removed = []
    while True:
        cycle = find_cycle(W != 0)
        if not cycle:
            return W, removed
        edges = list(zip(cycle, cycle[1:] + cycle[:1]))
        i, j = min(edges, key=lambda e: (abs(W[e]), e))
        W[i, j] = 0.0
        removed.append((i, j))


def read_adjacency(path) -> np.ndarray:
    """Read a headerless TSV of p rows by p floats."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(x) for x in line.split("\t")])
        except ValueError as exc:
            raise DatasetParseError(f"non-numeric cell in {path}: {exc}", lineno) from None
        if len(rows[-1]) != len(rows[0]):
            raise DatasetParseError(f"ragged row in {path}", lineno)
    W = np.array(rows, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DatasetParseError(f"{path} is not a square matrix (shape {W.shape})")
    return W


def write_adjacency(W, path) -> None:
    W = np.asarray(W, dtype=float)
    lines = ["\t".join(repr(float(x)) for x in row) for row in W]
    Path(path).write_text("\n".join(lines) + "\n")
