"""Non-uniform time partitions of ``[0, T]`` and their bisection."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True, eq=False)
class TimeMesh:
    """Partition ``0 = t_0 < t_1 < ... < t_N = T``.

    Only the node times are stored; the step sizes ``kappa_n = t_{n+1} - t_n``
    are derived on demand.
    """

    nodes: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError(f"first node must be 0, got {nodes[0]!r}")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def __len__(self) -> int:
        return self.nodes.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeMesh):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes)

    def __hash__(self) -> int:
        return hash(self.nodes.tobytes())

    def index_of(self, t: float) -> int:
        """Return ``n`` with ``t_n == t``; raise if ``t`` is not a node."""
        n = int(np.searchsorted(self.nodes, t))
        if n > self.N or self.nodes[n] != t:
            # tolerate round-off in user supplied times
            n = int(np.argmin(np.abs(self.nodes - t)))
            if abs(self.nodes[n] - t) > 1e-12 * max(1.0, abs(t)):
                raise ValueError(f"t = {t!r} is not a mesh node")
        return n

    def interval_of(self, t: np.ndarray | float) -> np.ndarray:
        """Index ``n`` of the interval ``I_n = (t_n, t_{n+1}]`` holding ``t``.

        ``t = 0`` is assigned to ``I_0``.
        """
        idx = np.searchsorted(self.nodes, t, side="left") - 1
        return np.clip(idx, 0, self.N - 1)


def graded_mesh(T: float, N: int, k: float = 1.0) -> TimeMesh:
    """Nodes ``t_j = T (j/N)^k``; ``k = 1`` is the uniform mesh."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if k < 1:
        raise ValueError("grading exponent k must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    j = np.arange(N + 1, dtype=float)
    nodes = T * (j / N) ** k
    nodes[-1] = T
    return TimeMesh(nodes)


def uniform_mesh(T: float, N: int) -> TimeMesh:
    return graded_mesh(T, N, 1.0)


def bisect(mesh: TimeMesh, marked: Iterable[int]) -> TimeMesh:
    """Split every marked interval at its midpoint ``t_n + kappa_n / 2``."""
    marked = sorted({int(n) for n in marked})
    if marked and (marked[0] < 0 or marked[-1] > mesh.N - 1):
        raise IndexError(f"interval index out of range [0, {mesh.N - 1}]")
    if not marked:
        return mesh
    idx = np.asarray(marked)
    mids = mesh.nodes[idx] + mesh.steps[idx] / 2
    return TimeMesh(np.sort(np.concatenate([mesh.nodes, mids])))


def dump_mesh(mesh: TimeMesh, path: str | Path) -> None:
    """Write one node time per line."""
    text = "".join(f"{float(t)!r}\n" for t in mesh.nodes)
    Path(path).write_text(text)


def load_mesh(path: str | Path) -> TimeMesh:
    lines = Path(path).read_text().split()
    return TimeMesh(np.array([float(s) for s in lines]))
