"""Finite graphs the trap dynamics run on.

Four kinds are supported: a segment of the integer line, a square torus, the
complete graph, and the binary hypercube.  Small and sparse graphs carry an
explicit CSR adjacency; the complete graph and the hypercube are implicit
(their neighborhoods are cheap to enumerate on the fly, and materializing
them would be wasteful at the sizes the experiments use).
"""

from dataclasses import dataclass, field

import numpy as np

KINDS = ("segment", "torus", "complete", "hypercube")

MAX_HYPERCUBE_BITS = 24


@dataclass(frozen=True)
class Graph:
    """A finite undirected graph.

    kind      one of KINDS
    param     the size parameter in the constructor (L, L, M or N)
    n         number of vertices
    indptr    CSR row pointers (int64), None for implicit kinds
    indices   CSR column indices (int64), None for implicit kinds
    origin    canonical start vertex (center of the segment, (0,0) on the
              torus, vertex 0 otherwise)
    boundary  uint8 mask of vertices the walk is not allowed to enter under
              the default boundary policy; nonzero only for the segment
    """

    kind: str
    param: int
    n: int
    indptr: np.ndarray | None = field(repr=False, default=None)
    indices: np.ndarray | None = field(repr=False, default=None)
    origin: int = 0
    boundary: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.boundary is None:
            object.__setattr__(self, "boundary", np.zeros(self.n, dtype=np.uint8))

    def label(self):
        return f"{self.kind}:{self.param}"


def segment(L):
    """Integer sites -L..L as a path graph (2L+1 vertices).

    Vertex index i corresponds to site i - L; the origin sits at index L.
    The two endpoints are flagged as boundary.
    """
    if L < 1:
        raise ValueError("segment needs L >= 1")
    n = 2 * L + 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for i in range(n):
        nbrs = [j for j in (i - 1, i + 1) if 0 <= j < n]
        indices.extend(nbrs)
        indptr[i + 1] = indptr[i] + len(nbrs)
    boundary = np.zeros(n, dtype=np.uint8)
    boundary[0] = boundary[n - 1] = 1
    return Graph("segment", L, n, indptr, np.asarray(indices, dtype=np.int64),
                 origin=L, boundary=boundary)


def torus2d(L):
    """L x L square lattice with periodic boundary, vertex (i,j) -> i*L + j.

    L >= 3 so that the four lattice neighbors are distinct vertices.
    """
    if L < 3:
        raise ValueError("torus2d needs L >= 3 (smaller L collapses neighbors)")
    n = L * L
    indptr = np.arange(0, 4 * n + 1, 4, dtype=np.int64)
    indices = np.empty(4 * n, dtype=np.int64)
    for i in range(L):
        for j in range(L):
            v = i * L + j
            nbrs = sorted((
                ((i - 1) % L) * L + j,
                ((i + 1) % L) * L + j,
                i * L + (j - 1) % L,
                i * L + (j + 1) % L,
            ))
            indices[4 * v:4 * v + 4] = nbrs
    return Graph("torus", L, n, indptr, indices, origin=0)


def complete(M):
    """Complete graph on M >= 2 vertices (implicit adjacency)."""
    if M < 2:
        raise ValueError("complete graph needs M >= 2")
    return Graph("complete", M, M)


def hypercube(N):
    """Binary hypercube {0,1}^N; neighbors differ in exactly one bit."""
    if not 1 <= N <= MAX_HYPERCUBE_BITS:
        raise ValueError(f"hypercube supports 1 <= N <= {MAX_HYPERCUBE_BITS}")
    return Graph("hypercube", N, 1 << N)


def parse_graph(text):
    """Build a graph from a 'kind:param' string, e.g. 'segment:100'."""
    try:
        kind, raw = text.split(":")
        param = int(raw)
    except ValueError:
        raise ValueError(f"graph spec must look like 'kind:int', got {text!r}") from None
    makers = {"segment": segment, "torus": torus2d,
              "complete": complete, "hypercube": hypercube}
    if kind not in makers:
        raise ValueError(f"unknown graph kind {kind!r}, expected one of {KINDS}")
    return makers[kind](param)


def neighbors(graph, x):
    """Neighbor indices of vertex x, ascending."""
    if not 0 <= x < graph.n:
        raise IndexError(f"vertex {x} outside 0..{graph.n - 1}")
    if graph.kind == "complete":
        out = np.arange(graph.n, dtype=np.int64)
        return np.delete(out, x)
    if graph.kind == "hypercube":
        return np.sort(np.asarray([x ^ (1 << b) for b in range(graph.param)],
                                  dtype=np.int64))
    return graph.indices[graph.indptr[x]:graph.indptr[x + 1]]


def degree(graph, x):
    if graph.kind == "complete":
        return graph.n - 1
    if graph.kind == "hypercube":
        return graph.param
    return int(graph.indptr[x + 1] - graph.indptr[x])


def vertex_label(graph, x):
    """Structured label of a vertex index.

    segment: signed site (index 0 is site -L); torus: (row, col);
    hypercube: tuple of spins in {-1,+1}, bit i of the index carrying spin i
    (0 bit = -1); complete: the index itself.
    """
    if not 0 <= x < graph.n:
        raise IndexError(f"vertex {x} outside 0..{graph.n - 1}")
    x = int(x)
    if graph.kind == "segment":
        return x - graph.param
    if graph.kind == "torus":
        return divmod(x, graph.param)
    if graph.kind == "hypercube":
        return tuple(1 if (x >> b) & 1 else -1 for b in range(graph.param))
    return x


def vertex_index(graph, label):
    """Inverse of vertex_label; round-trips exactly."""
    if graph.kind == "segment":
        x = int(label) + graph.param
    elif graph.kind == "torus":
        r, c = label
        if not (0 <= r < graph.param and 0 <= c < graph.param):
            raise IndexError(f"torus label {label} out of range")
        x = r * graph.param + c
    elif graph.kind == "hypercube":
        if len(label) != graph.param or any(s not in (-1, 1) for s in label):
            raise ValueError(f"hypercube label must be {graph.param} spins of +-1")
        x = sum(1 << b for b, s in enumerate(label) if s == 1)
    else:
        x = int(label)
    if not 0 <= x < graph.n:
        raise IndexError(f"label {label} outside the graph")
    return x
