"""Static undirected graphs with O(1) degree and random-neighbor queries.

Storage is CSR-style (indptr/indices) so that sampling a uniformly random
neighbor of a vertex is a single array index. Graphs are immutable after
construction (the backing arrays are marked read-only) and safe to share
across threads; random streams are always per-caller.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Graph",
    "GraphFormatError",
    "IsolatedVertexError",
    "load_graph",
    "save_graph",
    "graph_from_edges",
    "random_neighbor",
    "generate_random_regular",
    "generate_random_max_degree",
    "path_graph",
    "cycle_graph",
    "complete_graph",
]


class GraphFormatError(ValueError):
    """Malformed graph input (parse errors, self-loops, ids out of range)."""


class IsolatedVertexError(ValueError):
    """random_neighbor called on a vertex of degree zero."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph in CSR form.

    indptr[v]:indptr[v+1] slices `indices` into the (sorted) neighbor list
    of v.  Invariants: symmetric adjacency, no self-loops, no duplicates,
    degrees[v] == indptr[v+1]-indptr[v], max_degree == degrees.max().
    """

    n: int
    indptr: np.ndarray   # int64, length n+1
    indices: np.ndarray  # int32, length 2*|E|
    degrees: np.ndarray  # int64, length n
    max_degree: int

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def edges(self):
        """Iterate each undirected edge once as (u, v) with u < v."""
        for u in range(self.n):
            for w in self.neighbors(u):
                if u < w:
                    yield (u, int(w))

    @property
    def num_edges(self) -> int:
        return int(self.indices.size // 2)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def graph_from_edges(edges, n: int | None = None) -> Graph:
    """Build a Graph from an iterable of (u, v) pairs.

    Duplicate edges are silently deduplicated; self-loops raise.  Vertex
    count defaults to max id + 1 (vertices are dense 0-based integers).
    """
    seen = set()
    max_id = -1
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise GraphFormatError(f"self-loop at vertex {u}")
        if u < 0 or v < 0:
            raise GraphFormatError(f"negative vertex id in edge ({u}, {v})")
        if u > v:
            u, v = v, u
        seen.add((u, v))
        max_id = max(max_id, v)
    if n is None:
        n = max_id + 1
    elif max_id >= n:
        raise GraphFormatError(f"vertex id {max_id} out of range [0, {n})")
    degrees = np.zeros(n, dtype=np.int64)
    for u, v in seen:
        degrees[u] += 1
        degrees[v] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])
    indices = np.empty(int(indptr[-1]), dtype=np.int32)
    fill = indptr[:-1].copy()
    for u, v in sorted(seen):
        indices[fill[u]] = v
        fill[u] += 1
        indices[fill[v]] = u
        fill[v] += 1
    # per-vertex neighbor lists sorted for reproducibility
    for v in range(n):
        indices[indptr[v]:indptr[v + 1]].sort()
    g = Graph(n=n, indptr=_freeze(indptr), indices=_freeze(indices),
              degrees=_freeze(degrees), max_degree=int(degrees.max(initial=0)))
    return g


def _parse_edge_list(data: bytes) -> Graph:
    edges = []
    for lineno, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: non-integer vertex id in {raw!r}") from exc
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop at vertex {u}")
        edges.append((u, v))
    return graph_from_edges(edges)


def _parse_binary(data: bytes) -> Graph:
    # little-endian u64 n, then per vertex: u64 length followed by u32 ids
    off = 0
    if len(data) < 8:
        raise GraphFormatError("binary graph truncated at offset 0: missing vertex count")
    (n,) = struct.unpack_from("<Q", data, off)
    off += 8
    adj = []
    for v in range(n):
        if len(data) < off + 8:
            raise GraphFormatError(f"binary graph truncated at offset {off}: missing length of vertex {v}")
        (length,) = struct.unpack_from("<Q", data, off)
        off += 8
        end = off + 4 * length
        if len(data) < end:
            raise GraphFormatError(f"binary graph truncated at offset {off}: vertex {v} neighbor list")
        nbrs = np.frombuffer(data, dtype="<u4", count=length, offset=off)
        off = end
        adj.append(nbrs)
    edges = []
    for v, nbrs in enumerate(adj):
        for w in nbrs:
            w = int(w)
            if w >= n:
                raise GraphFormatError(f"vertex id {w} out of range [0, {n})")
            if w == v:
                raise GraphFormatError(f"self-loop at vertex {v}")
            edges.append((v, w))
    g = graph_from_edges(edges, n=n)
    # adjacency must have been symmetric in the file
    for v, nbrs in enumerate(adj):
        if sorted(int(w) for w in set(map(int, nbrs))) != list(map(int, g.neighbors(v))):
            raise GraphFormatError(f"binary adjacency not symmetric at vertex {v}")
    return g


def load_graph(source, fmt: str | None = None) -> Graph:
    """Load a graph from a path, bytes, or binary stream.

    fmt is 'edge-list' or 'binary'; if None it is inferred from the file
    extension ('.bin'/'.adj' binary, everything else edge-list).
    """
    name = None
    if isinstance(source, (str, bytes)) and not isinstance(source, bytes):
        name = source
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
        name = getattr(source, "name", None)
    if fmt is None:
        if name is not None and str(name).endswith((".bin", ".adj")):
            fmt = "binary"
        else:
            fmt = "edge-list"
    if fmt == "edge-list":
        return _parse_edge_list(data)
    if fmt == "binary":
        return _parse_binary(data)
    raise GraphFormatError(f"unknown graph format {fmt!r}")


def save_graph(g: Graph, target, fmt: str = "binary") -> None:
    """Write a graph; binary round-trips byte-exactly through load_graph."""
    if isinstance(target, str):
        with open(target, "wb") as fh:
            save_graph(g, fh, fmt=fmt)
        return
    if fmt == "binary":
        target.write(struct.pack("<Q", g.n))
        for v in range(g.n):
            nbrs = g.neighbors(v)
            target.write(struct.pack("<Q", len(nbrs)))
            target.write(np.asarray(nbrs, dtype="<u4").tobytes())
    elif fmt == "edge-list":
        out = io.StringIO()
        for u, v in g.edges():
            out.write(f"{u} {v}\n")
        target.write(out.getvalue().encode("utf-8"))
    else:
        raise GraphFormatError(f"unknown graph format {fmt!r}")


def random_neighbor(g: Graph, v: int, rng: np.random.Generator) -> int:
    """Uniform random neighbor of v in O(1) (one array index)."""
    d = g.indptr[v + 1] - g.indptr[v]
    if d == 0:
        raise IsolatedVertexError(f"vertex {v} has no neighbors")
    return int(g.indices[g.indptr[v] + rng.integers(d)])


def generate_random_regular(n: int, d: int, rng: np.random.Generator,
                            max_tries: int = 1000) -> Graph:
    """Random simple d-regular graph via the configuration model.

    Pairings with self-loops or multi-edges are rejected and redrawn.
    """
    if (n * d) % 2 != 0:
        raise ValueError(f"n*d must be even, got n={n}, d={d}")
    if not 0 <= d < n:
        raise ValueError(f"need 0 <= d < n, got n={n}, d={d}")
    if d == 0:
        return graph_from_edges([], n=n)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(max_tries):
        perm = rng.permutation(stubs)
        us, vs = perm[0::2], perm[1::2]
        if np.any(us == vs):
            continue
        lo = np.minimum(us, vs)
        hi = np.maximum(us, vs)
        keys = lo.astype(np.int64) * n + hi
        if np.unique(keys).size != keys.size:
            continue
        return graph_from_edges(zip(lo.tolist(), hi.tolist()), n=n)
    raise RuntimeError(f"configuration model failed after {max_tries} tries (n={n}, d={d})")


def generate_random_max_degree(n: int, dmax: int, rng: np.random.Generator,
                               p: float = 0.5, max_tries: int = 10000) -> Graph:
    """Random simple graph conditioned on max degree exactly dmax.

    Rejection sampling on G(n, p); used for small test instances where a
    regular graph does not exist (odd n*d).
    """
    for _ in range(max_tries):
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)
                 if rng.random() < p]
        g = graph_from_edges(edges, n=n)
        if g.max_degree == dmax:
            return g
    raise RuntimeError(f"no max-degree-{dmax} graph found after {max_tries} tries")


def path_graph(n: int) -> Graph:
    return graph_from_edges([(i, i + 1) for i in range(n - 1)], n=n)


def cycle_graph(n: int) -> Graph:
    return graph_from_edges([(i, (i + 1) % n) for i in range(n)], n=n)


def complete_graph(n: int) -> Graph:
    return graph_from_edges([(u, v) for u in range(n) for v in range(u + 1, n)], n=n)
