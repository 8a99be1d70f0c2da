"""Metric graphs and trees with exact rational edge lengths.

Everything here is exact-rational end-to-end: geodesics, piecewise-linear
ball-volume (volume growth) functions, node multisets, the counterexample
generators, and the constructive reconstruction of a metric tree from its
node multiset.  Equalities such as multiset equality or zero transport
cost are certified, never approximated.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .core import FiniteMMSpace
from .scalars import format_rational, parse_rational


class DistinctnessViolated(Exception):
    """Node multiset contains equal functions; reconstruction needs them distinct."""


class InconsistentMultiset(Exception):
    """No metric tree realizes the given node multiset."""


# ---------------------------------------------------------------------------
# Piecewise-linear functions and CDFs (exact rational).
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PwlFunc:
    """Continuous piecewise-linear function on [0, inf).

    Linear between breakpoints, constant beyond the last one, undefined
    (clamped to the first value) before the first.  Used for ball-volume
    functions in raw length units and for the intermediate arithmetic of
    the tree reconstruction.
    """

    xs: tuple
    ps: tuple

    def __post_init__(self):
        object.__setattr__(self, "xs", tuple(Fraction(x) for x in self.xs))
        object.__setattr__(self, "ps", tuple(Fraction(p) for p in self.ps))
        if len(self.xs) != len(self.ps) or not self.xs:
            raise ValueError("breakpoints and values must align")
        for a, b in zip(self.xs, self.xs[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")

    def __call__(self, r):
        r = Fraction(r)
        xs, ps = self.xs, self.ps
        if r <= xs[0]:
            return ps[0]
        if r >= xs[-1]:
            return ps[-1]
        lo, hi = 0, len(xs) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if xs[mid] <= r:
                lo = mid
            else:
                hi = mid
        t = (r - xs[lo]) / (xs[lo + 1] - xs[lo])
        return ps[lo] + t * (ps[lo + 1] - ps[lo])

    def right_slope(self, r):
        r = Fraction(r)
        xs, ps = self.xs, self.ps
        if r >= xs[-1]:
            return Fraction(0)
        i = 0
        for k in range(len(xs) - 1):
            if xs[k] <= r < xs[k + 1]:
                i = k
                break
        else:
            return Fraction(0)
        return (ps[i + 1] - ps[i]) / (xs[i + 1] - xs[i])

    def canonical(self) -> "PwlFunc":
        """Normal form: trailing flat run trimmed to its first point, then
        interior breakpoints that do not change the slope dropped.  Equal
        functions on [0, inf) get identical representations."""
        xs, ps = list(self.xs), list(self.ps)
        while len(ps) > 1 and ps[-2] == ps[-1]:
            xs.pop()
            ps.pop()
        keep = [0]
        for i in range(1, len(xs) - 1):
            s1 = (ps[i] - ps[keep[-1]]) / (xs[i] - xs[keep[-1]])
            s2 = (ps[i + 1] - ps[i]) / (xs[i + 1] - xs[i])
            if s1 != s2:
                keep.append(i)
        if len(xs) > 1:
            keep.append(len(xs) - 1)
        return PwlFunc(tuple(xs[i] for i in keep), tuple(ps[i] for i in keep))

    def key(self) -> tuple:
        c = self.canonical()
        return tuple(zip(c.xs, c.ps))

    def _binary(self, other, op):
        grid = sorted(set(self.xs) | set(other.xs))
        return PwlFunc(grid, [op(self(x), other(x)) for x in grid])

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def shift_left(self, c) -> "PwlFunc":
        """r -> f(r + c), restricted to r >= 0."""
        c = Fraction(c)
        xs = [x - c for x in self.xs if x - c > 0]
        ps = [self(x + c) for x in xs]
        return PwlFunc([Fraction(0)] + xs, [self(c)] + ps)

    def shift_right(self, c) -> "PwlFunc":
        """r -> f(r - c) for r >= c, first value held on [0, c]."""
        c = Fraction(c)
        xs = [Fraction(0)] + [x + c for x in self.xs]
        ps = [self.ps[0]] + list(self.ps)
        if xs[0] == xs[1]:
            xs, ps = xs[1:], ps[1:]
        return PwlFunc(xs, ps)

    def scale_values(self, factor) -> "PwlFunc":
        factor = Fraction(factor)
        return PwlFunc(self.xs, [p * factor for p in self.ps])


def ramp(lo, hi) -> PwlFunc:
    """0 until lo, slope 1 until hi, constant after."""
    lo, hi = Fraction(lo), Fraction(hi)
    if lo == 0:
        return PwlFunc((Fraction(0), hi), (Fraction(0), hi))
    return PwlFunc((Fraction(0), lo, hi), (Fraction(0), Fraction(0), hi - lo))


@dataclass(frozen=True)
class PwlCDF:
    """Continuous piecewise-linear CDF: nondecreasing, 0 at 0, final value 1."""

    func: PwlFunc

    def __post_init__(self):
        f = self.func.canonical()
        object.__setattr__(self, "func", f)
        if f.ps[0] != 0 or f.ps[-1] != 1:
            raise ValueError("CDF must run from 0 to 1")
        for a, b in zip(f.ps, f.ps[1:]):
            if a > b:
                raise ValueError("CDF must be nondecreasing")

    @property
    def xs(self):
        return self.func.xs

    @property
    def ps(self):
        return self.func.ps

    def __call__(self, r):
        return self.func(r)

    def right_slope(self, r):
        return self.func.right_slope(r)

    def key(self):
        return self.func.key()


@dataclass(frozen=True)
class NodeMultiset:
    """Multiset of node volume-growth CDFs with the total length carried along.

    The initial slope of each entry times the total length recovers the
    node degree.
    """

    functions: tuple  # PwlCDF, sorted by canonical key
    total_length: Fraction

    def __post_init__(self):
        fs = tuple(sorted(self.functions, key=lambda f: f.key()))
        object.__setattr__(self, "functions", fs)
        object.__setattr__(self, "total_length", Fraction(self.total_length))

    def __len__(self):
        return len(self.functions)

    def __eq__(self, other):
        if not isinstance(other, NodeMultiset):
            return NotImplemented
        return (self.total_length == other.total_length
                and [f.key() for f in self.functions] == [f.key() for f in other.functions])

    def degrees(self) -> list:
        return [int(f.right_slope(0) * self.total_length) for f in self.functions]


# ---------------------------------------------------------------------------
# Metric graphs.
# ---------------------------------------------------------------------------

class GraphPoint:
    """A point of a metric graph: (edge index, rational offset)."""

    __slots__ = ("edge", "offset")

    def __init__(self, edge: int, offset):
        self.edge = int(edge)
        self.offset = Fraction(offset)

    def __repr__(self):
        return f"GraphPoint(edge={self.edge}, offset={self.offset})"

    def __eq__(self, other):
        return isinstance(other, GraphPoint) and \
            (self.edge, self.offset) == (other.edge, other.offset)

    def __hash__(self):
        return hash((self.edge, self.offset))


class MetricGraph:
    """Connected metric graph; vertices of degree 2 are forbidden except on
    the circle graph (one vertex, one self-loop, ``circle=True``)."""

    def __init__(self, num_vertices: int, edges: Sequence[Tuple[int, int, object]],
                 circle: bool = False):
        self.num_vertices = int(num_vertices)
        self.edges = tuple((int(u), int(v), Fraction(l)) for (u, v, l) in edges)
        self.circle = bool(circle)
        self._node_dist = None
        self._validate()

    @classmethod
    def circle_graph(cls, length) -> "MetricGraph":
        return cls(1, [(0, 0, Fraction(length))], circle=True)

    def _validate(self):
        if self.num_vertices < 1 or not self.edges:
            raise ValueError("graph needs at least one vertex and one edge")
        deg = [0] * self.num_vertices
        for (u, v, l) in self.edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError("edge endpoint out of range")
            if l <= 0:
                raise ValueError("edge lengths must be positive")
            deg[u] += 1
            deg[v] += 1
        if self.circle:
            if self.num_vertices != 1 or len(self.edges) != 1 or \
                    self.edges[0][0] != self.edges[0][1]:
                raise ValueError("circle graph is one vertex with one self-loop")
        else:
            for v, d in enumerate(deg):
                if d == 2:
                    raise ValueError(
                        f"vertex {v} has degree 2; smooth it into an edge first")
                if d == 0:
                    raise ValueError(f"vertex {v} is isolated")
        # connectivity
        seen = {0}
        stack = [0]
        adj = self.adjacency()
        while stack:
            v = stack.pop()
            for (_, w, _) in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != self.num_vertices:
            raise ValueError("graph must be connected")
        self.degrees = tuple(deg)

    def adjacency(self):
        adj = [[] for _ in range(self.num_vertices)]
        for idx, (u, v, l) in enumerate(self.edges):
            adj[u].append((idx, v, l))
            if u != v:
                adj[v].append((idx, u, l))
            else:
                adj[u].append((idx, u, l))
        return adj

    @property
    def total_length(self) -> Fraction:
        return sum(l for (_, _, l) in self.edges)

    @property
    def is_tree(self) -> bool:
        return not self.circle and len(self.edges) == self.num_vertices - 1

    def nodes(self) -> list:
        """Vertices of degree 1 or >= 3 (the circle graph has none)."""
        if self.circle:
            return []
        return list(range(self.num_vertices))

    def node_distances(self):
        if self._node_dist is None:
            self._node_dist = _node_distances(self.num_vertices, self.edges)
        return self._node_dist

    def point(self, edge: int, offset) -> GraphPoint:
        offset = Fraction(offset)
        if not 0 <= edge < len(self.edges):
            raise ValueError("edge index out of range")
        if not 0 <= offset <= self.edges[edge][2]:
            raise ValueError("offset outside the edge")
        return GraphPoint(edge, offset)

    def vertex_point(self, v: int) -> GraphPoint:
        for idx, (u, w, l) in enumerate(self.edges):
            if u == v:
                return GraphPoint(idx, Fraction(0))
            if w == v:
                return GraphPoint(idx, l)
        raise ValueError("vertex has no incident edge")

    def point_vertex(self, p: GraphPoint) -> Optional[int]:
        """The vertex a point coincides with, if any."""
        u, v, l = self.edges[p.edge]
        if p.offset == 0:
            return u
        if p.offset == l:
            return v
        return None


def _node_distances(nv: int, edges) -> list:
    INF = None
    dist = [[None] * nv for _ in range(nv)]
    for i in range(nv):
        dist[i][i] = Fraction(0)
    for (u, v, l) in edges:
        if u == v:
            continue
        if dist[u][v] is None or l < dist[u][v]:
            dist[u][v] = dist[v][u] = l
    for k in range(nv):
        dk = dist[k]
        for i in range(nv):
            dik = dist[i][k]
            if dik is None:
                continue
            di = dist[i]
            for j in range(nv):
                if dk[j] is None:
                    continue
                alt = dik + dk[j]
                if di[j] is None or alt < di[j]:
                    di[j] = alt
    return dist


def graph_distance(G: MetricGraph, a: GraphPoint, b: GraphPoint) -> Fraction:
    """Exact geodesic distance between two points."""
    D = G.node_distances()
    ua, va, la = G.edges[a.edge]
    ub, vb, lb = G.edges[b.edge]
    sa, sb = a.offset, b.offset
    cands = [sa + D[ua][ub] + sb,
             sa + D[ua][vb] + (lb - sb),
             (la - sa) + D[va][ub] + sb,
             (la - sa) + D[va][vb] + (lb - sb)]
    if a.edge == b.edge:
        cands.append(abs(sa - sb))
        if ua == va:  # self-loop: both arcs
            cands.append(la - abs(sa - sb))
    return min(cands)


def _point_to_vertex_dists(G: MetricGraph, x: GraphPoint) -> list:
    D = G.node_distances()
    u, v, l = G.edges[x.edge]
    s = x.offset
    return [min(s + D[u][w], (l - s) + D[v][w]) for w in range(G.num_vertices)]


def _edge_envelope_ramps(l: Fraction, lines, out):
    """Append [lo, hi] value-ranges of the monotone pieces of min(lines) on [0, l].

    Each line is (slope, intercept) with slope in {-1, +1}; all are valid
    lower-bound candidates on the whole interval.
    """
    cuts = {Fraction(0), l}
    for i in range(len(lines)):
        si, bi = lines[i]
        for j in range(i + 1, len(lines)):
            sj, bj = lines[j]
            if si == sj:
                continue
            x = (bj - bi) / (si - sj)
            if 0 < x < l:
                cuts.add(x)
    grid = sorted(cuts)
    for a, b in zip(grid, grid[1:]):
        mid = (a + b) / 2
        slope, inter = min(lines, key=lambda ln: ln[0] * mid + ln[1])
        va, vb = slope * a + inter, slope * b + inter
        lo, hi = (va, vb) if va <= vb else (vb, va)
        if lo != hi:
            out.append((lo, hi))


def _ball_volume_lengths(nv: int, edges, dist_to_vertex, same_edge: Optional[int],
                         same_offset: Optional[Fraction]) -> PwlFunc:
    """Ball volume around a point, in raw length units (PwlFunc from 0)."""
    ramps = []
    for idx, (u, v, l) in enumerate(edges):
        du, dv = dist_to_vertex[u], dist_to_vertex[v]
        base = [(Fraction(1), du), (Fraction(-1), dv + l)]
        if same_edge == idx and same_offset is not None:
            t = same_offset
            if t > 0:
                _edge_envelope_ramps_sub(Fraction(0), t, base + [(Fraction(-1), t)], ramps)
            if t < l:
                _edge_envelope_ramps_sub(t, l, base + [(Fraction(1), -t)], ramps)
        else:
            _edge_envelope_ramps(l, base, ramps)
    if not ramps:
        return PwlFunc((Fraction(0),), (Fraction(0),))
    cuts = sorted({Fraction(0)} | {r[0] for r in ramps} | {r[1] for r in ramps})
    values = [Fraction(0)]
    for a, b in zip(cuts, cuts[1:]):
        slope = sum(1 for (lo, hi) in ramps if lo <= a and b <= hi)
        values.append(values[-1] + slope * (b - a))
    return PwlFunc(cuts, values).canonical()


def _edge_envelope_ramps_sub(a: Fraction, b: Fraction, lines, out):
    """Envelope ramps restricted to the sub-interval [a, b]."""
    shifted = [(s, s * a + i) for (s, i) in lines]  # re-anchor at 0
    _edge_envelope_ramps(b - a, shifted, out)


def ball_volume_function(G: MetricGraph, x: GraphPoint) -> PwlCDF:
    """Exact normalized volume of closed balls around x, as a PwlCDF."""
    vtx = G.point_vertex(x)
    dists = _point_to_vertex_dists(G, x)
    if vtx is not None:
        raw = _ball_volume_lengths(G.num_vertices, G.edges, dists, None, None)
    else:
        raw = _ball_volume_lengths(G.num_vertices, G.edges, dists, x.edge, x.offset)
    return PwlCDF(raw.scale_values(Fraction(1) / G.total_length))


def ball_volume_lengths(G: MetricGraph, x: GraphPoint) -> PwlFunc:
    """Ball volume in raw length units (used by the reconstruction)."""
    vtx = G.point_vertex(x)
    dists = _point_to_vertex_dists(G, x)
    if vtx is not None:
        return _ball_volume_lengths(G.num_vertices, G.edges, dists, None, None)
    return _ball_volume_lengths(G.num_vertices, G.edges, dists, x.edge, x.offset)


def node_multiset(G: MetricGraph) -> NodeMultiset:
    funcs = [ball_volume_function(G, G.vertex_point(v)) for v in G.nodes()]
    return NodeMultiset(tuple(funcs), G.total_length)


def node_count_recovery(ms: NodeMultiset, r) -> dict:
    """Per-degree node counts extracted from value-band masses at radius r.

    Valid for r below half the shortest edge length (checked against the
    first breakpoints of the multiset functions).  Works downward from the
    largest degree: the band ((k-1)r, kr) receives mass k*r/(k-2) from each
    degree-k node and r/(l-2)*l from every larger degree l, so the counts
    unwind recursively; the leaf count is the (0, 2r) mass over r.
    """
    r = Fraction(r)
    L = ms.total_length
    min_edge = min(f.xs[1] for f in ms.functions if len(f.xs) > 1)
    if not 0 < r < min_edge / 2:
        raise ValueError(f"radius must lie in (0, {min_edge}/2)")
    degrees = ms.degrees()
    kmax = max(degrees)
    # band masses in length units, computed from the multiset functions:
    # each degree-k node's r-neighborhood has measure profile k * eps.
    leaf_band = Fraction(0)
    band = {k: Fraction(0) for k in range(3, kmax + 1)}
    for k in degrees:
        if k == 1:
            leaf_band += r
        elif k == 2:
            raise ValueError("degree-2 entries cannot occur in a node multiset")
        else:
            width = r / (k - 2)
            for j in range(3, k + 1):
                band[j] += k * width
    counts = {}
    acc = {k: Fraction(0) for k in range(3, kmax + 1)}
    for k in range(kmax, 2, -1):
        upper = sum(l * (r / (l - 2)) * counts.get(l, 0) for l in range(k + 1, kmax + 1))
        mass = band[k] - upper
        cnt = mass * (k - 2) / (k * r)
        if cnt.denominator != 1 or cnt < 0:
            raise InconsistentMultiset("band masses do not resolve to integer counts")
        if cnt:
            counts[k] = int(cnt)
    n1 = leaf_band / r
    if n1.denominator != 1:
        raise InconsistentMultiset("leaf band mass is not an integer multiple of r")
    if n1:
        counts[1] = int(n1)
    return dict(sorted(counts.items()))


# ---------------------------------------------------------------------------
# Tree reconstruction from a node multiset (subforest induction).
# ---------------------------------------------------------------------------

def _component_volume(nv: int, forest_edges, vertex: int,
                      comp_vertices: set) -> PwlFunc:
    edges = [e for e in forest_edges if e[0] in comp_vertices]
    if not edges:
        return PwlFunc((Fraction(0),), (Fraction(0),))
    remap = {v: i for i, v in enumerate(sorted(comp_vertices))}
    redges = [(remap[u], remap[v], l) for (u, v, l) in edges]
    D = _node_distances(len(remap), redges)
    src = remap[vertex]
    dists = D[src]
    return _ball_volume_lengths(len(remap), redges, dists, None, None)


def _first_slope_break(vt: PwlFunc, vc: PwlFunc) -> Fraction:
    """Smallest r > 0 where rightslope(vt) - rightslope(vc) != 1."""
    grid = sorted(set(vt.xs) | set(vc.xs))
    for x in grid:
        if vt.right_slope(x) - vc.right_slope(x) != 1:
            return x
    raise InconsistentMultiset("missing-edge length not found")


def _predict_parent(vt: PwlFunc, vc: PwlFunc, rj: Fraction) -> PwlFunc:
    """Volume function of the node across the missing edge of length rj.

    V(r) = V_T(v_j, r + rj) - V_C(v_j, r + rj) + min(r - rj, 0) + V_C(v_j, r - rj)
    with V_C evaluated as 0 at negative radii.
    """
    shifted = (vt - vc).shift_left(rj)
    neg_ramp = PwlFunc((Fraction(0), rj), (-rj, Fraction(0)))
    tail = vc.shift_right(rj)
    return (shifted + neg_ramp + tail).canonical()


def reconstruct_tree(ms: NodeMultiset) -> MetricGraph:
    """Rebuild a metric tree realizing the node multiset.

    Requires all functions pairwise distinct (raises DistinctnessViolated
    otherwise); raises InconsistentMultiset when no tree matches.  The
    construction grows leaf-rooted subforests, reads each missing edge
    length off the first slope defect, and identifies the opposite node by
    its predicted volume function.
    """
    L = ms.total_length
    funcs = [f.func.scale_values(L).canonical() for f in ms.functions]
    keys = [f.key() for f in funcs]
    if len(set(keys)) != len(keys):
        raise DistinctnessViolated("node functions must be pairwise distinct")
    key_index = {k: i for i, k in enumerate(keys)}
    n = len(funcs)
    degrees = ms.degrees()
    if n < 2:
        raise InconsistentMultiset("a metric tree has at least two nodes")

    # vertex ids coincide with function indices
    placed = {i for i, d in enumerate(degrees) if d == 1}
    if not placed:
        raise InconsistentMultiset("a metric tree has at least two leaves")
    forest_edges = []  # (u, v, length)
    uf = list(range(n))

    def find(v):
        while uf[v] != v:
            uf[v] = uf[uf[v]]
            v = uf[v]
        return v

    def forest_degree(v):
        return sum(1 for (a, b, _) in forest_edges if v in (a, b))

    for _ in range(2 * n + 2):
        if len(placed) == n and len(forest_edges) == n - 1:
            break
        frontier = [i for i in placed if degrees[i] == forest_degree(i) + 1]
        if not frontier:
            raise InconsistentMultiset("construction stalled before completion")
        predictions = []
        for i in frontier:
            comp = {w for w in placed if find(w) == find(i)}
            vc = _component_volume(n, forest_edges, i, comp)
            rj = _first_slope_break(funcs[i], vc)
            pred = _predict_parent(funcs[i], vc, rj)
            predictions.append((i, rj, pred.key()))
        added = False
        handled = {}
        for (i, rj, pkey) in predictions:
            if pkey not in key_index:
                raise InconsistentMultiset("predicted node function not in multiset")
            tgt = key_index[pkey]
            pair = (min(i, tgt), max(i, tgt))
            if pair in handled:
                if handled[pair] != rj:
                    raise InconsistentMultiset("mutual predictions disagree on edge length")
                continue
            placed.add(tgt)
            if find(i) == find(tgt):
                raise InconsistentMultiset("edge addition would create a cycle")
            forest_edges.append((i, tgt, rj))
            uf[find(i)] = find(tgt)
            handled[pair] = rj
            added = True
        if not added:
            raise InconsistentMultiset("no progress; multiset is unrealizable")
    if len(placed) != n or len(forest_edges) != n - 1:
        raise InconsistentMultiset("construction did not terminate in a tree")
    tree = MetricGraph(n, forest_edges)
    if node_multiset(tree) != ms:
        raise InconsistentMultiset("reconstructed tree does not reproduce the multiset")
    return tree


# ---------------------------------------------------------------------------
# Canonical form (decides isomorphism of metric trees).
# ---------------------------------------------------------------------------

def _tree_adjacency(T: MetricGraph):
    adj = [[] for _ in range(T.num_vertices)]
    for (u, v, l) in T.edges:
        adj[u].append((v, l))
        adj[v].append((u, l))
    return adj


def _centroids(T: MetricGraph) -> list:
    """Combinatorial centroid vertex (or adjacent pair) of a tree."""
    nv = T.num_vertices
    adj = _tree_adjacency(T)
    parent = [-1] * nv
    order = [0]
    seen = [False] * nv
    seen[0] = True
    for v in order:
        for (w, _) in adj[v]:
            if not seen[w]:
                seen[w] = True
                parent[w] = v
                order.append(w)
    size = [1] * nv
    for v in reversed(order):
        if parent[v] >= 0:
            size[parent[v]] += size[v]
    best, cents = None, []
    for v in range(nv):
        heavy = nv - size[v] if parent[v] >= 0 else 0
        for (w, _) in adj[v]:
            if parent[w] == v:
                heavy = max(heavy, size[w])
        if best is None or heavy < best:
            best, cents = heavy, [v]
        elif heavy == best:
            cents.append(v)
    return cents


def tree_canonical_form(T: MetricGraph):
    """Canonical encoding: equal for two trees iff they are isomorphic
    (edge-length-labeled, rooted at the combinatorial centroid(s))."""
    if not T.is_tree:
        raise ValueError("canonical form is defined for trees")
    adj = _tree_adjacency(T)

    def encode(v, par):
        subs = sorted((l, encode(w, v)) for (w, l) in adj[v] if w != par)
        return tuple(subs)

    return min(encode(c, -1) for c in _centroids(T))


def trees_isomorphic(T: MetricGraph, S: MetricGraph) -> bool:
    return tree_canonical_form(T) == tree_canonical_form(S)


# ---------------------------------------------------------------------------
# Generators.
# ---------------------------------------------------------------------------

def lobe_tree(matrix: Sequence[Sequence[int]]) -> MetricGraph:
    """Three-arm unit-edge tree: a center, three hubs, three junctions per
    hub, and matrix[i][j] leaf edges at junction (i, j)."""
    rows = [list(r) for r in matrix]
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise ValueError("matrix must be 3x3")
    for r in rows:
        for x in r:
            if int(x) <= 0:
                raise ValueError("branch counts must be positive")
    edges = []
    one = Fraction(1)
    center = 0
    nxt = 1
    for i in range(3):
        hub = nxt
        nxt += 1
        edges.append((center, hub, one))
        for j in range(3):
            junction = nxt
            nxt += 1
            edges.append((hub, junction, one))
            for _ in range(int(rows[i][j])):
                leaf = nxt
                nxt += 1
                edges.append((junction, leaf, one))
    return MetricGraph(nxt, edges)


def lobe_junction_vertices(matrix) -> list:
    """Vertex ids of the nine junctions of lobe_tree(matrix), row-major."""
    rows = [list(r) for r in matrix]
    out = []
    nxt = 1
    for i in range(3):
        nxt += 1  # hub
        for j in range(3):
            out.append(nxt)
            nxt += 1 + int(rows[i][j])
    return out


def smooth_degree_two(num_vertices: int, edges) -> Tuple[int, list]:
    """Merge edges across degree-2 vertices; returns compact (nv, edges)."""
    edges = [(int(u), int(v), Fraction(l)) for (u, v, l) in edges]
    changed = True
    while changed:
        changed = False
        deg = {}
        for (u, v, l) in edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        for w, d in deg.items():
            if d == 2:
                inc = [e for e in edges if w in (e[0], e[1])]
                if len(inc) == 1:  # self-loop at w: a circle component
                    continue
                (u1, v1, l1), (u2, v2, l2) = inc
                a = u1 if v1 == w else v1
                b = u2 if v2 == w else v2
                if a == w or b == w:
                    continue
                edges.remove(inc[0])
                edges.remove(inc[1])
                edges.append((a, b, l1 + l2))
                changed = True
                break
    used = sorted({u for (u, v, _) in edges} | {v for (u, v, _) in edges})
    remap = {v: i for i, v in enumerate(used)}
    return len(used), [(remap[u], remap[v], l) for (u, v, l) in edges]


def glue_tree(S: MetricGraph, leaf: int, T: MetricGraph, delta,
              attach: Optional[int] = None) -> MetricGraph:
    """Attach a delta-rescaled copy of T to S, identifying T's attach node
    (default: combinatorial centroid) with the chosen leaf of S."""
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("scale must be positive")
    if not S.is_tree or not T.is_tree:
        raise ValueError("both graphs must be trees")
    if S.degrees[leaf] != 1:
        raise ValueError("attachment point must be a leaf of S")
    if attach is None:
        attach = _centroid(T)
    offset = S.num_vertices

    def remap(v):
        if v == attach:
            return leaf
        return offset + v - (1 if v > attach else 0)

    edges = list(S.edges)
    for (u, v, l) in T.edges:
        edges.append((remap(u), remap(v), l * delta))
    nv = S.num_vertices + T.num_vertices - 1
    nv2, edges2 = smooth_degree_two(nv, edges)
    return MetricGraph(nv2, edges2)


def _centroid(T: MetricGraph) -> int:
    return min(_centroids(T))


def discretize_graph(G: MetricGraph, mesh) -> Tuple[FiniteMMSpace, tuple]:
    """Finite snapshot: vertices plus equally spaced interior edge points.

    Each sample carries the length of its Voronoi cell on the edge, so the
    uniform measure is preserved exactly.  Returns (space, points).
    """
    mesh = Fraction(mesh)
    if mesh <= 0:
        raise ValueError("mesh must be positive")
    counts = []
    for (_, _, l) in G.edges:
        steps = l / mesh
        if steps.denominator != 1:
            raise ValueError(f"mesh {mesh} does not divide edge length {l}")
        counts.append(int(steps))
    points = []
    weights = []
    L = G.total_length
    seen_vertices = {}
    for v in range(G.num_vertices):
        seen_vertices[v] = len(points)
        points.append(G.vertex_point(v))
        weights.append(G.degrees[v] * mesh / 2 / L)
    for idx, (u, v, l) in enumerate(G.edges):
        for k in range(1, counts[idx]):
            points.append(GraphPoint(idx, k * mesh))
            weights.append(mesh / L)
    n = len(points)
    dist = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = graph_distance(G, points[i], points[j])
            dist[i][j] = dist[j][i] = d
    space = FiniteMMSpace(dist, weights, validate_triangle=False)
    return space, tuple(points)


def random_tree(seed: int, max_edges: int = 12, length_den: int = 64) -> MetricGraph:
    """Seeded random metric tree with no degree-2 vertices and generic
    pairwise-distinct rational edge lengths."""
    rng = random.Random(seed)
    lengths_used = set()

    def draw_length():
        while True:
            l = Fraction(rng.randint(length_den, 4 * length_den), length_den)
            if l not in lengths_used:
                lengths_used.add(l)
                return l

    edges = [(0, 1, draw_length())]
    nv = 2
    while len(edges) < max_edges:
        deg = {}
        for (u, v, _) in edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        v = rng.randrange(nv)
        if deg.get(v, 0) == 1:
            if len(edges) + 2 > max_edges:
                break
            edges.append((v, nv, draw_length()))
            edges.append((v, nv + 1, draw_length()))
            nv += 2
        else:
            edges.append((v, nv, draw_length()))
            nv += 1
    return MetricGraph(nv, edges)


def append_leaf_edges(T: MetricGraph, lengths: Sequence) -> MetricGraph:
    """Append one leaf edge per node (the density perturbation generator)."""
    nodes = T.nodes()
    if len(lengths) != len(nodes):
        raise ValueError("one length per node required")
    edges = list(T.edges)
    nv = T.num_vertices
    for v, l in zip(nodes, lengths):
        edges.append((v, nv, Fraction(l)))
        nv += 1
    return MetricGraph(nv, edges)


# ---------------------------------------------------------------------------
# JSON.
# ---------------------------------------------------------------------------

def graph_to_json(G: MetricGraph) -> dict:
    doc = {"nodes": G.num_vertices,
           "edges": [{"u": u, "v": v, "len": format_rational(l)}
                     for (u, v, l) in G.edges]}
    if G.circle:
        doc["circle"] = True
    return doc


def graph_from_json(doc: dict) -> MetricGraph:
    edges = [(e["u"], e["v"], parse_rational(e["len"])) for e in doc["edges"]]
    return MetricGraph(doc["nodes"], edges, circle=bool(doc.get("circle", False)))


def dump_graph(G: MetricGraph, path):
    with open(path, "w") as fh:
        json.dump(graph_to_json(G), fh, sort_keys=True)
        fh.write("\n")


def load_graph(path) -> MetricGraph:
    with open(path) as fh:
        return graph_from_json(json.load(fh))
