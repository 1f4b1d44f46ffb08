"""Windowed Speiser graphs on the integer lattice.

A graph is described by edge rules on the infinite lattice and stored on the
window ``max(|m|, |n|) <= N``.  Rotations are always taken from the infinite
graph, so edge-ends leaving the window ("stubs") keep their slot in the
cyclic order; this is what makes face tracing and labeling at the window
boundary agree with the infinite picture.

Darts are ``(u, v, copy)`` with ``copy`` counting parallel edges from the
right (east) side of a vertical bundle.
"""

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

from .errors import InvalidParameter, LabelingConflict

LABELS = ("0", "1/e", "e", "inf")
LABEL_VALUES = {"0": 0.0, "1/e": 0.36787944117144233, "e": 2.718281828459045, "inf": float("inf")}

# counterclockwise, starting from "up"
_DIRECTIONS = ((0, 1), (-1, 0), (0, -1), (1, 0))


def mark(v):
    """'x' if |m+n| is odd, 'o' if even."""
    return "x" if abs(v[0] + v[1]) % 2 else "o"


def gamma_has_horizontal(m, n):
    """Edge [(m,n),(m+1,n)] of the base lattice graph."""
    return n >= 0 or m < 0


def grid_has_horizontal(m, n):
    return True


def _base_degree_without(v, skip, has_horizontal):
    m, n = v
    deg = 2  # both vertical neighbours always exist
    deg += has_horizontal(m, n) + has_horizontal(m - 1, n)
    return deg - 1 if skip else deg


def gamma_multiplicity(m, n):
    """Multiplicity of the vertical edge [(m,n),(m,n+1)] in the degree-4 completion.

    The duplicated edges are [(m,-2j),(m,-2j+1)], m >= 0, j >= 1.  Their
    multiplicity is whatever brings both endpoints to degree 4, which must
    agree at the two ends.
    """
    if not (m >= 0 and n <= -2 and n % 2 == 0):
        return 1
    lower = 4 - _base_degree_without((m, n), True, gamma_has_horizontal)
    upper = 4 - _base_degree_without((m, n + 1), True, gamma_has_horizontal)
    if lower != upper:  # pragma: no cover - guards the derivation above
        raise LabelingConflict("degree completion is inconsistent", edge=[m, n])
    return lower


def grid_multiplicity(m, n):
    return 1


KINDS = {
    "gamma": (gamma_has_horizontal, gamma_multiplicity),
    "grid": (grid_has_horizontal, grid_multiplicity),
}


def dart_sort_key(d):
    (m1, n1), (m2, n2), c = d
    return (-max(n1, n2), -min(n1, n2), min(m1, m2), max(m1, m2), m1, n1, c)


def dart_name(d):
    (m1, n1), (m2, n2), c = d
    return f"{m1},{n1}>{m2},{n2}#{c}"


def edge_key(d):
    u, v, c = d
    a, b = sorted((u, v))
    return (a, b, c)


def edge_name(e):
    (m1, n1), (m2, n2), c = e
    return f"{m1},{n1}-{m2},{n2}#{c}"


@dataclass(frozen=True)
class Face:
    key: str
    darts: tuple
    closed: bool
    kind: str  # "algebraic" | "logarithmic" | "open"

    @property
    def n_edges(self):
        return len(self.darts)


@dataclass(eq=False)
class SpeiserGraph:
    window: int
    kind: str = "gamma"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameter(f"unknown graph kind {self.kind!r}")
        self.has_horizontal, self.multiplicity = KINDS[self.kind]

    # -- lattice -----------------------------------------------------------

    def inside(self, v):
        return max(abs(v[0]), abs(v[1])) <= self.window

    def interior(self, v):
        return max(abs(v[0]), abs(v[1])) < self.window

    @cached_property
    def vertices(self):
        N = self.window
        return [(m, n) for m in range(-N, N + 1) for n in range(-N, N + 1)]

    def rotation(self, v):
        """Counterclockwise darts at ``v`` in the infinite graph, starting from up."""
        m, n = v
        out = []
        for dm, dn in _DIRECTIONS:
            w = (m + dm, n + dn)
            if dn == 1:
                k = self.multiplicity(m, n)
                out.extend((v, w, c) for c in range(k))
            elif dn == -1:
                k = self.multiplicity(m, n - 1)
                out.extend((v, w, c) for c in reversed(range(k)))
            elif dm == 1 and self.has_horizontal(m, n):
                out.append((v, w, 0))
            elif dm == -1 and self.has_horizontal(m - 1, n):
                out.append((v, w, 0))
        return out

    @cached_property
    def rotations(self):
        return {v: self.rotation(v) for v in self.vertices}

    @cached_property
    def _rotation_index(self):
        return {d: i for rot in self.rotations.values() for i, d in enumerate(rot)}

    @cached_property
    def darts(self):
        return [d for v in self.vertices for d in self.rotations[v] if self.inside(d[1])]

    @cached_property
    def edges(self):
        """Windowed edges as ``(u, v, multiplicity)`` sorted by (m, n)."""
        mult = {}
        for u, v, c in self.darts:
            if u < v:
                mult[(u, v)] = mult.get((u, v), 0) + 1
        return sorted((u, v, k) for (u, v), k in mult.items())

    def degree(self, v):
        return len(self.rotations[v])

    # -- faces -------------------------------------------------------------

    def next_dart(self, d):
        """Next dart along the face on the left of ``d``; None if it leaves the window."""
        u, v, c = d
        rot = self.rotations[v]
        nd = rot[self._rotation_index[(v, u, c)] - 1]
        return nd if self.inside(nd[1]) else None

    def prev_dart(self, d):
        u, v, c = d
        rot = self.rotations[u]
        pd = rot[(self._rotation_index[d] + 1) % len(rot)]
        pd = (pd[1], pd[0], pd[2])
        return pd if self.inside(pd[0]) else None

    @cached_property
    def faces(self):
        seen = set()
        faces = []
        for d in self.darts:
            if d in seen:
                continue
            start = d
            while True:
                p = self.prev_dart(start)
                if p is None or p == d:
                    break
                start = p
            walk = [start]
            seen.add(start)
            while True:
                nd = self.next_dart(walk[-1])
                if nd is None or nd == start:
                    break
                walk.append(nd)
                seen.add(nd)
            closed = nd is not None
            faces.append(self._make_face(tuple(walk), closed))
        faces.sort(key=lambda f: f.key)
        return faces

    def _make_face(self, walk, closed):
        key = "F[" + dart_name(min(walk, key=dart_sort_key)) + "]"
        if closed:
            kind = "algebraic"
        elif self._is_logarithmic(walk):
            kind = "logarithmic"
        else:
            kind = "open"
        return Face(key, walk, closed, kind)

    def _is_logarithmic(self, walk):
        # enters and leaves through the bottom of the window, vertical stubs at
        # both ends, and climbs to row 0: a face with infinitely many edges
        first, last = walk[0], walk[-1]
        N = self.window
        if first[0][1] != -N or last[1][1] != -N:
            return False
        if first[1][1] != -N + 1 or last[0][1] != -N + 1:
            return False
        return any(u[1] >= 0 and v[1] >= 0 for u, v, _ in walk)

    @cached_property
    def face_of_dart(self):
        return {d: f for f in self.faces for d in f.darts}

    @cached_property
    def face_by_key(self):
        return {f.key: f for f in self.faces}

    def corner_faces(self, v):
        """Faces at the corners of ``v`` in rotation order (None past a stub)."""
        out = []
        for d in self.rotations[v]:
            out.append(self.face_of_dart.get(d) if self.inside(d[1]) else None)
        return out

    # -- serialization -----------------------------------------------------

    def to_dict(self, labeling=None):
        data = {
            "window": self.window,
            "kind": self.kind,
            "vertices": [{"m": m, "n": n, "mark": mark((m, n))} for m, n in self.vertices],
            "edges": [{"a": list(u), "b": list(v), "mult": k} for u, v, k in self.edges],
        }
        if labeling is not None:
            data["labels"] = dict(sorted(labeling.labels.items()))
        return data

    def to_json(self, labeling=None):
        return json.dumps(self.to_dict(labeling), indent=1, sort_keys=False)

    @classmethod
    def from_dict(cls, data):
        g = cls(int(data["window"]), data.get("kind", "gamma"))
        stored = sorted((tuple(e["a"]), tuple(e["b"]), int(e["mult"])) for e in data["edges"])
        if stored != g.edges:
            raise InvalidParameter("edge list does not match the graph kind", kind=g.kind)
        return g

    def to_dot(self, labeling=None):
        lines = ["graph speiser {", "  node [shape=circle, width=0.15, label=\"\"];"]
        for m, n in self.vertices:
            shape = "point" if mark((m, n)) == "o" else "X"
            lines.append(f'  "{m},{n}" [shape={shape}, pos="{m},{n}!"];')
        for u, v, k in self.edges:
            for _ in range(k):
                lines.append(f'  "{u[0]},{u[1]}" -- "{v[0]},{v[1]}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_gamma(window):
    """The degree-4 Speiser graph on the window ``max(|m|,|n|) <= window``."""
    if int(window) != window or window < 2:
        raise InvalidParameter(f"window must be an integer >= 2, got {window}")
    return SpeiserGraph(int(window), "gamma")


def build_grid(window):
    """Periodic square-grid Speiser graph (all faces squares)."""
    if int(window) != window or window < 2:
        raise InvalidParameter(f"window must be an integer >= 2, got {window}")
    return SpeiserGraph(int(window), "grid")


def edge_multiplicity(g, u, v):
    """Multiplicity of the edge {u, v} in the infinite graph (0 if absent)."""
    return sum(1 for d in g.rotation(u) if d[1] == v)


# -- checks ---------------------------------------------------------------


def check_graph(g):
    """Return a list of invariant violations (empty if the graph is valid)."""
    problems = []
    for u, v, _ in g.edges:
        if mark(u) == mark(v):
            problems.append(("not-bipartite", u, v))
    for v in g.vertices:
        if g.interior(v) and g.degree(v) != 4:
            problems.append(("degree", v, g.degree(v)))
    counts = {}
    for f in g.faces:
        for d in f.darts:
            counts[d] = counts.get(d, 0) + 1
    for d in g.darts:
        if counts.get(d) != 1:
            problems.append(("dart-faces", d, counts.get(d, 0)))
    return problems


def euler_characteristic(g):
    """V - E + F over the windowed complex, F counting closed faces only."""
    V = len(g.vertices)
    E = sum(k for _, _, k in g.edges)
    F = sum(1 for f in g.faces if f.closed)
    return V - E + F


# -- face classification and labeling --------------------------------------


def classify_faces(g):
    """Map face key -> (kind, number of edges).  Logarithmic faces are open walks."""
    return {f.key: (f.kind, f.n_edges) for f in g.faces}


@dataclass(frozen=True)
class FaceLabeling:
    labels: dict  # face key -> label in LABELS

    def __getitem__(self, key):
        return self.labels[key]

    def at_vertex(self, g, v):
        return [None if f is None else self.labels.get(f.key) for f in g.corner_faces(v)]


def _vertex_sign(v):
    return 1 if mark(v) == "x" else -1


def anchor_face(g):
    """Face in the first quadrant at (0, 0): left of the dart (0,0) -> (1,0)."""
    return g.face_of_dart[((0, 0), (1, 0), 0)]


def _propagate(g, seed_vertex, seed_offset):
    """Labels forced by giving corner 0 of ``seed_vertex`` the index ``seed_offset``."""
    labels = {}
    base = {seed_vertex: seed_offset}
    queue = deque([seed_vertex])
    while queue:
        v = queue.popleft()
        s = _vertex_sign(v)
        b = base[v]
        for i, f in enumerate(g.corner_faces(v)):
            if f is None:
                continue
            want = (b + s * i) % 4
            have = labels.get(f.key)
            if have is None:
                labels[f.key] = want
            elif have != want:
                raise LabelingConflict(f"vertex {v} disagrees on face {f.key}", vertex=list(v), face=f.key)
            for d in f.darts:
                w = d[0]
                if w in base:
                    continue
                sw = _vertex_sign(w)
                corners = g.corner_faces(w)
                i_w = corners.index(f)
                base[w] = (want - sw * i_w) % 4
                queue.append(w)
    return labels


def label_faces(g, start=None):
    """The unique 4-labeling with the anchor face labeled ``e``.

    ``start`` is the vertex propagation begins from; every consistent seed
    is tried and the one matching the anchor is kept, so the result does not
    depend on the starting vertex.
    """
    start = (0, 0) if start is None else tuple(start)
    if not g.inside(start):
        raise InvalidParameter(f"start vertex {start} outside window")
    anchor = anchor_face(g).key
    found = []
    for offset in range(4):
        raw = _propagate(g, start, offset)
        if LABELS[raw[anchor]] == "e":
            found.append(raw)
    if len(found) != 1:  # pragma: no cover - propagation is a bijection on offsets
        raise LabelingConflict("anchor does not determine a unique labeling", vertex=list(start))
    raw = found[0]
    missing = [f.key for f in g.faces if f.key not in raw]
    if missing:
        raise LabelingConflict("labeling does not reach every face", face=missing[0])
    return FaceLabeling({k: LABELS[i] for k, i in sorted(raw.items())})


def check_labeling_cyclic(g, labeling):
    """Violations of the counterclockwise cyclic-order rule at interior vertices."""
    bad = []
    for v in g.vertices:
        if not g.interior(v):
            continue
        idx = [LABELS.index(x) for x in labeling.at_vertex(g, v)]
        s = _vertex_sign(v)
        if any((idx[i + 1] - idx[i]) % 4 != s % 4 for i in range(len(idx) - 1)):
            bad.append(v)
    return bad


# -- A/B decomposition -----------------------------------------------------


def split_AB(g):
    """Vertex -> 'A', 'B', or 'Q' (quartersphere column (0, n), n <= 0)."""
    out = {}
    for m, n in g.vertices:
        if m > 0 and n <= 0:
            out[(m, n)] = "B"
        elif m == 0 and n <= 0:
            out[(m, n)] = "Q"
        else:
            out[(m, n)] = "A"
    return out


def region_connected(g, part, members):
    """Whether the vertices tagged in ``members`` induce a connected subgraph."""
    nodes = {v for v, t in part.items() if t in members}
    if not nodes:
        return True
    adj = {v: set() for v in nodes}
    for u, v, _ in g.edges:
        if u in nodes and v in nodes:
            adj[u].add(v)
            adj[v].add(u)
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == nodes
