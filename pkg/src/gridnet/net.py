"""Nets as planar duals of labeled Speiser graphs, and cos-spine surgery.

A net is stored combinatorially: nodes (critical points, staircase ends, and
"open" markers standing for everything beyond the window), edges joining
two nodes, and cells.  A cell's boundary is a cyclic tuple of
``(node, edge)`` pairs, counterclockwise, where ``edge`` leaves ``node``
towards the next pair's node.  ``None`` entries mark the parts of a cell
cut off by the window.
"""

import json
import math
from dataclasses import dataclass, field, replace

from .errors import IncompleteLabeling, InvalidAnchor
from .speiser import build_grid, edge_name, label_faces, mark

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class NetNode:
    key: str
    kind: str  # "vertex" | "end" | "open"
    pos: tuple


@dataclass(frozen=True)
class NetEdge:
    key: str
    a: str
    b: str
    mid: tuple  # where the edge crosses the Speiser graph

    def other(self, node):
        return self.b if node == self.a else self.a


@dataclass(frozen=True)
class Cell:
    key: str
    hemisphere: str  # "upper" | "lower"
    boundary: tuple
    pos: tuple

    @property
    def complete(self):
        return all(n is not None and e is not None for n, e in self.boundary)


@dataclass(frozen=True)
class StaircaseEnd:
    key: str
    over: str  # "0" | "inf"
    lines: tuple  # edge keys in boundary order
    depth: int


@dataclass(frozen=True)
class SpinePattern:
    end: str
    axis: tuple  # edge keys of l_0, starting with the anchor line
    lines: tuple  # (edge, edge, node) for l_1, l_2, ...
    crossings: tuple  # crossings[j][k] between l_j and l_k
    continues: str


@dataclass(frozen=True)
class Net:
    nodes: dict
    edges: dict
    cells: dict
    ends: tuple = ()
    spines: tuple = ()
    meta: dict = field(default_factory=dict)

    def degree(self, node):
        return sum((e.a == node) + (e.b == node) for e in self.edges.values())

    def degrees(self):
        deg = dict.fromkeys(self.nodes, 0)
        for e in self.edges.values():
            deg[e.a] += 1
            deg[e.b] += 1
        return deg

    def interior_cells(self):
        """Cells entirely inside the window, i.e. not touching an open marker."""
        return [
            c for c in self.cells.values()
            if c.complete and all(self.nodes[n].kind != "open" for n, _ in c.boundary)
        ]

    def end(self, key):
        for e in self.ends:
            if e.key == key:
                return e
        raise KeyError(key)

    # -- serialization ---------------------------------------------------

    def to_dict(self, labels=None):
        data = {
            "nodes": [{"key": n.key, "kind": n.kind, "pos": list(n.pos)} for n in _sorted(self.nodes)],
            "edges": [{"key": e.key, "a": e.a, "b": e.b, "mid": list(e.mid)} for e in _sorted(self.edges)],
            "cells": [
                {"key": c.key, "hemisphere": c.hemisphere, "pos": list(c.pos),
                 "boundary": [[n, e] for n, e in c.boundary]}
                for c in _sorted(self.cells)
            ],
            "ends": [
                {"key": s.key, "over": s.over, "lines": list(s.lines), "depth": s.depth}
                for s in self.ends
            ],
            "spines": [
                {"end": p.end, "axis": list(p.axis), "lines": [list(x) for x in p.lines],
                 "continues": p.continues}
                for p in self.spines
            ],
            "meta": self.meta,
        }
        if labels is not None:
            data["labels"] = {k: labels[k] for k in sorted(labels)}
        return data

    def to_json(self, labels=None):
        return json.dumps(self.to_dict(labels), indent=1)

    @classmethod
    def from_dict(cls, data):
        nodes = {d["key"]: NetNode(d["key"], d["kind"], tuple(d["pos"])) for d in data["nodes"]}
        edges = {d["key"]: NetEdge(d["key"], d["a"], d["b"], tuple(d["mid"])) for d in data["edges"]}
        cells = {
            d["key"]: Cell(d["key"], d["hemisphere"], tuple((n, e) for n, e in d["boundary"]), tuple(d["pos"]))
            for d in data["cells"]
        }
        ends = tuple(StaircaseEnd(d["key"], d["over"], tuple(d["lines"]), d["depth"]) for d in data["ends"])
        spines = tuple(
            SpinePattern(d["end"], tuple(d["axis"]), tuple(tuple(x) for x in d["lines"]),
                         _crossing_matrix_from(edges, tuple(d["axis"]), d["lines"]), d["continues"])
            for d in data.get("spines", [])
        )
        return cls(nodes, edges, cells, ends, spines, data.get("meta", {}))


def _sorted(d):
    return [d[k] for k in sorted(d)]


# -- duality ---------------------------------------------------------------


def _face_pos(face):
    pts = [d[0] for d in face.darts] + [face.darts[-1][1]]
    return (sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts))


def dual_net(g, labeling):
    """Net of the surface encoded by the labeled Speiser graph ``g``.

    Algebraic faces with at least four edges become critical points, bigons
    are smoothed into plain edge points, logarithmic faces become staircase
    ends, and faces cut by the window become open markers.
    """
    fod = g.face_of_dart
    nodes = {}
    for f in g.faces:
        if f.kind == "algebraic" and f.n_edges == 2:
            continue
        kind = {"algebraic": "vertex", "logarithmic": "end", "open": "open"}[f.kind]
        nodes[f.key] = NetNode(f.key, kind, _face_pos(f))

    edges = {}
    for u, v, k in g.edges:
        key = "e:" + edge_name((u, v, 0))[:-2]
        a = fod[(u, v, k - 1)].key
        b = fod[(v, u, 0)].key
        mid = ((u[0] + v[0]) / 2, (u[1] + v[1]) / 2)
        edges[key] = NetEdge(key, a, b, mid)

    cells = {}
    for v in g.vertices:
        rot = g.rotations[v]
        runs = []
        for d in rot:
            if runs and runs[-1][-1][1] == d[1]:
                runs[-1].append(d)
            else:
                runs.append([d])
        boundary = []
        for j, run in enumerate(runs):
            prev_last = runs[j - 1][-1]
            node = fod[prev_last].key if g.inside(prev_last[1]) else None
            first = run[0]
            if g.inside(first[1]):
                a, b = sorted((first[0], first[1]))
                ekey = "e:" + edge_name((a, b, 0))[:-2]
            else:
                ekey = None
            boundary.append((node, ekey))
        hemi = "upper" if mark(v) == "x" else "lower"
        key = f"c:{v[0]},{v[1]}"
        cells[key] = Cell(key, hemi, tuple(boundary), (float(v[0]), float(v[1])))

    ends = []
    for f in g.faces:
        if f.kind != "logarithmic":
            continue
        lines = []
        for d in f.darts:
            a, b = sorted((d[0], d[1]))
            ekey = "e:" + edge_name((a, b, 0))[:-2]
            if not lines or lines[-1] != ekey:
                lines.append(ekey)
        ends.append(StaircaseEnd(f.key, labeling[f.key], tuple(lines), (len(lines) - 1) // 2))
    ends.sort(key=lambda s: nodes[s.key].pos)
    meta = {"window": g.window, "kind": g.kind, "speiser_edges": sum(k for _, _, k in g.edges)}
    return Net(nodes, edges, cells, tuple(ends), (), meta)


def square_grid_net(window):
    """Net dual to the periodic square-grid Speiser graph."""
    g = build_grid(window)
    return dual_net(g, label_faces(g))


def find_staircases(net):
    """All staircase ends still present in the net, ordered left to right."""
    return [s for s in net.ends if s.key in net.nodes and net.nodes[s.key].kind == "end"]


# -- cos-spine surgery -----------------------------------------------------


def default_anchor(end):
    """Middle line of the end's boundary."""
    return end.lines[len(end.lines) // 2]


def replace_with_spine(net, end, anchor=None):
    """Replace the staircase ``end`` by a cos-spine whose axis continues ``anchor``.

    Lines on either side of the anchor are paired off by distance from it and
    joined at new degree-4 vertices along the axis; the axis leaves the window
    through a ``continues`` marker.  Nothing outside the end changes.
    """
    if isinstance(end, str):
        end = net.end(end)
    if end.key not in net.nodes or net.nodes[end.key].kind != "end":
        return net
    anchor = default_anchor(end) if anchor is None else anchor
    if anchor not in end.lines:
        raise InvalidAnchor(f"{anchor!r} is not a line of end {end.key}", end=end.key, anchor=anchor)
    if net.edges[anchor].other(end.key) not in net.nodes or \
            net.nodes[net.edges[anchor].other(end.key)].kind != "vertex":
        raise InvalidAnchor(
            "anchor line must join the end to a critical point", end=end.key, anchor=anchor
        )

    lines = end.lines
    a = lines.index(anchor)
    depth = min(a, len(lines) - 1 - a)
    E = end.key
    vkey = [None] + [f"{E}:v{i}" for i in range(1, depth + 1)]
    cont = f"{E}:continues"

    def endpoint(j):
        d = abs(j - a)
        if j == a:
            d = 1
        return vkey[d] if d <= depth else cont

    nodes = {k: n for k, n in net.nodes.items() if k != E}
    edges = dict(net.edges)
    mids = net.edges
    for i in range(1, depth + 1):
        p, q = mids[lines[a + i]].mid, mids[lines[a - i]].mid
        nodes[vkey[i]] = NetNode(vkey[i], "vertex", ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2))
    last = nodes[vkey[depth]].pos if depth else net.nodes[E].pos
    nodes[cont] = NetNode(cont, "open", (last[0], last[1] - 1.0))

    for j, key in enumerate(lines):
        e = edges[key]
        tgt = endpoint(j)
        edges[key] = NetEdge(key, tgt if e.a == E else e.a, tgt if e.b == E else e.b, e.mid)

    axis_key = [None]
    for i in range(1, depth + 1):
        nxt = vkey[i + 1] if i < depth else cont
        key = f"{E}:axis{i}"
        p, q = nodes[vkey[i]].pos, nodes[nxt].pos
        edges[key] = NetEdge(key, vkey[i], nxt, ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2))
        axis_key.append(key)

    def axis_between(x, y):
        # the axis edge joining consecutive spine nodes x and y
        for i in range(1, depth + 1):
            ends_ = {vkey[i], vkey[i + 1] if i < depth else cont}
            if ends_ == {x, y}:
                return axis_key[i]
        raise AssertionError((x, y))  # pragma: no cover

    index = {key: j for j, key in enumerate(lines)}
    cells = {}
    for ck, cell in net.cells.items():
        if not any(n == E for n, _ in cell.boundary):
            cells[ck] = cell
            continue
        out = []
        b = cell.boundary
        for i, (n, e_out) in enumerate(b):
            if n != E:
                out.append((n, e_out))
                continue
            e_in = b[i - 1][1]
            x = endpoint(index[e_in]) if e_in in index else cont
            y = endpoint(index[e_out]) if e_out in index else cont
            if x == y:
                out.append((x, e_out))
            else:
                out.append((x, axis_between(x, y)))
                out.append((y, e_out))
        cells[ck] = replace(cell, boundary=tuple(out))

    spine_axis = (anchor,) + tuple(axis_key[1:])
    spine_lines = tuple((lines[a + i], lines[a - i], vkey[i]) for i in range(1, depth + 1))
    pattern = SpinePattern(E, spine_axis, spine_lines,
                           _crossing_matrix_from(edges, spine_axis, spine_lines), cont)
    return Net(nodes, edges, cells, net.ends, net.spines + (pattern,), dict(net.meta))


def _crossing_matrix_from(edges, axis, lines):
    """Count shared interior spine nodes between l_0 (the axis) and l_1.. l_k."""
    def nodes_of(keys):
        out = []
        for k in keys:
            out += [edges[k].a, edges[k].b]
        return out

    paths = [nodes_of(axis)] + [nodes_of(x[:2]) for x in lines]
    spine_nodes = {x[2] for x in lines}
    n = len(paths)
    mat = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j:
                si = {p for p in paths[i] if p in spine_nodes}
                sj = {p for p in paths[j] if p in spine_nodes}
                mat[i][j] = len(si & sj)
    return tuple(tuple(r) for r in mat)


def replace_all_spines(net):
    for end in find_staircases(net):
        net = replace_with_spine(net, end)
    return net


def spine_is_valid(pattern):
    """l_0 crosses each l_k once; the l_k (k >= 1) are pairwise disjoint."""
    m = pattern.crossings
    n = len(m)
    if any(m[0][k] != 1 for k in range(1, n)):
        return False
    return all(m[j][k] == 0 for j in range(1, n) for k in range(1, n) if j != k)


# -- verification ------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: dict

    def __bool__(self):
        return self.ok


def verify_square_grid(net):
    """Every interior vertex has degree 4 and every interior cell four sides."""
    for s in find_staircases(net):
        return Verdict(False, {"reason": "staircase", "end": s.key})
    deg = net.degrees()
    for key in sorted(net.nodes):
        if net.nodes[key].kind == "vertex" and deg[key] != 4:
            return Verdict(False, {"reason": "vertex-degree", "vertex": key, "degree": deg[key]})
    for cell in sorted(net.interior_cells(), key=lambda c: c.key):
        if len(cell.boundary) != 4:
            return Verdict(False, {"reason": "cell-sides", "cell": cell.key, "sides": len(cell.boundary)})
    return Verdict(True, {})


def check_net(net):
    """Structural invariants: vertex degrees even and >= 4, proper 2-colouring."""
    problems = []
    deg = net.degrees()
    for key, node in net.nodes.items():
        if node.kind == "vertex" and (deg[key] < 4 or deg[key] % 2):
            problems.append(("vertex-degree", key, deg[key]))
    sides = {}
    for c in net.cells.values():
        for _, e in c.boundary:
            if e is not None:
                sides.setdefault(e, []).append(c.hemisphere)
    for e, hs in sides.items():
        if len(hs) == 2 and hs[0] == hs[1]:
            problems.append(("coloring", e, hs[0]))
        if len(hs) > 2:
            problems.append(("edge-cells", e, len(hs)))
    return problems


# -- labelings ---------------------------------------------------------------


@dataclass(frozen=True)
class LabelCheck:
    ok: bool
    symmetric: bool
    witness: dict

    def __bool__(self):
        return self.ok


def check_labeling(net, labels, tol=1e-12):
    """Positive labels with every interior cell summing to 2*pi."""
    cells = net.interior_cells()
    for c in cells:
        for _, e in c.boundary:
            if e not in labels:
                raise IncompleteLabeling(f"edge {e} of cell {c.key} is unlabeled", edge=e, cell=c.key)
    for c in sorted(cells, key=lambda c: c.key):
        vals = [labels[e] for _, e in c.boundary]
        if any(not x > 0 for x in vals):
            return LabelCheck(False, False, {"cell": c.key, "reason": "non-positive"})
        total = math.fsum(vals)
        if abs(total - TWO_PI) > tol:
            return LabelCheck(False, False, {"cell": c.key, "reason": "sum", "sum": total})
    return LabelCheck(True, labels_symmetric(net, labels, cells), {})


def labels_symmetric(net, labels, cells=None):
    """Whether adjacent quadrilateral cells mirror each other across their common edge."""
    cells = net.interior_cells() if cells is None else cells
    where = {}
    for c in cells:
        if len(c.boundary) != 4:
            return False
        for i, (_, e) in enumerate(c.boundary):
            where.setdefault(e, []).append((c, i))
    for e, occ in where.items():
        if len(occ) != 2:
            continue
        (A, i), (B, j) = occ

        def lab(cell, k):
            return labels[cell.boundary[k % 4][1]]

        if not (math.isclose(lab(A, i - 1), lab(B, j + 1), rel_tol=1e-12)
                and math.isclose(lab(A, i + 1), lab(B, j - 1), rel_tol=1e-12)
                and math.isclose(lab(A, i + 2), lab(B, j + 2), rel_tol=1e-12)):
            return False
    return True


def uniform_labels(net, value=math.pi / 2):
    return {k: value for k in net.edges}


# -- rendering ---------------------------------------------------------------


def to_svg(net, scale=30.0, show_cells=False):
    """Plain SVG: edges as polylines through their crossing points."""
    pts = [n.pos for n in net.nodes.values()] + [e.mid for e in net.edges.values()]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1, y0, y1 = min(xs) - 1, max(xs) + 1, min(ys) - 1, max(ys) + 1

    def tr(p):
        return (p[0] - x0) * scale, (y1 - p[1]) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{(x1 - x0) * scale:.0f}" '
        f'height="{(y1 - y0) * scale:.0f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    if show_cells:
        for c in _sorted(net.cells):
            x, y = tr(c.pos)
            fill = "#dde7f7" if c.hemisphere == "upper" else "#f7e6dd"
            out.append(f'<rect x="{x - scale / 2:.1f}" y="{y - scale / 2:.1f}" '
                       f'width="{scale:.1f}" height="{scale:.1f}" fill="{fill}"/>')
    spine_edges = {k for p in net.spines for k in p.axis}
    for e in _sorted(net.edges):
        pa, pm, pb = tr(net.nodes[e.a].pos), tr(e.mid), tr(net.nodes[e.b].pos)
        colour = "#c0392b" if e.key in spine_edges else "#222"
        out.append(
            f'<polyline points="{pa[0]:.1f},{pa[1]:.1f} {pm[0]:.1f},{pm[1]:.1f} {pb[0]:.1f},{pb[1]:.1f}" '
            f'fill="none" stroke="{colour}" stroke-width="1.2"/>'
        )
    for n in _sorted(net.nodes):
        x, y = tr(n.pos)
        if n.kind == "vertex":
            out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2.5" fill="black"/>')
        elif n.kind == "end":
            out.append(f'<rect x="{x - 4:.1f}" y="{y - 4:.1f}" width="8" height="8" fill="#2e86c1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
