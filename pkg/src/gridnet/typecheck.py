"""Desk-scale type diagnostics from edge labels.

Every quadrilateral cell of a labeled net is a conformal quadrilateral whose
modulus is fixed by its four side labels.  Cells become nodes of a resistor
network; the growth of the effective resistance from a central cell to the
ring of radius n separates recurrent (parabolic-looking) from transient
(hyperbolic-looking) behaviour.  The verdicts are indicative only.
"""

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix, diags
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg, spsolve

from .elliptic import quad_modulus
from .errors import DegenerateCell, InvalidParameter, PreconditionViolation
from .net import check_labeling
from .uniformize import HYPERBOLIC, INCONCLUSIVE, PARABOLIC, TypeVerdict

TWO_PI = 2.0 * math.pi
MIN_ARC = 1e-9

GROWTH_THRESHOLD = 0.05
DECAY_RATIO = 0.7
CG_MAXITER = 5000


def cell_modulus(arcs):
    """Extremal distance between sides 2 and 4 of a cell with side labels s1..s4.

    The division points sit at tan(sigma/2) on the extended real line, sigma
    the cumulative arc length, and the half-plane quadrilateral modulus is
    read off the cross-ratio.
    """
    arcs = [float(a) for a in arcs]
    if len(arcs) != 4:
        raise InvalidParameter(f"a cell needs four arcs, got {len(arcs)}", arcs=arcs)
    if min(arcs) < MIN_ARC:
        raise DegenerateCell(f"arc {min(arcs)!r} below {MIN_ARC}", arcs=arcs)
    total = math.fsum(arcs)
    if abs(total - TWO_PI) > 1e-12:
        raise InvalidParameter(f"arcs sum to {total!r}, not 2*pi", arcs=arcs)
    sigma = np.cumsum([0.0] + arcs[:3])
    points = [math.inf if math.isclose(s, math.pi, abs_tol=1e-15) else math.tan(s / 2) for s in sigma]
    return quad_modulus(points)


@dataclass
class ConductanceNetwork:
    """Undirected weighted graph with integer node positions.

    ``ring[i]`` is the max-norm of node i's position; the boundary at radius n
    is the set of nodes with ring n.
    """

    keys: list
    ring: np.ndarray
    edges: np.ndarray  # (m, 2) node indices
    conductance: np.ndarray  # (m,)
    source: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=int).reshape(-1, 2)
        self.conductance = np.asarray(self.conductance, dtype=float)
        self.ring = np.asarray(self.ring, dtype=int)
        if np.any(~np.isfinite(self.conductance)) or np.any(self.conductance <= 0):
            raise InvalidParameter("conductances must be finite and positive")

    @property
    def size(self):
        return len(self.keys)

    def index(self, key):
        return self.keys.index(key)

    def scaled(self, factor):
        return replace(self, conductance=self.conductance * factor)

    def with_conductance(self, i, value):
        c = self.conductance.copy()
        c[i] = value
        return replace(self, conductance=c)

    def laplacian(self):
        n = self.size
        a, b = self.edges[:, 0], self.edges[:, 1]
        c = self.conductance
        rows = np.concatenate([a, b, a, b])
        cols = np.concatenate([b, a, a, b])
        vals = np.concatenate([-c, -c, c, c])
        return coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def network_from_edges(n_nodes, edges, conductance, source=0, ring=None):
    """Hand-built network; without rings the last node is the boundary at radius 1."""
    if ring is None:
        ring = np.zeros(n_nodes, dtype=int)
        ring[-1] = 1
    return ConductanceNetwork(list(range(n_nodes)), ring, edges, conductance, source)


def _half_resistance(m, side):
    # sides 2 and 4 (indices 1, 3) are the ones whose extremal distance is m
    return 0.5 * m if side % 2 == 1 else 0.5 / m


def assemble_network(net, labels):
    """Cells become nodes; the link across a shared side joins the two half-cell resistors."""
    check = check_labeling(net, labels)
    if not check.ok:
        raise PreconditionViolation("labels fail the cell-sum check", **check.witness)
    cells = sorted((c for c in net.interior_cells() if len(c.boundary) == 4), key=lambda c: c.key)
    keys = [c.key for c in cells]
    index = {k: i for i, k in enumerate(keys)}
    moduli = {}
    sides = {}
    for c in cells:
        moduli[c.key] = cell_modulus([labels[e] for _, e in c.boundary])
        for i, (_, e) in enumerate(c.boundary):
            sides.setdefault(e, []).append((c.key, i))
    pairs, cond, shared = [], [], []
    for e in sorted(sides):
        occ = sides[e]
        if len(occ) != 2:
            continue
        (ka, ia), (kb, ib) = occ
        r = _half_resistance(moduli[ka], ia) + _half_resistance(moduli[kb], ib)
        pairs.append((index[ka], index[kb]))
        cond.append(1.0 / r)
        shared.append(e)
    ring = [int(round(max(abs(c.pos[0]), abs(c.pos[1])))) for c in cells]
    try:
        source = next(i for i, c in enumerate(cells) if tuple(c.pos) == (0.0, 0.0))
    except StopIteration:
        source = int(np.argmin(ring))
    meta = {"edge_keys": shared, "moduli": moduli}
    return ConductanceNetwork(keys, ring, pairs, cond, source, meta)


def lattice_network(n_max, conductance_fn):
    """Square lattice on max(|i|, |j|) <= n_max; conductance_fn(ring_a, ring_b) per link."""
    side = 2 * n_max + 1
    ii, jj = np.meshgrid(np.arange(-n_max, n_max + 1), np.arange(-n_max, n_max + 1), indexing="ij")
    ring = np.maximum(np.abs(ii), np.abs(jj)).ravel()
    idx = np.arange(side * side).reshape(side, side)
    horiz = np.c_[idx[:-1, :].ravel(), idx[1:, :].ravel()]
    vert = np.c_[idx[:, :-1].ravel(), idx[:, 1:].ravel()]
    edges = np.vstack([horiz, vert])
    cond = conductance_fn(ring[edges[:, 0]], ring[edges[:, 1]])
    keys = [f"{i},{j}" for i, j in zip(ii.ravel(), jj.ravel())]
    return ConductanceNetwork(keys, ring, edges, cond, int(idx[n_max, n_max]))


def spine_decay_network(n_max, growth=1.25):
    """Model network whose conductances grow geometrically with the ring index."""
    return lattice_network(n_max, lambda ra, rb: growth ** np.maximum(ra, rb).astype(float))


def row_decay_labels(net, ratio=0.7, start_row=0):
    """Labels with horizontal sides shrinking geometrically below ``start_row``.

    Horizontal edges in row j get a_j = (pi/2) ratio^depth and the vertical
    edges of the cells in row j take pi - (a_j + a_{j+1})/2, so every cell
    still sums to 2 pi.
    """
    def a(y):
        depth = max(0, start_row - y)
        return 0.5 * math.pi * ratio**depth

    labels = {}
    for key, e in net.edges.items():
        (x1, y1), (x2, y2) = _edge_cells(key)
        if y1 == y2:  # the edge separates two cells in the same row
            labels[key] = math.pi - 0.5 * (a(y1) + a(y1 + 1))
        else:
            labels[key] = a(max(y1, y2))
    return labels


_EDGE_KEY = re.compile(r"e:(-?\d+),(-?\d+)-(-?\d+),(-?\d+)$")


def _edge_cells(key):
    # net edge keys name the Speiser edge, i.e. the two cells sharing the side
    m = _EDGE_KEY.match(key)
    if m is None:
        raise InvalidParameter(f"cannot parse edge key {key!r}")
    x1, y1, x2, y2 = map(int, m.groups())
    return (x1, y1), (x2, y2)


def effective_resistance(network, n, method="cg", rtol=1e-12):
    """Resistance between the source and the ring of radius n (outer nodes dropped)."""
    keep = network.ring <= n
    boundary = network.ring == n
    if not np.any(boundary):
        raise InvalidParameter(f"no nodes at radius {n}")
    src = network.source
    if network.ring[src] >= n:
        raise InvalidParameter("the source lies on the boundary")
    a, b = network.edges[:, 0], network.edges[:, 1]
    inside = keep[a] & keep[b]
    sub = replace(network, edges=network.edges[inside], conductance=network.conductance[inside])
    L = sub.laplacian()

    adj = csr_matrix((np.ones(int(inside.sum())), (a[inside], b[inside])), shape=L.shape)
    _, comp = connected_components(adj, directed=False)
    if not np.any(boundary & keep & (comp == comp[src])):
        return math.inf

    free = np.flatnonzero(keep & ~boundary & (comp == comp[src]))
    free = free[free != src]
    rhs = -L[free][:, [src]].toarray().ravel()
    A = L[free][:, free]
    if free.size == 0:
        phi = np.zeros(0)
    elif method == "direct":
        phi = spsolve(A.tocsc(), rhs)
    else:
        # Jacobi preconditioning absorbs geometric conductance growth
        jacobi = diags(1.0 / A.diagonal())
        phi, info = cg(A, rhs, rtol=rtol, atol=0.0, maxiter=CG_MAXITER, M=jacobi)
        if info != 0:
            phi = spsolve(A.tocsc(), rhs)
    potential = np.zeros(network.size)
    potential[src] = 1.0
    potential[free] = phi
    current = float((L[[src]] @ potential)[0])
    return 1.0 / current


def resistance_sequence(network, radii, method="cg"):
    return [effective_resistance(network, n, method) for n in radii]


def type_estimate(radii, R, growth=GROWTH_THRESHOLD, decay=DECAY_RATIO):
    """Classify a doubling sequence R(n) by its increments R(2n) - R(n).

    Increments are taken relative to R at the first radius, so a global
    rescaling of conductances never changes the verdict.
    """
    radii = [int(r) for r in radii]
    R = [float(x) for x in R]
    if len(radii) < 4 or len(R) != len(radii):
        raise InvalidParameter("need at least four radii with one resistance each")
    if any(b != 2 * a for a, b in zip(radii, radii[1:])):
        raise InvalidParameter("radii must form a doubling sequence", radii=radii)
    if any(math.isinf(x) for x in R):
        return TypeVerdict(INCONCLUSIVE, R, {"reason": "infinite resistance"})
    d = np.diff(R)
    rel = d / R[0]
    ratios = [float(b / a) if a > 0 else 0.0 for a, b in zip(d, d[1:])]
    spread = float((rel.max() - rel.min()) / rel.mean()) if rel.mean() > 0 else math.inf
    diag = {
        "increments": d.tolist(),
        "relative_increments": rel.tolist(),
        "increment_ratios": ratios,
        "increment_spread": spread,
        "growth_threshold": growth,
        "decay_ratio": decay,
    }
    if np.all(rel >= growth) and all(r > decay for r in ratios):
        verdict = PARABOLIC
    elif rel[-1] < growth and (np.all(d == 0) or all(r <= decay for r in ratios if r != 0)):
        verdict = HYPERBOLIC
    else:
        verdict = INCONCLUSIVE
    return TypeVerdict(verdict, R, diag)


def estimate(network, radii, method="cg"):
    R = resistance_sequence(network, radii, method)
    out = type_estimate(radii, R)
    out.diagnostics["radii"] = list(radii)
    return out
