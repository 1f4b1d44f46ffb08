"""Explicit quasiregular maps and their measured dilatation.

Maps are vectorised callables on complex arrays.  Where the Wirtinger
derivatives are known in closed form they are used directly; otherwise
central differences with Richardson-style agreement checks.
"""

import cmath
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import cKDTree

from .errors import ConstantTooSmall, OrientationFailure, PreconditionViolation

FD_STEP = 1e-5


@dataclass
class PlanarMap:
    fn: object
    domain: str = "plane"
    wirtinger: object = None  # w -> (f_w, f_wbar)
    h: float = FD_STEP

    def __call__(self, w):
        return self.fn(np.asarray(w, dtype=complex))

    def derivatives(self, w, mode="auto"):
        """(f_w, f_wbar) at ``w``; ``mode`` is 'closed', 'fd' or 'auto'."""
        w = np.asarray(w, dtype=complex)
        if mode == "closed" or (mode == "auto" and self.wirtinger is not None):
            return self.wirtinger(w)
        return fd_wirtinger(self.fn, w, self.h)


def fd_wirtinger(fn, w, h=FD_STEP):
    fx = (fn(w + h) - fn(w - h)) / (2 * h)
    fy = (fn(w + 1j * h) - fn(w - 1j * h)) / (2 * h)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


# -- grids and dilatation ------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Cell-centred nx-by-ny samples of [x0, x1] x [y0, y1] (open rectangle)."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int = 400
    ny: int = 100

    def points(self):
        xs = self.x0 + (np.arange(self.nx) + 0.5) * (self.x1 - self.x0) / self.nx
        ys = self.y0 + (np.arange(self.ny) + 0.5) * (self.y1 - self.y0) / self.ny
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        return (X + 1j * Y).ravel()


@dataclass
class DilatationReport:
    grid: Grid
    w: np.ndarray
    K: np.ndarray
    mu: np.ndarray
    bound: float = None

    @property
    def sup_K(self):
        return float(self.K.max())

    @property
    def argmax(self):
        return complex(self.w[int(np.argmax(self.K))])

    @property
    def sup_mu(self):
        return float(self.mu.max())

    def summary(self):
        a = self.argmax
        out = {"supK": self.sup_K, "argmax": [a.real, a.imag], "sup_mu": self.sup_mu,
               "samples": int(self.K.size)}
        if self.bound is not None:
            out["bound"] = self.bound
            out["pass"] = bool(self.sup_K <= self.bound)
        return out

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["w_re", "w_im", "K", "mu"])
        for w, k, m in zip(self.w, self.K, self.mu):
            wr.writerow([f"{w.real:.12g}", f"{w.imag:.12g}", f"{k:.15g}", f"{m:.15g}"])
        return buf.getvalue()


def dilatation_from_wirtinger(fz, fzb):
    """K = ||Df||^2 / J and |mu|, from the Wirtinger derivatives."""
    a, b = np.abs(fz), np.abs(fzb)
    J = a * a - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (a + b) ** 2 / J
        mu = np.where(a > 0, b / a, np.inf)
    return K, mu, J


def dilatation(fmap, grid, mode="auto", bound=None):
    w = grid.points()
    fz, fzb = fmap.derivatives(w, mode)
    K, mu, J = dilatation_from_wirtinger(fz, fzb)
    bad = ~(J > 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise OrientationFailure("Jacobian is not positive", location=[w[i].real, w[i].imag])
    return DilatationReport(grid, w, K, mu, bound)


# -- strip interpolation -------------------------------------------------------


def _numeric_derivative(f):
    def df(x):
        h = 1e-6 * np.maximum(1.0, np.abs(x))
        return (f(x + h) - f(x - h)) / (2 * h)
    return df


def lemma1_bound(M):
    """Dilatation bound M (2M - 1)^2 of the strip interpolation."""
    return M * (2 * M - 1) ** 2


def check_interpolation_hypotheses(f0, f1, M, df0, df1, sample):
    x = np.linspace(*sample)
    for name, d in (("f0'", df0(x)), ("f1'", df1(x))):
        bad = (d < 1 / M) | (d > M)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise PreconditionViolation(f"{name} outside [1/M, M]", x=float(x[i]), value=float(d[i]))
    gap = np.abs(f0(x) - f1(x))
    if np.any(gap > M - 1):
        i = int(np.argmax(gap))
        raise PreconditionViolation("|f0 - f1| exceeds M - 1", x=float(x[i]), value=float(gap[i]))


def interpolate_strip(f0, f1, M, df0=None, df1=None, sample=(-60.0, 60.0, 4001)):
    """Linear interpolation between boundary maps on the strip 0 < Im < 1.

    ``f0`` and ``f1`` are vectorised real functions; their derivatives are
    taken numerically unless supplied.
    """
    df0 = df0 or _numeric_derivative(f0)
    df1 = df1 or _numeric_derivative(f1)
    check_interpolation_hypotheses(f0, f1, M, df0, df1, sample)

    def fn(w):
        x, y = w.real, w.imag
        return (1 - y) * f0(x) + y * f1(x) + 1j * y

    def wirtinger(w):
        x, y = w.real, w.imag
        fx = (1 - y) * df0(x) + y * df1(x)
        fy = f1(x) - f0(x) + 1j
        return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)

    return PlanarMap(fn, "strip 0<Im<1", wirtinger)


def identity(x):
    return np.asarray(x, dtype=float)


def one(x):
    return np.ones_like(np.asarray(x, dtype=float))


# -- angular stretches -----------------------------------------------------------


def angular_stretch(factor, theta_min):
    """(r, theta) -> (r, factor * theta), theta taken in [theta_min, theta_min + 2 pi)."""
    a, b = 0.5 * (1 + factor), 0.5 * (1 - factor)

    def theta(w):
        return np.mod(np.angle(w) - theta_min, 2 * np.pi) + theta_min

    def fn(w):
        return np.abs(w) * np.exp(1j * factor * theta(w))

    def wirtinger(w):
        f = fn(w)
        return a * f / w, b * f / np.conj(w)

    return PlanarMap(fn, f"sector theta>{theta_min}", wirtinger)


def alpha_map():
    """Stretch of the upper half-plane onto quadrants I-III."""
    return angular_stretch(1.5, 0.0)


def beta_map():
    """Squeeze of the lower half-plane onto quadrant IV."""
    return angular_stretch(0.5, -np.pi)


# -- the one-critical-point map -------------------------------------------------


def f0(x):
    x = np.asarray(x, dtype=float)
    return x + np.arctan(8 * x / (16 + x * x))


def df0(x):
    x = np.asarray(x, dtype=float)
    return 1 + 8 * (16 - x * x) / ((16 + x * x) ** 2 + 64 * x * x)


def f0_bounds():
    """Extremes of f0 - id and f0' - 1 against the bounds pi/2 and 1/2."""
    x_shift = brentq(lambda x: df0(x) - 1.0, 1.0, 10.0, xtol=1e-14)
    sup_shift = float(f0(x_shift) - x_shift)
    dev = lambda x: float(df0(x) - 1.0)  # noqa: E731
    # f0' - 1 decreases on [0, inf) down to a negative minimum, then tends to 0
    res = minimize_scalar(dev, bounds=(4.0, 20.0), method="bounded", options={"xatol": 1e-12})
    candidates = [(abs(dev(0.0)), 0.0), (abs(res.fun), float(res.x))]
    sup_dev, x_dev = max(candidates)
    xs = np.linspace(-200, 200, 400001)
    grid_shift = float(np.max(np.abs(f0(xs) - xs)))
    grid_dev = float(np.max(np.abs(df0(xs) - 1)))
    return {
        "sup_shift": sup_shift,
        "argmax_shift": [-x_shift, x_shift],
        "shift_bound": math.pi / 2,
        "sup_slope_dev": sup_dev,
        "argmax_slope_dev": x_dev,
        "slope_bound": 0.5,
        "grid_sup_shift": grid_shift,
        "grid_sup_slope_dev": grid_dev,
        "ok": bool(grid_shift <= math.pi / 2 and grid_dev <= 0.5 + 1e-15),
    }


@dataclass(frozen=True)
class SmoothStep:
    """Nondecreasing step, 0 on t <= -1 and 1 on t >= 0."""

    name: str
    fn: object
    deriv: object
    sup_deriv: float

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))


def _cubic(t):
    s = np.clip(t + 1.0, 0.0, 1.0)
    return s * s * (3 - 2 * s)


def _cubic_d(t):
    s = np.clip(t + 1.0, 0.0, 1.0)
    return 6 * s * (1 - s)


def _bump(x):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def _smooth(t):
    s = np.clip(t + 1.0, 0.0, 1.0)
    a, b = _bump(s), _bump(1 - s)
    return a / (a + b)


def _smooth_d(t):
    s = np.clip(np.asarray(t, dtype=float) + 1.0, 0.0, 1.0)
    a, b = _bump(s), _bump(1 - s)
    with np.errstate(divide="ignore", invalid="ignore"):
        da = np.where(s > 0, a / np.where(s > 0, s, 1.0) ** 2, 0.0)
        db = np.where(s < 1, -b / np.where(s < 1, 1 - s, 1.0) ** 2, 0.0)
        out = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return np.where((s > 0) & (s < 1), out, 0.0)


def _sup(fn):
    t = np.linspace(-1, 0, 200001)
    return float(np.max(fn(t)))


CUBIC = SmoothStep("cubic", _cubic, _cubic_d, 1.5)
SMOOTH = SmoothStep("smooth", _smooth, _smooth_d, _sup(_smooth_d))
STEPS = {"cubic": CUBIC, "smooth": SMOOTH}


def lemma2_margins(M, eta):
    """The two inequalities the blend constant must satisfy (both need >= 0)."""
    x = M - 4.0
    n = eta.sup_deriv
    return {
        "mu_bar": 1 / 3 - 4 * n / x,
        "mu": (1 - 8 / x - 4 * n / x - 8 / x**2) - 2 / 3,
    }


def minimal_M(eta):
    M = 5
    while True:
        if all(v >= 0 for v in lemma2_margins(M, eta).values()):
            return M
        M += 1


@dataclass(frozen=True)
class SpineMapParams:
    c: float = 0.0
    M: float = None
    eta: SmoothStep = field(default=CUBIC)
    a: float = 0.0

    def resolved_M(self):
        return minimal_M(self.eta) if self.M is None else self.M


def H(w):
    w = np.asarray(w, dtype=complex)
    return (w + 4) / (w - 4) * np.exp(w)


def dH(w):
    w = np.asarray(w, dtype=complex)
    return np.exp(w) * (w * w - 24) / (w - 4) ** 2


def log_H_phase(v, branch=-1):
    """Continuous Im log H(iv); H(0) = -1, so the branch fixes the value pi*branch at 0."""
    v = np.asarray(v, dtype=float)
    return v + 2 * np.arctan(v / 4) + branch * np.pi


def dlog_H_phase(v):
    v = np.asarray(v, dtype=float)
    return 1 + 8 / (16 + v * v)


def _G_parts(w, M, eta):
    w = np.asarray(w, dtype=complex)
    u, v = w.real, w.imag
    G = np.full(w.shape, np.nan + 0j)
    Gw = np.full(w.shape, np.nan + 0j)
    Gwb = np.zeros(w.shape, dtype=complex)

    far = u <= -M - 1
    G[far] = np.exp(w[far])
    Gw[far] = G[far]

    band = (u > -M - 1) & (u < -M)
    if np.any(band):
        wb = w[band]
        t = M + wb.real
        e = np.exp(wb)
        et, dt = eta(t), eta.deriv(t)
        G[band] = e * (et * 8 / (wb - 4) + 1)
        Gw[band] = e * (et * 8 / (wb - 4) + 1 + dt * 4 / (wb - 4) - et * 8 / (wb - 4) ** 2)
        Gwb[band] = e * dt * 4 / (wb - 4)

    mid = (u >= -M) & (u <= 0)
    G[mid] = H(w[mid])
    Gw[mid] = dH(w[mid])

    strip = (u > 0) & (u <= 1)
    if np.any(strip):
        us, vs = u[strip], v[strip]
        p0 = log_H_phase(vs)
        phase = (1 - us) * p0 + us * vs
        g = np.exp(us + 1j * phase)
        tu = 1 + 1j * (vs - p0)
        tv = 1j * ((1 - us) * dlog_H_phase(vs) + us)
        G[strip] = g
        Gw[strip] = g * 0.5 * (tu - 1j * tv)
        Gwb[strip] = g * 0.5 * (tu + 1j * tv)
    return G, Gw, Gwb


def build_G(params=SpineMapParams()):
    """Real quasiregular map on Re w <= 1 with exactly one critical point.

    exp for Re w <= -M-1 and on Re w = 1; the rational-times-exponential map
    H on [-M, 0]; a smooth blend in between; strip interpolation on (0, 1).
    """
    M = params.resolved_M()
    eta = params.eta
    if M <= 4:
        raise ConstantTooSmall("M must exceed 4", M=M)
    for name, margin in lemma2_margins(M, eta).items():
        if margin < 0:
            raise ConstantTooSmall(f"inequality '{name}' fails for M={M}", inequality=name, margin=margin)

    def fn(w):
        return _G_parts(w, M, eta)[0]

    def wirtinger(w):
        _, Gw, Gwb = _G_parts(w, M, eta)
        return Gw, Gwb

    gmap = PlanarMap(fn, "Re w <= 1", wirtinger)
    gmap.M = M
    gmap.eta = eta
    return gmap


CRITICAL_POINT = -2.0 * math.sqrt(6.0)


def critical_points(gmap, box=(-60.0, 1.0, -40.0, 40.0), n=(1220, 1600)):
    """Zeros of G_w found by scanning a box and polishing with Newton."""
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, n[0])
    ys = np.linspace(y0, y1, n[1])
    X, Y = np.meshgrid(xs, ys)
    W = (X + 1j * Y).ravel()
    Gw, _ = gmap.derivatives(W)
    rel = np.abs(Gw) / np.abs(gmap(W))
    found = []
    h = 1e-6
    for w in W[rel < 0.05]:
        for _ in range(60):
            gw = gmap.derivatives(np.array([w]))[0][0]
            slope = (gmap.derivatives(np.array([w + h]))[0][0]
                     - gmap.derivatives(np.array([w - h]))[0][0]) / (2 * h)
            w = w - gw / slope
            if not (x0 <= w.real <= x1 and y0 <= w.imag <= y1):
                break
        gw = gmap.derivatives(np.array([w]))[0][0]
        inside = x0 <= w.real <= x1 and y0 <= w.imag <= y1
        if inside and abs(gw) < 1e-10 * abs(gmap(np.array([w]))[0]):
            if not any(abs(w - z) < 1e-6 for z in found):
                found.append(complex(w))
    return found


# -- tracing the real preimage ---------------------------------------------------


def _scalar_G(M, eta):
    e8 = 8.0

    def G(w):
        u = w.real
        if u <= -M - 1:
            return cmath.exp(w)
        if u < -M:
            t = M + u
            return cmath.exp(w) * (float(eta(t)) * e8 / (w - 4) + 1)
        if u <= 0:
            return (w + 4) / (w - 4) * cmath.exp(w)
        v = w.imag
        phase = (1 - u) * (v + 2 * math.atan(v / 4) - math.pi) + u * v
        return cmath.exp(complex(u, phase))

    return G


@dataclass
class TraceResult:
    components: list
    summary: dict


def trace_real_preimage(gmap, kmax=6, x_left=None, y_max=None, h_max=0.2, tol=1e-12):
    """Follow Im G = 0 leftward from the seeds 1 + i k pi, |k| <= kmax.

    Each path is continued by a predictor step along the current direction
    and a bracketed root solve on the perpendicular line; the step halves
    whenever the bracket fails, which is what carries a path straight
    through the critical point.
    """
    M = gmap.M
    x_left = -M - 3.0 if x_left is None else x_left
    y_max = (kmax + 0.5) * math.pi if y_max is None else y_max
    G = _scalar_G(M, gmap.eta)

    def F(w):
        g = G(w)
        return g.imag / abs(g)

    comps = []
    consumed = set()
    for k in range(-kmax, kmax + 1):
        if k in consumed:
            continue
        seed = complex(1.0, k * math.pi)
        path, end, refinements = _follow(F, seed, -1.0 + 0j, x_left, y_max, h_max, tol)
        comp = {"seed": k, "points": np.array(path), "refinements": refinements}
        if end == "right":
            k2 = round(path[-1].imag / math.pi)
            comp["kind"] = "arc"
            comp["seeds"] = sorted([k, k2])
            consumed.add(k2)
        elif end == "left":
            comp["kind"] = "ray"
            comp["seeds"] = [k]
        else:
            comp["kind"] = "exit"
            comp["seeds"] = [k]
        consumed.add(k)
        comp["real_crossings"] = _real_crossings(comp["points"])
        comps.append(comp)
    return TraceResult(comps, _topology_summary(comps, kmax, M))


def _tangent(F, w, ref, e=1e-7):
    grad = complex(F(w + e) - F(w - e), F(w + 1j * e) - F(w - 1j * e))
    d = 1j * grad / abs(grad)
    return d if (d * ref.conjugate()).real >= 0 else -d


def _follow(F, seed, direction, x_left, y_max, h_max, tol):
    path = [seed]
    w = seed
    d = _tangent(F, w, direction)
    h = h_max / 4
    refinements = 0
    reoriented = False
    for _ in range(200000):
        n = 1j * d
        p = w + h * d
        lo, hi = -0.6 * h, 0.6 * h
        f_lo, f_hi = F(p + lo * n), F(p + hi * n)
        if f_lo * f_hi > 0:
            lam = None
        elif f_lo == 0:
            lam = lo
        elif f_hi == 0:
            lam = hi
        else:
            lam = brentq(lambda s: F(p + s * n), lo, hi, xtol=tol, rtol=1e-15)
        if lam is not None:
            w_new = p + lam * n
            step = w_new - w
            d_new = step / abs(step)
            # a kink at a seam of G is only crossed right after re-orienting
            limit = 0.0 if reoriented else math.cos(math.radians(35))
            if (d_new * d.conjugate()).real >= limit:
                path.append(w_new)
                w, d = w_new, d_new
                h = min(h * 1.6, h_max)
                reoriented = False
                if w.real < x_left:
                    return path, "left", refinements
                if w.real >= 1.0:
                    # G = exp on Re w = 1, so the endpoint is a seed height
                    path[-1] = complex(1.0, math.pi * round(w.imag / math.pi))
                    return path, "right", refinements
                if abs(w.imag) > y_max:
                    return path, "exit", refinements
                continue
        h *= 0.5
        refinements += 1
        if h < 1e-8:
            if reoriented:
                raise RuntimeError(f"tracing stalled near {w}")
            # the predictor direction is stale past a seam: restart from the local gradient
            d = _tangent(F, w + 1e-5 * d, d)
            h = 1e-3
            reoriented = True
    raise RuntimeError("tracing did not terminate")


def _real_crossings(points, eps=1e-9):
    # points on the axis itself carry no sign; a crossing is a sign change between off-axis points
    signs = np.sign(points.imag[np.abs(points.imag) > eps])
    return int(np.sum(signs[1:] != signs[:-1]))


def _topology_summary(comps, kmax, M):
    arcs = [c for c in comps if c["kind"] == "arc"]
    rays = [c for c in comps if c["kind"] == "ray"]
    trees = [cKDTree(np.c_[c["points"].real, c["points"].imag]) for c in comps]
    min_gap = math.inf
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            pts = comps[i]["points"]
            dist, _ = trees[j].query(np.c_[pts.real, pts.imag])
            if {comps[i]["kind"], comps[j]["kind"]} == {"arc", "ray"}:
                # the ray along the real axis meets the arc only at the critical point
                away = np.abs(pts - CRITICAL_POINT) > 0.05
                dist = dist[away]
            min_gap = min(min_gap, float(dist.min()))
    far_dev = 0.0
    for c in rays:
        pts = c["points"]
        far = pts[pts.real <= -M - 1]
        if far.size:
            far_dev = max(far_dev, float(np.max(np.abs(far.imag - math.pi * np.round(far.imag / math.pi)))))
    seeds = sorted(s for c in comps for s in c["seeds"] if abs(s) <= kmax)
    return {
        "seeds": 2 * kmax + 1,
        "seeds_accounted": len(seeds),
        "components": len(comps),
        "arcs": len(arcs),
        "rays": len(rays),
        "exits": sum(c["kind"] == "exit" for c in comps),
        "arc_seeds": arcs[0]["seeds"] if len(arcs) == 1 else [c["seeds"] for c in arcs],
        "arc_real_crossings": [c["real_crossings"] for c in arcs],
        "ray_real_crossings": sum(c["real_crossings"] for c in rays),
        "min_gap": min_gap,
        "disjoint": bool(min_gap > 1e-3),
        "far_left_deviation": far_dev,
        "ok": bool(len(arcs) == 1 and arcs[0]["real_crossings"] == 1 and min_gap > 1e-3
                   and len(seeds) == 2 * kmax + 1 and all(c["kind"] != "exit" for c in comps)),
    }


# -- the tiled spine map -----------------------------------------------------------


def build_spine_map(params=SpineMapParams()):
    """Quasi-periodic tiling of G across the half-plane Re w <= c.

    Band k holds a copy of G translated by k(M+2) and scaled by e^{-k(M+2)};
    the outermost band is placed so that the map equals e^w on Re w = c.
    Returns the map w -> a + g(w), or 1/g(w) when a is infinite.
    """
    gmap = build_G(params)
    M, c, a = gmap.M, params.c, params.a
    period = M + 2.0

    def band(w):
        s = w.real - c + 1.0
        k = np.floor((-M - 1 - s) / period) + 1
        return np.maximum(k, 0)

    def g(w):
        w = np.asarray(w, dtype=complex)
        k = band(w)
        return np.exp(c - 1.0 - k * period) * gmap(w - c + 1.0 + k * period)

    def g_wirtinger(w):
        w = np.asarray(w, dtype=complex)
        k = band(w)
        scale = np.exp(c - 1.0 - k * period)
        Gw, Gwb = gmap.derivatives(w - c + 1.0 + k * period)
        return scale * Gw, scale * Gwb

    if math.isinf(a):
        def fn(w):
            return 1.0 / g(w)
    else:
        def fn(w):
            return a + g(w)

    smap = PlanarMap(fn, "Re w <= c", g_wirtinger)
    smap.g = g
    smap.M = M
    smap.period = period
    smap.G = gmap
    return smap
