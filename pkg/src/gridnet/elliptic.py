"""Complete elliptic integrals and Jacobi functions via the AGM.

Everything here is vectorised over numpy arrays where it matters.  The
quadrilateral modulus helpers are shared by the uniformization data (the
rectangle height) and by the cell moduli of the type estimator.
"""

import math

import numpy as np

from .errors import NumericFailure

_AGM_MAXITER = 64


def agm(a, b):
    """Arithmetic-geometric mean of two positive reals."""
    a, b = float(a), float(b)
    if a <= 0 or b <= 0:
        raise NumericFailure(f"agm needs positive arguments, got {a}, {b}")
    for _ in range(_AGM_MAXITER):
        a_next, b_next = 0.5 * (a + b), math.sqrt(a * b)
        if abs(a_next - b_next) <= 4e-16 * a_next or (a_next, b_next) == (a, b):
            return a_next
        a, b = a_next, b_next
    raise NumericFailure("agm did not converge")


def ellipk(k):
    """K(k) with k the modulus (not the parameter m = k**2)."""
    if not 0 <= k < 1:
        raise NumericFailure(f"modulus must lie in [0, 1), got {k}")
    return math.pi / (2.0 * agm(1.0, complementary(k)))


def complementary(k):
    # (1-k)(1+k) keeps precision when k is close to 1
    return math.sqrt((1.0 - k) * (1.0 + k))


def _landen_chain(k):
    a, b, c = [1.0], [complementary(k)], [k]
    for _ in range(_AGM_MAXITER):
        if abs(c[-1]) <= 1e-17 or (len(c) > 1 and abs(c[-1]) <= 4e-16 * a[-1]):
            return a, c
        a_n, b_n = a[-1], b[-1]
        a.append(0.5 * (a_n + b_n))
        b.append(math.sqrt(a_n * b_n))
        c.append(0.5 * (a_n - b_n))
    raise NumericFailure("Landen chain did not terminate")


def ellipj_real(u, k):
    """Jacobi (sn, cn, dn) for real argument by descending Landen / AGM."""
    u = np.asarray(u, dtype=float)
    if k == 0.0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    a, c = _landen_chain(k)
    n = len(a) - 1
    phi = (2.0**n) * a[n] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] * np.sin(phi) / a[j]))
    sn = np.sin(phi)
    cn = np.cos(phi)
    # dn^2 = k'^2 + k^2 cn^2 is a sum of positives, so no cancellation near sn = 1
    kc = complementary(k)
    dn = np.sqrt(kc * kc + k * k * cn * cn)
    return sn, cn, dn


def ellipj(z, k):
    """Jacobi (sn, cn, dn) for complex argument.

    Uses the addition formulas that split x + iy into a real-modulus part at
    x and a complementary-modulus part at y.  Poles come back as complex inf.
    """
    z = np.asarray(z, dtype=complex)
    kc = complementary(k)
    s, c, d = ellipj_real(z.real, k)
    s1, c1, d1 = ellipj_real(z.imag, kc)
    den = c1 * c1 + k * k * s * s * s1 * s1
    with np.errstate(divide="ignore", invalid="ignore"):
        sn = (s * d1 + 1j * c * d * s1 * c1) / den
        cn = (c * c1 - 1j * s * d * s1 * d1) / den
        dn = (d * c1 * d1 - 1j * k * k * s * c * s1) / den
    pole = den == 0
    if np.any(pole):
        sn = np.where(pole, complex(np.inf), sn)
        cn = np.where(pole, complex(np.inf), cn)
        dn = np.where(pole, complex(np.inf), dn)
    return sn, cn, dn


def to_circle(x):
    """Cayley image on the unit circle of a point of the extended real line."""
    if math.isinf(x):
        return 1.0 + 0.0j
    return (x - 1j) / (x + 1j)


def cross_ratio(z1, z2, z3, z4):
    """(z3 - z1)(z4 - z2) / ((z3 - z2)(z4 - z1)); real and > 1 for cyclic order."""
    return ((z3 - z1) * (z4 - z2)) / ((z3 - z2) * (z4 - z1))


def modulus_from_cross_ratio(cr):
    """Extremal distance between sides 2 and 4 of a quadrilateral.

    Sides are numbered 1..4 starting from the arc between the first two
    vertices.  The vertices are matched to (-1/k, -1, 1, 1/k) of the sn
    rectangle, so the answer is K(k') / (2 K(k)).
    """
    if not cr > 1:
        raise NumericFailure(f"cross-ratio {cr} is not > 1; vertices not in cyclic order")
    t = 2.0 * cr - 1.0
    k = 1.0 / (t + math.sqrt((t - 1.0) * (t + 1.0)))
    return ellipk(complementary(k)) / (2.0 * ellipk(k))


def quad_modulus(points):
    """Modulus (sides 2 <-> 4) of the half-plane quadrilateral with the given
    vertices on the extended real line, listed in positive boundary order."""
    z = [to_circle(float(p)) for p in points]
    cr = cross_ratio(*z)
    return modulus_from_cross_ratio(cr.real)


def circle_modulus(angles):
    """Same as quad_modulus for vertices e^{i*angle} on the unit circle."""
    z = [complex(math.cos(a), math.sin(a)) for a in angles]
    return modulus_from_cross_ratio(cross_ratio(*z).real)
