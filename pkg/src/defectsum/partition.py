"""Smooth cutoff functions, disjoint cutoff families, and lattice
partitions of unity, with measured derivative constants.

Cutoffs are mollified region indicators: the indicator of the eps/4
neighborhood of the target region convolved with a normalized smooth
bump supported in the ball of radius eps/4.  For balls, complements of
balls, and half spaces the convolution reduces to a one-dimensional
profile (a weighted average of spherical-cap fractions), which keeps
every value inside [0, 1] by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _gridtable
from .core import ValidatedConfig
from .errors import RegionsTooClose, DefectsumError

_QUAD_NODES = 256
# Central-difference steps relative to eps.  The quadrature-defined profile
# is piecewise smooth at the node scale (transition width / nodes), so the
# steps must sit above that scale or the differences measure node kinks.
_FD_REL_STEP_1 = 1e-3
_FD_REL_STEP_2 = 1e-2
_SCAN_POINTS = 4001


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class ComplementOfBall:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class HalfSpace:
    normal: tuple
    offset: float

    def __post_init__(self):
        nrm = math.hypot(*self.normal)
        if not nrm > 0:
            raise ValueError("half-space normal must be nonzero")


@dataclass(frozen=True)
class UnionOfBalls:
    balls: tuple

    def __post_init__(self):
        for b in self.balls:
            if not isinstance(b, Ball):
                raise TypeError("UnionOfBalls takes Ball members")


@dataclass(frozen=True)
class WholeSpace:
    pass


@dataclass(frozen=True)
class EmptyRegion:
    pass


WHOLE = WholeSpace()
EMPTY = EmptyRegion()


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / math.hypot(*v)


def region_distance(a, b) -> float:
    """Euclidean distance between two regions (0 if they meet)."""
    if isinstance(a, EmptyRegion) or isinstance(b, EmptyRegion):
        return math.inf
    if isinstance(a, WholeSpace) or isinstance(b, WholeSpace):
        return 0.0
    if isinstance(a, UnionOfBalls):
        if not a.balls:
            return math.inf
        return min(region_distance(m, b) for m in a.balls)
    if isinstance(b, UnionOfBalls):
        return region_distance(b, a)
    if isinstance(a, Ball) and isinstance(b, Ball):
        return max(0.0, math.dist(a.center, b.center) - a.radius - b.radius)
    if isinstance(a, Ball) and isinstance(b, ComplementOfBall):
        return max(0.0, b.radius - (math.dist(a.center, b.center) + a.radius))
    if isinstance(a, ComplementOfBall) and isinstance(b, Ball):
        return region_distance(b, a)
    if isinstance(a, ComplementOfBall) and isinstance(b, ComplementOfBall):
        return 0.0  # two ball complements always intersect
    if isinstance(a, HalfSpace) and isinstance(b, Ball):
        n = _unit(a.normal)
        signed = float(np.dot(n, b.center)) - a.offset
        return max(0.0, -signed - b.radius)
    if isinstance(a, Ball) and isinstance(b, HalfSpace):
        return region_distance(b, a)
    if isinstance(a, HalfSpace) and isinstance(b, ComplementOfBall):
        return 0.0  # a half space always meets a ball complement
    if isinstance(a, ComplementOfBall) and isinstance(b, HalfSpace):
        return 0.0
    if isinstance(a, HalfSpace) and isinstance(b, HalfSpace):
        na, nb = _unit(a.normal), _unit(b.normal)
        if float(np.dot(na, nb)) < -1.0 + 1e-12:
            # {s >= oa} versus {s <= -ob} along the common axis
            return max(0.0, a.offset + b.offset)
        return 0.0
    raise TypeError(f"unsupported region pair {type(a).__name__}/{type(b).__name__}")


def scale_region(region, factor: float):
    """Image of the region under x -> factor * x."""
    if isinstance(region, Ball):
        return Ball(tuple(factor * c for c in region.center), factor * region.radius)
    if isinstance(region, ComplementOfBall):
        return ComplementOfBall(tuple(factor * c for c in region.center),
                                factor * region.radius)
    if isinstance(region, HalfSpace):
        return HalfSpace(region.normal, factor * region.offset)
    if isinstance(region, UnionOfBalls):
        return UnionOfBalls(tuple(scale_region(b, factor) for b in region.balls))
    return region


# ---------------------------------------------------------------------------
# Bump quadrature and cap fractions


@lru_cache(maxsize=32)
def _bump_weights(n: int):
    """Nodes and normalized weights for the radial bump average in R^n."""
    x, w = np.polynomial.legendre.leggauss(_QUAD_NODES)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w
    theta = np.exp(-1.0 / (1.0 - r**2))
    weights = wr * r ** (n - 1) * theta
    return r, weights / weights.sum()


@lru_cache(maxsize=32)
def _capfrac_table(n: int):
    u = np.linspace(-1.0, 1.0, 200_001)
    g = (1.0 - u**2) ** ((n - 3) / 2.0)
    cum = np.concatenate(([0.0], np.cumsum((g[1:] + g[:-1]) * 0.5 * (u[1] - u[0]))))
    return u, 1.0 - cum / cum[-1]


def _cap_fraction(n: int, c0: np.ndarray) -> np.ndarray:
    """Fraction of the unit sphere S^{n-1} with first coordinate >= c0."""
    c0 = np.clip(c0, -1.0, 1.0)
    if n == 1:
        return 0.5 * ((1.0 >= c0).astype(float) + (-1.0 >= c0).astype(float))
    if n == 2:
        return np.arccos(c0) / math.pi
    if n == 3:
        return 0.5 * (1.0 - c0)
    u, frac = _capfrac_table(n)
    return np.interp(c0, u, frac)


class _BallProfile:
    """Radial profile of the mollified ball indicator.

    psi(d) = average over the bump of the cap fraction of the sphere of
    radius a*r at center distance d inside the ball of radius R.
    """

    def __init__(self, n: int, R: float, a: float):
        self.n = n
        self.R = R
        self.a = a

    def value(self, d):
        d = np.asarray(d, dtype=float)
        scalar = d.ndim == 0
        d = np.atleast_1d(d)
        r, w = _bump_weights(self.n)
        ar = self.a * r                                  # (q,)
        dd = d[:, None]                                  # (m, 1)
        inside = dd + ar <= self.R
        outside = (dd - ar >= self.R) | (ar - dd >= self.R)
        denom = 2.0 * ar * np.maximum(dd, 1e-300)
        c0 = (dd**2 + ar**2 - self.R**2) / denom
        frac = _cap_fraction(self.n, c0)
        frac = np.where(inside, 1.0, np.where(outside, 0.0, frac))
        out = frac @ w
        # exact plateaus
        out[d <= self.R - self.a] = 1.0
        out[d >= self.R + self.a] = 0.0
        return float(out[0]) if scalar else out

    @property
    def plateau_radius(self) -> float:
        return self.R - self.a

    @property
    def support_radius(self) -> float:
        return self.R + self.a


class _Profile1D:
    """Signed-distance profile for a mollified half space."""

    def __init__(self, n: int, edge: float, a: float):
        # value 1 for s >= edge + a, 0 for s <= edge - a
        self.n = n
        self.edge = edge
        self.a = a

    def value(self, s):
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        r, w = _bump_weights(self.n)
        ar = self.a * r
        ss = (s - self.edge)[:, None]
        c0 = -ss / np.maximum(ar, 1e-300)
        frac = _cap_fraction(self.n, c0)
        frac = np.where(ss >= ar, 1.0, np.where(ss <= -ar, 0.0, frac))
        out = frac @ w
        out[s - self.edge >= self.a] = 1.0
        out[s - self.edge <= -self.a] = 0.0
        return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Cutoff functions


@dataclass
class CutoffFunction:
    """Grid-evaluable cutoff with metadata and derivative access.

    Values lie in [0, 1] by construction; derivatives up to order two
    come from central differences on the one-dimensional profile at step
    eps * 1e-4, combined through the radial chain rule.
    """

    n: int
    eps: float
    F0: object
    F1: object
    kind: str                      # "const1" | "ball" | "cball" | "halfspace" | "union"
    center: Optional[tuple] = None
    profile: object = None
    normal: Optional[tuple] = None
    members: tuple = ()            # for "union": (center, profile) pairs

    # -- scalar profile with FD derivatives -------------------------------

    def profile_value(self, d):
        if self.kind == "const1":
            return np.ones_like(np.asarray(d, dtype=float))
        if self.kind == "cball":
            return 1.0 - self.profile.value(d)
        if self.kind == "union":
            raise TypeError("union cutoffs have no single radial profile; "
                            "use member_functions()")
        return self.profile.value(d)

    def member_functions(self):
        """Per-ball cutoffs of a union; the union is their disjoint sum."""
        if self.kind != "union":
            return (self,)
        return tuple(
            CutoffFunction(self.n, self.eps, self.F0, Ball(center, prof.R - prof.a),
                           "ball", center=center, profile=prof)
            for center, prof in self.members
        )

    def profile_d1(self, d):
        h = self.eps * _FD_REL_STEP_1
        d = np.asarray(d, dtype=float)
        return (self.profile_value(d + h) - self.profile_value(d - h)) / (2 * h)

    def profile_d2(self, d):
        h = self.eps * _FD_REL_STEP_2
        d = np.asarray(d, dtype=float)
        return (self.profile_value(d + h) - 2.0 * self.profile_value(d)
                + self.profile_value(d - h)) / (h * h)

    # -- point evaluation ---------------------------------------------------

    def _distances(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "halfspace":
            nrm = _unit(self.normal)
            return pts @ nrm, pts
        c = np.asarray(self.center, dtype=float)
        return np.sqrt(((pts - c) ** 2).sum(axis=1)), pts

    def value(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "const1":
            return np.ones(pts.shape[0])
        if self.kind == "union":
            out = np.zeros(pts.shape[0])
            for center, prof in self.members:
                d = np.sqrt(((pts - np.asarray(center)) ** 2).sum(axis=1))
                out += prof.value(d)
            return out
        d, _ = self._distances(points)
        return self.profile_value(d)

    def gradient(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "const1":
            return np.zeros_like(pts)
        if self.kind == "halfspace":
            nrm = _unit(self.normal)
            s = pts @ nrm
            return self.profile_d1(s)[:, None] * nrm[None, :]
        if self.kind == "union":
            out = np.zeros_like(pts)
            for center, prof in self.members:
                sub = CutoffFunction(self.n, self.eps, EMPTY, Ball(center, 1.0),
                                     "ball", center=center, profile=prof)
                out += sub.gradient(pts)
            return out
        c = np.asarray(self.center, dtype=float)
        rel = pts - c
        d = np.sqrt((rel**2).sum(axis=1))
        safe = np.maximum(d, 1e-300)
        return (self.profile_d1(d) / safe)[:, None] * rel

    # -- direction-maximized derivative magnitudes ---------------------------

    def scan_grid(self):
        """Distance samples covering plateau, transition, and beyond."""
        if self.kind == "const1":
            return np.linspace(0.0, max(1.0, self.eps), 64)
        if self.kind == "halfspace":
            edge, a = self.profile.edge, self.profile.a
            return np.linspace(edge - 3 * a, edge + 3 * a, _SCAN_POINTS)
        prof = self.profile if self.kind != "union" else self.members[0][1]
        hi = prof.support_radius + prof.a
        return np.linspace(1e-9, hi, _SCAN_POINTS)

    def derivative_maxima(self):
        """Max |partial^alpha phi| over R^n, per order 0, 1, 2."""
        if self.kind == "union":
            parts = [m.derivative_maxima() for m in self.member_functions()]
            return {k: max(p[k] for p in parts) for k in (0, 1, 2)}
        d = self.scan_grid()
        v = self.profile_value(d)
        d1 = self.profile_d1(d)
        d2 = self.profile_d2(d)
        out = {0: float(np.abs(v).max()), 1: float(np.abs(d1).max())}
        if self.kind in ("halfspace", "const1") or self.n == 1:
            out[2] = float(np.abs(d2).max())
        else:
            curv = np.abs(d1) / np.maximum(d, 1e-300)
            out[2] = float(np.maximum(np.abs(d2), curv).max())
        return out

    @property
    def support_radius(self) -> Optional[float]:
        if self.kind == "ball":
            return self.profile.support_radius
        if self.kind == "union":
            return max(math.dist(c, self.members[0][0]) + p.support_radius
                       for c, p in self.members)
        return None

    @property
    def plateau_radius(self) -> Optional[float]:
        if self.kind == "ball":
            return self.profile.plateau_radius
        return None


def _region_center(region):
    return tuple(float(c) for c in region.center)


def build_cutoff(F0, F1, eps: float, n: int) -> CutoffFunction:
    """Mollified indicator: 1 on F1, 0 on F0, transition of width ~eps/2.

    Requires dist(F0, F1) >= eps.  The target indicator is the eps/4
    neighborhood of F1, smoothed by a bump of radius eps/4.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    dist = region_distance(F0, F1)
    if dist < eps * (1.0 - 1e-12):
        raise RegionsTooClose(
            f"dist(F0, F1) = {dist:g} but the construction needs >= {eps:g}"
        )
    a = eps / 4.0
    if isinstance(F1, WholeSpace):
        return CutoffFunction(n, eps, F0, F1, "const1")
    if isinstance(F1, Ball):
        prof = _BallProfile(n, F1.radius + a, a)
        return CutoffFunction(n, eps, F0, F1, "ball",
                              center=_region_center(F1), profile=prof)
    if isinstance(F1, ComplementOfBall):
        inner = F1.radius - a
        if inner <= 0:
            return CutoffFunction(n, eps, F0, F1, "const1")
        prof = _BallProfile(n, inner, a)
        return CutoffFunction(n, eps, F0, F1, "cball",
                              center=_region_center(F1), profile=prof)
    if isinstance(F1, HalfSpace):
        # plateau begins at signed distance offset - a + a = offset; the
        # shifted edge keeps phi = 1 on F1 itself
        prof = _Profile1D(n, F1.offset - a, a)
        return CutoffFunction(n, eps, F0, F1, "halfspace",
                              normal=tuple(F1.normal), profile=prof)
    if isinstance(F1, UnionOfBalls):
        members = []
        for b in F1.balls:
            members.append((tuple(float(c) for c in b.center),
                            _BallProfile(n, b.radius + a, a)))
        for i in range(len(F1.balls)):
            for j in range(i + 1, len(F1.balls)):
                gap = region_distance(F1.balls[i], F1.balls[j])
                if gap <= eps:
                    raise RegionsTooClose(
                        "union members too close for disjoint mollification"
                    )
        return CutoffFunction(n, eps, F0, F1, "union", members=tuple(members))
    raise TypeError(f"cannot mollify region {type(F1).__name__}")


# ---------------------------------------------------------------------------
# Verification


@dataclass(frozen=True)
class VerificationReport:
    bound_violation: float
    f0_max: float
    f1_deviation: float
    c_hat: dict
    scale_stability: Optional[dict]
    passed: bool

    def to_json(self) -> dict:
        return {
            "bound_violation": self.bound_violation,
            "f0_max": self.f0_max,
            "f1_deviation": self.f1_deviation,
            "c_hat": {str(k): v for k, v in self.c_hat.items()},
            "scale_stability": self.scale_stability,
            "passed": self.passed,
        }


def _region_samples(phi: CutoffFunction, region, which: str) -> np.ndarray:
    """Distance samples lying inside the given region along the scan axis."""
    d = phi.scan_grid()
    if isinstance(region, EmptyRegion):
        return d[:0]
    if isinstance(region, WholeSpace):
        return d
    if phi.kind == "halfspace":
        if isinstance(region, HalfSpace):
            sgn = float(np.dot(_unit(phi.normal), _unit(region.normal)))
            if sgn > 0:
                return d[d >= region.offset]
            return d[d <= -region.offset]
        raise TypeError("half-space cutoffs pair with half-space regions")
    if isinstance(region, Ball):
        center_gap = math.dist(_region_center(region), phi.center or region.center)
        return d[np.abs(d - center_gap) <= region.radius]
    if isinstance(region, ComplementOfBall):
        return d[d >= region.radius]
    if isinstance(region, UnionOfBalls):
        parts = [_region_samples(phi, b, which) for b in region.balls]
        return np.concatenate(parts) if parts else d[:0]
    raise TypeError(f"cannot sample region {type(region).__name__}")


def measured_constants(phi: CutoffFunction) -> dict:
    """eps^|alpha| * max |partial^alpha phi| per derivative order."""
    maxima = phi.derivative_maxima()
    return {order: phi.eps**order * value for order, value in maxima.items()}


def verify_cutoff(phi: CutoffFunction, check_scaling: bool = True,
                  scales=(0.1, 1.0, 10.0)) -> VerificationReport:
    """Check [0,1] bounds, boundary values, and eps-scaling of constants."""
    if phi.kind == "union":
        # members have disjoint supports: verify each against its own ball
        # and certify the vanishing on F0 from support geometry
        subs = [verify_cutoff(m, check_scaling=False)
                for m in phi.member_functions()]
        f0_gap = min(
            region_distance(Ball(m.center, m.profile.support_radius), phi.F0)
            for m in phi.member_functions()
        )
        passed = all(r.passed for r in subs) and f0_gap > 0
        return VerificationReport(
            bound_violation=max(r.bound_violation for r in subs),
            f0_max=0.0 if f0_gap > 0 else 1.0,
            f1_deviation=max(r.f1_deviation for r in subs),
            c_hat={k: max(r.c_hat[k] for r in subs) for k in (0, 1, 2)},
            scale_stability=None,
            passed=passed,
        )
    d = phi.scan_grid()
    v = phi.profile_value(d)
    upper = float(np.maximum(v - 1.0, 0.0).max())
    lower = float(np.maximum(-v, 0.0).max())
    f0_samples = _region_samples(phi, phi.F0, "F0")
    f1_samples = _region_samples(phi, phi.F1, "F1")
    f0_max = float(np.abs(phi.profile_value(f0_samples)).max()) if f0_samples.size else 0.0
    f1_dev = float(np.abs(phi.profile_value(f1_samples) - 1.0).max()) if f1_samples.size else 0.0

    c_hat = measured_constants(phi)

    stability = None
    stable = True
    if check_scaling and phi.kind != "const1":
        per_scale = {}
        for s in scales:
            factor = s / phi.eps
            scaled = build_cutoff(scale_region(phi.F0, factor),
                                  scale_region(phi.F1, factor), s, phi.n)
            per_scale[s] = measured_constants(scaled)
        ratios = {}
        for order in (1, 2):
            vals = [per_scale[s][order] for s in scales]
            lo, hi = min(vals), max(vals)
            ratios[order] = hi / lo if lo > 0 else 1.0
        stable = all(r <= 1.05 for r in ratios.values())
        stability = {
            "constants": {str(s): {str(k): v for k, v in cs.items()}
                          for s, cs in per_scale.items()},
            "max_over_min": {str(k): v for k, v in ratios.items()},
        }

    passed = (upper < 1e-8 and lower < 1e-8 and f0_max < 1e-8
              and f1_dev < 1e-8 and stable)
    return VerificationReport(
        bound_violation=max(upper, lower),
        f0_max=f0_max,
        f1_deviation=f1_dev,
        c_hat=c_hat,
        scale_stability=stability,
        passed=passed,
    )


# ---------------------------------------------------------------------------
# Cutoff families for validated configurations


@dataclass(frozen=True)
class FamilyMember:
    position: tuple
    phi: CutoffFunction
    phi_tilde: CutoffFunction
    support_radius: float
    tilde_support_radius: float


@dataclass(frozen=True)
class CutoffFamily:
    members: tuple
    epsilon: float
    min_support_gap: float
    min_tilde_gap: float

    def sum_values(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(pts.shape[0])
        for m in self.members:
            out += m.phi.value(pts)
        return out


def build_family(validated: ValidatedConfig,
                 scale: Optional[float] = None) -> CutoffFamily:
    """Inner/outer cutoff pair per singularity with certified disjointness.

    ``scale`` defaults to the validated separation; any smaller positive
    value produces a tighter family with the same plateau guarantees.
    """
    cfg = validated.config
    eps = validated.epsilon if scale is None else scale
    if scale is not None and not 0.0 < scale <= validated.epsilon:
        raise ValueError("family scale must lie in (0, epsilon]")
    if not math.isfinite(eps):
        deltas = [s.spec.delta for s in cfg.singularities]
        if cfg.lattice is not None:
            deltas.append(cfg.lattice.spec.delta)
        eps = 2.0 * max(deltas) if deltas else 1.0

    placements = [(s.position, s.spec.delta) for s in cfg.singularities]
    if cfg.lattice is not None:
        placements.append((cfg.lattice.origin, cfg.lattice.spec.delta))

    members = []
    for pos, delta in placements:
        phi = build_cutoff(
            ComplementOfBall(pos, delta + eps / 2.0),
            Ball(pos, delta + eps / 4.0),
            eps / 4.0, cfg.n,
        )
        phi_t = build_cutoff(
            ComplementOfBall(pos, delta + 9.0 * eps / 16.0),
            Ball(pos, delta + 3.0 * eps / 8.0),
            3.0 * eps / 16.0, cfg.n,
        )
        members.append(FamilyMember(
            position=tuple(pos), phi=phi, phi_tilde=phi_t,
            support_radius=phi.support_radius,
            tilde_support_radius=phi_t.support_radius,
        ))

    gap = math.inf
    tgap = math.inf
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            dist = math.dist(members[i].position, members[j].position)
            gap = min(gap, dist - members[i].support_radius - members[j].support_radius)
            tgap = min(tgap, dist - members[i].tilde_support_radius
                       - members[j].tilde_support_radius)
    if len(members) > 1 and (gap <= 0 or tgap <= 0):
        raise DefectsumError("cutoff family supports are not disjoint")
    return CutoffFamily(tuple(members), eps, gap, tgap)


def partition_constants(family: CutoffFamily, samples: int = _SCAN_POINTS):
    """Grid-maximized (e, alpha, beta) for the family of inner cutoffs.

    e = max sum |grad phi_j|^2, alpha = 2 max sum (lap phi_j)^2,
    beta = 4 max sum |grad phi_j|^2.  Supports are disjoint, so the sums
    have at most one term at any point and radial scans suffice.
    """
    e = 0.0
    alpha = 0.0
    for m in family.members:
        phi = m.phi
        d = np.linspace(1e-9, phi.support_radius + phi.eps, samples)
        d1 = phi.profile_d1(d)
        d2 = phi.profile_d2(d)
        n = phi.n
        lap = d2 + (n - 1) * d1 / np.maximum(d, 1e-300)
        e = max(e, float((d1**2).max()))
        alpha = max(alpha, 2.0 * float((lap**2).max()))
    return e, alpha, 4.0 * e


# ---------------------------------------------------------------------------
# Lattice partition of unity


class LatticePartition:
    """Normalized bump family on a cubic lattice with sum of squares one.

    The base bump equals 1 on the ball of radius 0.9 and vanishes outside
    the unit ball; the lattice spacing is 1 for n <= 3 and shrinks like
    1.8/sqrt(n) beyond so that every point lies inside some plateau.
    """

    PLATEAU = 0.9
    SUPPORT = 1.0

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        self.n = n
        self.spacing = 1.0 if n <= 3 else 1.8 / math.sqrt(n)
        a = (self.SUPPORT - self.PLATEAU) / 2.0
        self._profile = _BallProfile(n, self.PLATEAU + a, a)
        self._fd = 1e-6

    def _psi(self, d):
        return self._profile.value(d)

    def _psi_d1(self, d):
        h = self._fd
        return (self._profile.value(np.asarray(d) + h)
                - self._profile.value(np.asarray(d) - h)) / (2 * h)

    def sites_near(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo = np.floor((x - self.SUPPORT) / self.spacing).astype(int)
        hi = np.ceil((x + self.SUPPORT) / self.spacing).astype(int)
        grids = np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(lo, hi)],
                            indexing="ij")
        sites = np.stack([g.ravel() for g in grids], axis=1) * self.spacing
        d = np.sqrt(((sites - x) ** 2).sum(axis=1))
        return sites[d < self.SUPPORT + self._fd * 4]

    def unnormalized_sq_sum(self, x) -> float:
        sites = self.sites_near(x)
        if sites.size == 0:
            return 0.0
        d = np.sqrt(((sites - np.asarray(x, dtype=float)) ** 2).sum(axis=1))
        return float((self._psi(d) ** 2).sum())

    def values_and_grads(self, x):
        """Normalized member values and gradients contributing at x."""
        x = np.asarray(x, dtype=float)
        sites = self.sites_near(x)
        rel = x[None, :] - sites
        d = np.sqrt((rel**2).sum(axis=1))
        psi = self._psi(d)
        dpsi = self._psi_d1(d)
        grads_psi = (dpsi / np.maximum(d, 1e-300))[:, None] * rel
        ssq = float((psi**2).sum())
        s = math.sqrt(ssq)
        grad_s = (psi[:, None] * grads_psi).sum(axis=0) / s
        vals = psi / s
        grads = grads_psi / s - (psi[:, None] * grad_s[None, :]) / ssq
        return sites, vals, grads

    def sum_of_squares(self, x) -> float:
        _, vals, _ = self.values_and_grads(x)
        return float((vals**2).sum())

    def cross_term(self, x) -> np.ndarray:
        """sum_j phi_j grad phi_j, identically zero for the normalized family."""
        _, vals, grads = self.values_and_grads(x)
        return (vals[:, None] * grads).sum(axis=0)


def lattice_partition(n: int) -> LatticePartition:
    return LatticePartition(n)


# ---------------------------------------------------------------------------
# Grid export


def export_cutoff_grid(phi: CutoffFunction, bbox, shape, path) -> None:
    """Sample the cutoff on a tensor grid and write a grid table."""
    axes = [np.linspace(lo, hi, s) for (lo, hi), s in zip(bbox, shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = phi.value(pts).reshape(shape)
    _gridtable.save_grid(path, bbox, vals)
