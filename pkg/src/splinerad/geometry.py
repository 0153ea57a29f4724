"""Descriptor vector -> spline radiator geometry.

The radiator is a meander strip. Its centerline is a chain of C = 37 control
points forming O = 12 cubic Bezier segments; only the lower half (points
1..19, feed end to the apex on the x axis) is generated from the
descriptors, the upper half is its mirror image about the x axis.

Control-point map (upper half, listed from the apex outward; the lower half
is the mirror image traversed in reverse)::

    vertical runs  V0..V6 = 2*l2, l3, l5, l6, l8, l9, l11   (V0 straddles y=0)
    lateral spans  s1..s6 = l4/2, l4/2, l7/2, l7/2, l10/2, l10/2
    bend widths    b0..b6 = w3, w4, w5, w6, w7, w8, w9        (b0 at the apex)

    run V_j occupies y in [Y_j, Y_j + V_j], Y_0 = -l2, Y_j = Y_{j-1} + V_{j-1}
    run V_j sits at x = X_j, X_0 = 0, X_j = X_{j-1} + (-1)**(j-1) * s_j

    segment j (j = 1..6) has control points
        P0 = (X_{j-1}, mid of V_{j-1})    (y = 0 for j = 1)
        P1 = (X_{j-1}, top of V_{j-1})
        P2 = (X_j,     bottom of V_j)
        P3 = (X_j,     mid of V_j)        (top of V_6 for j = 6: the open tip)

Segment ends ("bends") are the lateral extremes of the meander. The local
strip width varies linearly in the Bezier parameter between the widths of
the two bends of a segment. The feed taper (l1, w1 -> w2) attaches to the
lower tip. Units are meters throughout.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import shapely

from . import _kernels
from .errors import OutOfBounds, SelfIntersecting, WrongArity

K = 20
N_LENGTHS = 11
N_WIDTHS = 9
N_CONTROL = 37
N_SEGMENTS = (N_CONTROL - 1) // 3
DEFAULT_OFFSET = 3e-3
DEFAULT_SAMPLES = 64
INTERSECT_TOL = 1e-9

NAMES = tuple([f"l{k}" for k in range(1, N_LENGTHS + 1)]
              + [f"w{k}" for k in range(1, N_WIDTHS + 1)])

# optimal descriptors of the synthesized radiator [m]
REFERENCE = {
    "l1": 1.80e-4, "l2": 7.57e-4, "l3": 5.27e-4, "l4": 1.51e-3, "l5": 1.51e-3,
    "l6": 6.47e-4, "l7": 1.38e-3, "l8": 1.38e-3, "l9": 1.00e-3, "l10": 1.10e-3,
    "l11": 5.22e-4,
    "w1": 3.26e-4, "w2": 1.46e-4, "w3": 7.57e-4, "w4": 7.57e-4, "w5": 6.90e-4,
    "w6": 6.90e-4, "w7": 5.52e-4, "w8": 5.52e-4, "w9": 9.03e-4,
}


@dataclass(frozen=True)
class DescriptorVector:
    """The K = 20 geometry descriptors: l1..l11 then w1..w9, in meters."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != K:
            raise WrongArity(v.size, K)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_dict(cls, d):
        return cls([d[n] for n in NAMES])

    @classmethod
    def reference(cls):
        return cls.from_dict(REFERENCE)

    def as_dict(self):
        return {n: float(x) for n, x in zip(NAMES, self.values)}

    @property
    def lengths(self):
        return self.values[:N_LENGTHS]

    @property
    def widths(self):
        return self.values[N_LENGTHS:]

    def l(self, k):
        return float(self.values[k - 1])

    def w(self, k):
        return float(self.values[N_LENGTHS + k - 1])

    def __len__(self):
        return K

    def __eq__(self, other):
        return isinstance(other, DescriptorVector) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


@dataclass(frozen=True)
class DescriptorBounds:
    """Closed search interval per descriptor plus the fixed substrate offset ``b``."""

    lo: np.ndarray
    hi: np.ndarray
    offset: float = DEFAULT_OFFSET

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).ravel()
        hi = np.array(self.hi, dtype=float).ravel()
        if lo.size != K or hi.size != K:
            raise WrongArity(min(lo.size, hi.size), K)
        if np.any(lo <= 0) or np.any(lo > hi):
            raise ValueError("bounds need 0 < lo <= hi for every descriptor")
        if not self.offset > 0:
            raise ValueError("offset b must be positive")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def around(cls, center=None, rel=0.3, offset=DEFAULT_OFFSET):
        """Bounds ``center * (1 -+ rel)``; the default center is the reference design."""
        c = (center if center is not None else DescriptorVector.reference()).values
        return cls(c * (1.0 - rel), c * (1.0 + rel), offset)

    @classmethod
    def scaled(cls, center, lo_factor, hi_factor, offset=DEFAULT_OFFSET):
        return cls(center.values * lo_factor, center.values * hi_factor, offset)

    def to_unit(self, chi):
        v = chi.values if isinstance(chi, DescriptorVector) else np.asarray(chi, float)
        return (v - self.lo) / (self.hi - self.lo)

    def from_unit(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return DescriptorVector(self.lo + u * (self.hi - self.lo))


def validate_descriptors(chi, bounds):
    """Return ``chi`` as a DescriptorVector if every entry is positive and in bounds.

    Raises
    ------
    WrongArity
        If the entry count is not 20.
    OutOfBounds
        For the first (1-based) index violating positivity or its interval.
    """
    if not isinstance(chi, DescriptorVector):
        chi = DescriptorVector(chi)
    for k, (x, lo, hi) in enumerate(zip(chi.values, bounds.lo, bounds.hi), start=1):
        if not (x > 0 and lo <= x <= hi):
            raise OutOfBounds(k, NAMES[k - 1], float(x), float(lo), float(hi))
    return chi


def total_length(chi, b=DEFAULT_OFFSET):
    """Overall radiator length ``l1 + 2 (b + l2 + l3 + l5 + l6 + l8 + l9 + l11)``."""
    l = chi.lengths if isinstance(chi, DescriptorVector) else np.asarray(chi, float)[:N_LENGTHS]
    return float(l[0] + 2.0 * (b + l[1] + l[2] + l[4] + l[5] + l[7] + l[8] + l[10]))


def mirror_half(points):
    """Reflect half-curve points 1..19 about the x axis into points 20..37.

    Point 19 lies on the axis and is not duplicated; output point 19 + i is
    the image of input point 19 - i.
    """
    p = np.asarray(points, dtype=float)
    if p.shape != (19, 2):
        raise ValueError(f"expected 19 half-curve points, got shape {p.shape}")
    return p[-2::-1] * np.array([1.0, -1.0])


def _upper_half(chi):
    """Upper-half control points from the apex outward (19, 2) and bend widths (7,)."""
    V = [2 * chi.l(2), chi.l(3), chi.l(5), chi.l(6), chi.l(8), chi.l(9), chi.l(11)]
    span = [chi.l(4) / 2, chi.l(4) / 2, chi.l(7) / 2, chi.l(7) / 2,
            chi.l(10) / 2, chi.l(10) / 2]
    bend_w = np.array([chi.w(k) for k in range(3, 10)])
    Y = [-chi.l(2)]
    for j in range(1, 7):
        Y.append(Y[-1] + V[j - 1])
    X = [0.0]
    for j in range(1, 7):
        X.append(X[-1] + (1.0 if j % 2 else -1.0) * span[j - 1])
    pts = [(X[0], 0.0)]
    for j in range(1, 7):
        end_y = Y[j] + V[j] if j == 6 else Y[j] + V[j] / 2
        pts += [(X[j - 1], Y[j - 1] + V[j - 1]), (X[j], Y[j]), (X[j], end_y)]
    return np.array(pts), bend_w


def control_points(chi):
    """All 37 centerline control points, traversal order feed tip -> apex -> open tip."""
    upper, _ = _upper_half(chi)
    half = upper[::-1] * np.array([1.0, -1.0])
    return np.vstack([half, mirror_half(half)])


def bend_widths(chi):
    """Local strip width at the 13 segment ends, in traversal order."""
    _, bw = _upper_half(chi)
    return np.concatenate([bw[::-1], bw[1:]])


@dataclass(frozen=True)
class SegmentRecord:
    length: float           # centerline arc length (beta_o)
    mean_width: float       # arc-length-weighted mean strip width (gamma_o)
    direction: np.ndarray   # unit chord vector, start -> end
    distance: float         # centerline distance from the feed tip to the segment end
    y_center: float         # arc-length-weighted mean y


@dataclass(frozen=True)
class FeedRecord:
    length: float
    start_width: float
    end_width: float


@dataclass(frozen=True)
class RadiatorLayout:
    descriptors: DescriptorVector
    offset: float
    control_points: np.ndarray        # (37, 2)
    bend_widths: np.ndarray           # (13,)
    samples: np.ndarray               # (12, n+1, 2) sampled centerline per segment
    sample_widths: np.ndarray         # (12, n+1)
    segments: tuple
    feed: FeedRecord

    @property
    def total_length(self):
        y = self.control_points[:, 1]
        return self.feed.length + 2.0 * self.offset + float(y.max() - y.min())

    @property
    def centerline(self):
        s = self.samples
        return np.vstack([s[0]] + [seg[1:] for seg in s[1:]])

    @cached_property
    def contour(self):
        """Closed strip outline (first vertex repeated last), counter-clockwise."""
        w = self.sample_widths
        wc = np.concatenate([w[0]] + [x[1:] for x in w[1:]])
        return strip_outline(self.centerline, wc)


def arc_lengths(ctrl, n):
    """Trapezoidal quadrature of the Bezier speed on ``n`` uniform steps per segment."""
    ctrl = np.asarray(ctrl, dtype=float)
    t = np.linspace(0.0, 1.0, n + 1)
    d = 3.0 * np.diff(ctrl, axis=1)            # derivative control points (S, 3, 2)
    u = 1.0 - t
    basis = np.stack([u * u, 2 * u * t, t * t], axis=1)   # (n+1, 3)
    vel = np.einsum("tk,skc->stc", basis, d)
    speed = np.hypot(vel[..., 0], vel[..., 1])
    return np.trapezoid(speed, t, axis=1), speed, t


def strip_outline(center, widths):
    """Outline of a variable-width strip as the union of its per-step quads.

    A plain offset curve loops back on itself at tight inner corners; the
    union removes those loops and returns a simple closed ring.
    """
    d = np.gradient(center, axis=0)
    n = np.stack([-d[:, 1], d[:, 0]], axis=1)
    n /= np.hypot(n[:, 0], n[:, 1])[:, None]
    left = center + n * (widths / 2)[:, None]
    right = center - n * (widths / 2)[:, None]
    quads = np.stack([left[:-1], left[1:], right[1:], right[:-1]], axis=1)
    # the hull keeps pieces valid where the inner offset folds over a corner
    pieces = shapely.convex_hull(shapely.multipoints(quads))
    poly = shapely.union_all(pieces)
    if poly.geom_type != "Polygon":
        raise SelfIntersecting("strip outline is not a single polygon")
    ring = shapely.get_coordinates(shapely.geometry.polygon.orient(poly).exterior)
    return ring


def build_layout(chi, bounds=None, samples_per_segment=DEFAULT_SAMPLES):
    """Place the control points, sample the 12 segments and tabulate them.

    Raises
    ------
    SelfIntersecting
        If the sampled centerline crosses itself.
    """
    if samples_per_segment < 2:
        raise ValueError("samples_per_segment must be >= 2")
    if bounds is not None:
        chi = validate_descriptors(chi, bounds)
        offset = bounds.offset
    else:
        chi = chi if isinstance(chi, DescriptorVector) else DescriptorVector(chi)
        offset = DEFAULT_OFFSET
    P = control_points(chi)
    ctrl = np.stack([P[3 * o:3 * o + 4] for o in range(N_SEGMENTS)])
    t = np.linspace(0.0, 1.0, samples_per_segment + 1)
    samples = _kernels.de_casteljau(ctrl, t)
    center = np.vstack([samples[0]] + [s[1:] for s in samples[1:]])
    if _kernels.polyline_self_intersects(center, False, INTERSECT_TOL):
        raise SelfIntersecting("sampled centerline crosses itself")

    bw = bend_widths(chi)
    widths = bw[:-1, None] * (1.0 - t) + bw[1:, None] * t
    lengths, speed, _ = arc_lengths(ctrl, samples_per_segment)
    segs = []
    dist = 0.0
    for o in range(N_SEGMENTS):
        L = float(lengths[o])
        dist += L
        chord = ctrl[o, 3] - ctrl[o, 0]
        segs.append(SegmentRecord(
            length=L,
            mean_width=float(np.trapezoid(widths[o] * speed[o], t) / L),
            direction=chord / np.hypot(*chord),
            distance=dist,
            y_center=float(np.trapezoid(samples[o, :, 1] * speed[o], t) / L),
        ))
    return RadiatorLayout(
        descriptors=chi,
        offset=offset,
        control_points=P,
        bend_widths=bw,
        samples=samples,
        sample_widths=widths,
        segments=tuple(segs),
        feed=FeedRecord(chi.l(1), chi.w(1), chi.w(2)),
    )
