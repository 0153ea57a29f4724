"""Figures of merit extracted from a gain cut and a band response."""
from dataclasses import dataclass

import numpy as np

from .errors import MetricError, NoCrossing, UndefinedRatio

SLL_FLOOR_DB = -80.0
PR_CAP_DB = 60.0
HALF_POWER_DB = 10.0 * np.log10(0.5)     # -3.0103 dB


def _peak(theta, g):
    """Discrete peak index and its parabolic-interpolated (angle, level)."""
    k = int(np.argmax(g))
    if 0 < k < g.size - 1:
        a, b, c = g[k - 1], g[k], g[k + 1]
        den = a - 2.0 * b + c
        if den < 0:
            p = 0.5 * (a - c) / den
            step = theta[k + 1] - theta[k]
            return k, theta[k] + p * step, b - 0.25 * (a - c) * p
    return k, theta[k], g[k]


def extract_bdd(theta, gain):
    """Beam direction deviation ``|theta_max|`` in degrees."""
    _, t, _ = _peak(np.asarray(theta, float), np.asarray(gain, float))
    return abs(float(t))


def extract_hpbw(theta, gain):
    """Width between the half-power crossings adjacent to the peak, in degrees.

    Raises
    ------
    NoCrossing
        If one side of the peak never falls to half power inside the cut.
    """
    theta = np.asarray(theta, float)
    g = np.asarray(gain, float)
    k, _, top = _peak(theta, g)
    level = top + HALF_POWER_DB
    p = 10.0 ** ((g - top) / 10.0)

    def crossing(idx):
        # interpolate in linear power, which is far smoother than dB there
        prev = k
        for j in idx:
            if g[j] <= level:
                return theta[prev] + (0.5 - p[prev]) * (theta[j] - theta[prev]) / (p[j] - p[prev])
            prev = j
        raise NoCrossing("pattern does not fall to half power on one side of its peak")

    right = crossing(range(k + 1, g.size))
    left = crossing(range(k - 1, -1, -1))
    return float(right - left)


def main_lobe(gain):
    """Index range ``[lo, hi]`` of the main lobe, bounded by the first local minima."""
    g = np.asarray(gain, float)
    k = int(np.argmax(g))
    hi = k
    while hi + 1 < g.size and g[hi + 1] <= g[hi]:
        hi += 1
    lo = k
    while lo - 1 >= 0 and g[lo - 1] <= g[lo]:
        lo -= 1
    return lo, hi


def extract_sll(theta, gain, floor_db=SLL_FLOOR_DB):
    """Highest level outside the main lobe relative to the peak, in dB.

    Returns ``floor_db`` when the main lobe fills the whole cut.
    """
    g = np.asarray(gain, float)
    lo, hi = main_lobe(g)
    outside = np.concatenate([g[:lo], g[hi + 1:]])
    if outside.size == 0:
        return floor_db
    _, _, top = _peak(np.asarray(theta, float), g)
    return float(max(outside.max() - top, floor_db))


def extract_pr(ex, ey, cap_db=PR_CAP_DB):
    """Polarization ratio ``20 log10 |Ex / Ey|`` with an upper cap.

    Raises
    ------
    UndefinedRatio
        If both components vanish.
    """
    ax, ay = abs(ex), abs(ey)
    if ax == 0 and ay == 0:
        raise UndefinedRatio("both broadside field components are zero")
    if ay < 1e-12 * ax:
        return float(cap_db)
    return float(min(20.0 * np.log10(ax / ay), cap_db))


@dataclass(frozen=True)
class BandMetrics:
    """Per-frequency figures of merit and their band-worst values."""

    frequencies: np.ndarray
    s11_db: np.ndarray
    sll_db: np.ndarray
    hpbw_deg: np.ndarray
    bdd_deg: np.ndarray
    pr_db: np.ndarray

    def worst(self, name):
        """Band-worst value of a metric and the frequency where it occurs."""
        v = getattr(self, name)
        k = int(np.argmin(v)) if name == "pr_db" else int(np.argmax(v))
        return float(v[k]), float(self.frequencies[k])

    @property
    def aggregates(self):
        return {n: self.worst(n)[0] for n in ("s11_db", "sll_db", "hpbw_deg", "bdd_deg", "pr_db")}

    def table(self):
        """Rows ``(f_Hz, s11_dB, sll_dB, hpbw_deg, bdd_deg, pr_dB)``."""
        return np.column_stack([self.frequencies, self.s11_db, self.sll_db,
                                self.hpbw_deg, self.bdd_deg, self.pr_db])


def metrics_over_band(resp, floor_db=SLL_FLOOR_DB, cap_db=PR_CAP_DB):
    """Apply all extractors at every frequency of a BandResponse.

    Raises
    ------
    MetricError
        Wrapping the extractor error with the offending frequency.
    """
    F = resp.frequencies.size
    out = np.empty((4, F))
    for q in range(F):
        f = float(resp.frequencies[q])
        try:
            g = resp.gain[q]
            out[0, q] = extract_sll(resp.theta, g, floor_db)
            out[1, q] = extract_hpbw(resp.theta, g)
            out[2, q] = extract_bdd(resp.theta, g)
            out[3, q] = extract_pr(resp.broadside[q, 0], resp.broadside[q, 1], cap_db)
        except (NoCrossing, UndefinedRatio) as exc:
            raise MetricError(f, exc) from exc
    return BandMetrics(resp.frequencies.copy(), resp.s11_db, out[0], out[1], out[2], out[3])


def compliance_rows(bm, req):
    """Per-frequency pass flags against a Requirements record."""
    return np.column_stack([
        bm.s11_db <= req.s11_th, bm.sll_db <= req.sll_th, bm.hpbw_deg <= req.hpbw_th,
        bm.bdd_deg <= req.bdd_th, bm.pr_db >= req.pr_th,
    ])
