"""Ramp-penalized five-term design cost over the frequency grid."""
from dataclasses import dataclass

import numpy as np

from .errors import MetricError, SelfIntersecting, ZeroThreshold

PENALTY = 1e3
TERMS = ("s11", "sll", "hpbw", "bdd", "pr")


@dataclass(frozen=True)
class Requirements:
    f_min: float = 76e9
    f_max: float = 78e9
    s11_th: float = -10.0     # dB
    sll_th: float = -15.0     # dB
    hpbw_th: float = 18.0     # degrees
    bdd_th: float = 2.0       # degrees
    pr_th: float = 20.0       # dB
    q: int = 41

    def __post_init__(self):
        if not self.f_min < self.f_max:
            raise ValueError("f_min must be below f_max")
        if self.q < 2:
            raise ValueError("Q must be >= 2")
        th = (self.s11_th, self.sll_th, self.hpbw_th, self.bdd_th, self.pr_th)
        if not all(np.isfinite(th)):
            raise ValueError("thresholds must be finite")

    def grid(self):
        from .proxy import FrequencyGrid
        return FrequencyGrid(self.f_min, self.f_max, self.q)


@dataclass(frozen=True)
class Weights:
    s11: float = 1.0
    sll: float = 1.0
    hpbw: float = 1.0
    bdd: float = 1.0
    pr: float = 1.0

    def __post_init__(self):
        if any(w < 0 for w in self.as_tuple()):
            raise ValueError("weights must be non-negative")

    def as_tuple(self):
        return (self.s11, self.sll, self.hpbw, self.bdd, self.pr)


def ramp(xi):
    return np.maximum(xi, 0.0)


def term_cost(values, threshold, sense="upper"):
    """Mean ramp-normalized violation of a per-frequency metric.

    ``upper``: values must stay at or below ``threshold``, normalized by
    ``|threshold|``. ``lower``: values must reach ``threshold``, normalized
    by ``threshold`` itself.
    """
    if threshold == 0:
        raise ZeroThreshold("threshold must be nonzero")
    v = np.asarray(values, dtype=float)
    if sense == "upper":
        x = (v - threshold) / abs(threshold)
    elif sense == "lower":
        x = (threshold - v) / threshold
    else:
        raise ValueError(f"unknown sense {sense!r}")
    return float(np.mean(ramp(x)))


@dataclass(frozen=True)
class CostBreakdown:
    total: float
    terms: tuple          # unweighted (s11, sll, hpbw, bdd, pr)
    feasible: bool = True
    reason: str = ""

    def as_dict(self):
        d = {"phi": self.total}
        d.update({f"phi_{n}": t for n, t in zip(TERMS, self.terms)})
        return d


def total_cost(bm, req=None, w=None):
    """Weighted sum of the five terms, returned with its breakdown."""
    req = req or Requirements()
    w = w or Weights()
    terms = (
        term_cost(bm.s11_db, req.s11_th, "upper"),
        term_cost(bm.sll_db, req.sll_th, "upper"),
        term_cost(bm.hpbw_deg, req.hpbw_th, "upper"),
        term_cost(bm.bdd_deg, req.bdd_th, "upper"),
        term_cost(bm.pr_db, req.pr_th, "lower"),
    )
    total = float(sum(a * t for a, t in zip(w.as_tuple(), terms)))
    return CostBreakdown(total, terms)


def penalty(reason, value=PENALTY):
    nan = float("nan")
    return CostBreakdown(float(value), (nan,) * 5, feasible=False, reason=reason)


class ProxyObjective:
    """Descriptor -> cost through the forward proxy; geometry or metric failures score ``penalty``.

    Calls are pure, so instances may be shared between threads.
    """

    def __init__(self, bounds, req=None, weights=None, proxy=None, penalty_value=PENALTY):
        from .proxy import ProxyConfig
        self.bounds = bounds
        self.req = req or Requirements()
        self.weights = weights or Weights()
        self.proxy = proxy or ProxyConfig()
        self.grid = self.req.grid()
        self.penalty_value = penalty_value

    def breakdown(self, chi):
        from .metrics import metrics_over_band
        from .proxy import evaluate
        try:
            resp = evaluate(chi, self.proxy, self.grid)
            bm = metrics_over_band(resp, cap_db=self.proxy.pr_cap_db)
        except SelfIntersecting as exc:
            return penalty(f"SelfIntersecting: {exc}", self.penalty_value)
        except MetricError as exc:
            return penalty(f"MetricError: {exc}", self.penalty_value)
        return total_cost(bm, self.req, self.weights)

    def unit(self, u):
        """Cost breakdown at a point of the normalized descriptor cube."""
        return self.breakdown(self.bounds.from_unit(u))

    def __call__(self, u):
        return self.unit(u).total
