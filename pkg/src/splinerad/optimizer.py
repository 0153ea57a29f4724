"""Particle swarm optimizer and the surrogate-assisted (kriging + PSO) design loop.

All particles live in the unit hypercube; a DescriptorBounds maps them to
meters only when a result is reported. Random draws come from a counter
based generator keyed by ``(seed, iteration, particle)``, so a run does not
depend on evaluation order.
"""
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import surrogate as sg

MASK32 = (1 << 32) - 1
LHS_STREAM = MASK32          # iteration slot reserved for the offline design


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 10        # V
    iterations: int = 200       # I
    inertia: float = 0.4        # omega
    c1: float = 2.0
    c2: float = 2.0
    velocity_clamp: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 1 or self.iterations < 0:
            raise ValueError("swarm size must be >= 1 and iterations >= 0")
        if not 0.0 <= self.inertia < 1.0:
            raise ValueError("inertia must lie in [0, 1)")
        if self.c1 < 0 or self.c2 < 0 or not self.velocity_clamp > 0:
            raise ValueError("C1, C2 must be >= 0 and the velocity clamp positive")


@dataclass(frozen=True)
class SbdConfig:
    offline: int = 100          # S0
    reinforcement: int = 200    # S_upd
    infill_best: bool = True
    infill_variance: bool = True
    log_offset: float | None = 1e-3   # kriging target log(phi + offset); None: raw phi
    converge_tol: float = 1e-4
    converge_iters: int = 10
    truth: str = "proxy"        # "proxy" | "imported:<path>"

    def __post_init__(self):
        if self.offline < 2 or self.reinforcement < 0:
            raise ValueError("need S0 >= 2 and S_upd >= 0")
        if self.log_offset is not None and not self.log_offset > 0:
            raise ValueError("log_offset must be positive")

    def to_target(self, phi):
        phi = np.asarray(phi, dtype=float)
        return phi if self.log_offset is None else np.log(phi + self.log_offset)

    def from_target(self, t):
        t = np.asarray(t, dtype=float)
        return t if self.log_offset is None else np.exp(t) - self.log_offset


def time_saving(V, I, s0, s_upd):
    """Fraction of solver time saved versus a plain swarm of ``V x I`` calls."""
    n = V * I
    if n <= 0:
        raise ValueError("V x I must be positive")
    return (n - (s0 + s_upd)) / n


def stream(seed, iteration, particle):
    """Independent generator for one (iteration, particle) draw."""
    key = [int(seed) & MASK32, ((int(iteration) & MASK32) << 32) | (int(particle) & MASK32)]
    return np.random.Generator(np.random.Philox(key=key))


def _value(res):
    return float(res.total) if hasattr(res, "total") else float(res)


def _terms(res):
    return tuple(res.terms) if hasattr(res, "terms") else ()


@dataclass
class Record:
    iteration: int
    particle: int
    phase: str                  # init | pso | offline | infill | verify | surrogate
    u: np.ndarray
    predicted: float = float("nan")
    variance: float = float("nan")
    true: float = float("nan")
    terms: tuple = ()
    wall: float = 0.0


@dataclass
class RunHistory:
    """Every objective call of a run, in order."""

    records: list = field(default_factory=list)
    listeners: list = field(default_factory=list, repr=False)
    termination: str = ""
    _counts: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for r in self.records:
            self._count(r)

    def _count(self, rec):
        if np.isfinite(rec.true):
            self._counts[rec.phase] = self._counts.get(rec.phase, 0) + 1

    def append(self, rec):
        self.records.append(rec)
        self._count(rec)
        for fn in self.listeners:
            fn(rec)

    @property
    def truth_calls(self):
        """True evaluations per phase, in order of first occurrence."""
        return dict(self._counts)

    @property
    def n_truth(self):
        return sum(self._counts.values())

    def best_so_far(self):
        """Running minimum of the true values, one entry per true evaluation."""
        v = np.array([r.true for r in self.records if np.isfinite(r.true)])
        return np.minimum.accumulate(v) if v.size else v

    def best_true(self):
        best = None
        for r in self.records:
            if np.isfinite(r.true) and (best is None or r.true < best.true):
                best = r
        return best


@dataclass
class Swarm:
    x: np.ndarray
    v: np.ndarray
    f: np.ndarray
    pbest_x: np.ndarray
    pbest_f: np.ndarray
    iteration: int = 0

    @property
    def gbest(self):
        k = int(np.argmin(self.pbest_f))
        return k, self.pbest_x[k], float(self.pbest_f[k])

    @property
    def spread(self):
        return float(np.max(self.x.max(axis=0) - self.x.min(axis=0)))


def init_swarm(cfg, dims, positions=None):
    """Uniform random (or given) positions, velocities uniform within the clamp."""
    V = cfg.swarm_size
    x = np.empty((V, dims))
    v = np.empty((V, dims))
    for p in range(V):
        g = stream(cfg.seed, 0, p)
        x[p] = g.random(dims)
        v[p] = (2.0 * g.random(dims) - 1.0) * cfg.velocity_clamp
    if positions is not None:
        x = np.array(positions, dtype=float)
    inf = np.full(V, np.inf)
    return Swarm(x, v, inf.copy(), x.copy(), inf.copy(), 0)


def move(swarm, cfg):
    """Velocity and position update of step ``swarm.iteration + 1`` (no evaluation)."""
    it = swarm.iteration + 1
    V, d = swarm.x.shape
    _, g, _ = swarm.gbest
    x, v = swarm.x.copy(), swarm.v.copy()
    for p in range(V):
        rng = stream(cfg.seed, it, p)
        r1, r2 = rng.random(d), rng.random(d)
        v[p] = (cfg.inertia * v[p] + cfg.c1 * r1 * (swarm.pbest_x[p] - x[p])
                + cfg.c2 * r2 * (g - x[p]))
    np.clip(v, -cfg.velocity_clamp, cfg.velocity_clamp, out=v)
    x = x + v
    lo, hi = x < 0.0, x > 1.0
    x[lo] = -x[lo]
    x[hi] = 2.0 - x[hi]
    v[lo | hi] = -v[lo | hi]
    np.clip(x, 0.0, 1.0, out=x)
    return replace(swarm, x=x, v=v, iteration=it)


def absorb(swarm, values):
    """Record new particle values; personal bests move only on strict improvement."""
    f = np.asarray(values, dtype=float)
    better = f < swarm.pbest_f
    px, pf = swarm.pbest_x.copy(), swarm.pbest_f.copy()
    px[better] = swarm.x[better]
    pf[better] = f[better]
    return replace(swarm, f=f, pbest_x=px, pbest_f=pf)


def pso_step(swarm, objective, cfg):
    """One move-and-evaluate step of the inertia-weight swarm."""
    s = move(swarm, cfg)
    return absorb(s, [_value(objective(xp)) for xp in s.x])


def pso_optimize(objective, cfg, dims=None, bounds=None, max_calls=None, history=None):
    """Plain swarm: ``V`` initial plus ``V x I`` objective calls.

    Parameters
    ----------
    objective : callable
        Unit-cube point -> float or CostBreakdown.
    dims : int, optional
        Needed when ``bounds`` is not given.
    max_calls : int, optional
        Hard cap on objective calls; the last wave is truncated.

    Returns
    -------
    best, best_value, history
        ``best`` is a DescriptorVector when bounds are given, else a unit point.
    """
    d = dims if bounds is None else bounds.lo.size
    hist = history if history is not None else RunHistory()
    cap = np.inf if max_calls is None else max_calls
    swarm = init_swarm(cfg, d)

    def wave(s, phase):
        vals = []
        for p, xp in enumerate(s.x):
            if hist.n_truth >= cap:
                vals.append(np.inf)
                continue
            t0 = time.perf_counter()
            res = objective(xp)
            val = _value(res)
            hist.append(Record(s.iteration, p, phase, xp.copy(), true=val, terms=_terms(res),
                               wall=time.perf_counter() - t0))
            vals.append(val)
        return absorb(s, vals)

    swarm = wave(swarm, "init")
    hist.termination = "iterations"
    for _ in range(cfg.iterations):
        if hist.n_truth >= cap:
            hist.termination = "budget"
            break
        swarm = wave(move(swarm, cfg), "pso")
    best = hist.best_true()
    u = best.u
    return (bounds.from_unit(u) if bounds is not None else u), best.true, hist


def sbd_optimize(truth, sbd, cfg, dims=None, bounds=None, history=None, model_sink=None):
    """Kriging-assisted swarm with a budget of true evaluations.

    Offline, ``S0`` Latin hypercube points are evaluated and a kriging model
    of the cost is fitted; the swarm starts from the ``V`` best of them.
    Each iteration the swarm moves on the surrogate mean; then the particle
    with the lowest predicted cost and the one with the largest predicted
    variance are evaluated for real (until ``S_upd`` runs out), the model is
    refit after each, and those particles carry their true values. Surrogate
    personal bests are re-predicted after every refit. The reported optimum
    is always a truly evaluated point; a final true call verifies the swarm's
    guide if it was never evaluated.

    Returns
    -------
    best, best_value, model, history
    """
    d = dims if bounds is None else bounds.lo.size
    hist = history if history is not None else RunHistory()
    V = cfg.swarm_size

    def call(u, it, p, phase, pred=(np.nan, np.nan)):
        t0 = time.perf_counter()
        res = truth(u)
        val = _value(res)
        hist.append(Record(it, p, phase, np.array(u, dtype=float), pred[0], pred[1], val,
                           _terms(res), time.perf_counter() - t0))
        return val

    X = sg.lhs_sample(sbd.offline, d, _lhs_seed(cfg.seed))
    Y = np.array([call(x, 0, i, "offline") for i, x in enumerate(X)])
    T = sbd.to_target(Y)
    model = sg.fit(sg.TrainingSet(X, T))

    elite = np.argsort(Y, kind="stable")[:V]
    start = np.vstack([X[elite], sg.lhs_sample(V, d, _lhs_seed(cfg.seed) + 1)])[:V]
    swarm = init_swarm(cfg, d, positions=start)
    known = np.zeros(V, dtype=bool)              # pbest value is a true evaluation
    f0 = np.full(V, np.inf)
    f0[:min(V, elite.size)] = T[elite]
    known[:min(V, elite.size)] = True
    if elite.size < V:
        f0[elite.size:] = model.predict(swarm.x[elite.size:])[0]
    swarm = absorb(swarm, f0)

    budget = sbd.reinforcement
    used = 0
    still = 0
    hist.termination = "iterations"
    for _ in range(cfg.iterations):
        swarm = move(swarm, cfg)
        mean, var = model.predict(swarm.x)
        for p in range(V):
            hist.append(Record(swarm.iteration, p, "surrogate", swarm.x[p].copy(),
                               float(sbd.from_target(mean[p])), float(var[p])))
        vals = mean.copy()
        is_true = np.zeros(V, dtype=bool)

        picks = []
        if sbd.infill_best:
            picks.append(int(np.argmin(mean)))
        if sbd.infill_variance:
            order = np.argsort(-var, kind="stable")
            picks += [int(k) for k in order if k not in picks][:1]
        for p in picks:
            if used >= budget:
                break
            if np.min(np.sum((model.train.inputs - swarm.x[p]) ** 2, axis=1)) < sg.MIN_SEPARATION**2:
                continue
            pred = (float(sbd.from_target(mean[p])), float(var[p]))
            y = sbd.to_target(call(swarm.x[p], swarm.iteration, p, "infill", pred))
            used += 1
            model = sg.update(model, swarm.x[p], float(y))
            if model_sink is not None:
                model_sink(model)
            vals[p] = y
            is_true[p] = True

        if any(is_true):
            # correct surrogate-valued entries with the refit model
            others = ~is_true
            vals[others] = model.predict(swarm.x[others])[0]
            stale = ~known
            if stale.any():
                swarm.pbest_f[stale] = model.predict(swarm.pbest_x[stale])[0]
        better = vals < swarm.pbest_f
        known = np.where(better, is_true, known)
        swarm = absorb(swarm, vals)

        still = still + 1 if swarm.spread < sbd.converge_tol else 0
        if used >= budget and still >= sbd.converge_iters:
            hist.termination = "converged"
            break
    else:
        if used >= budget:
            hist.termination = "budget"

    k, g, _ = swarm.gbest
    if not known[k]:
        seen = np.min(np.sum((model.train.inputs - g) ** 2, axis=1)) < sg.MIN_SEPARATION**2
        if not seen:
            mu, v = model.predict(g)
            call(g, swarm.iteration, k, "verify", (float(sbd.from_target(mu)), v))
    best = hist.best_true()
    u = best.u
    return (bounds.from_unit(u) if bounds is not None else u), best.true, model, hist


def _lhs_seed(seed):
    return (int(seed) & MASK32) | (LHS_STREAM << 32)
