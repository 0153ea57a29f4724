"""Latin hypercube designs and an ordinary-kriging cost predictor."""
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from . import _kernels
from .errors import DuplicateInput, IoError, ParseError, SingularCorrelation

MIN_SEPARATION = 1e-10
NUGGET_START = 1e-10
NUGGET_CEILING = 1e-6
THETA_LO, THETA_HI = 1e-2, 1e2
THETA_GRID = np.logspace(-2, 2, 7)


def lhs_sample(n, dims, seed):
    """``n`` points in ``[0, 1)^dims`` with one point per bin ``[i/n, (i+1)/n)`` in every coordinate."""
    if n < 1 or dims < 1:
        raise ValueError("n and dims must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    edges = np.arange(n + 1) / n
    perm = np.argsort(rng.random((dims, n)), axis=1).T          # (n, dims) bin index
    u = rng.random((n, dims))
    x = edges[perm] + u * (edges[perm + 1] - edges[perm])
    # rounding may land exactly on the upper edge; pull it back inside the bin
    top = np.nextafter(edges[perm + 1], -np.inf)
    return np.minimum(x, top)


@dataclass(frozen=True)
class TrainingSet:
    """Normalized inputs, true costs and a provenance tag per sample."""

    inputs: np.ndarray
    outputs: np.ndarray
    tags: tuple = ()

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.inputs, dtype=float)).copy()
        y = np.asarray(self.outputs, dtype=float).ravel().copy()
        if x.shape[0] != y.size:
            raise ValueError("inputs and outputs differ in length")
        tags = tuple(self.tags) or ("offline",) * y.size
        if len(tags) != y.size:
            raise ValueError("one provenance tag per sample is required")
        if x.shape[0] > 1:
            d2 = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
            d2[np.diag_indices_from(d2)] = np.inf
            if np.sqrt(d2.min()) < MIN_SEPARATION:
                i, j = np.unravel_index(np.argmin(d2), d2.shape)
                raise DuplicateInput(f"training inputs {i} and {j} coincide")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "outputs", y)
        object.__setattr__(self, "tags", tags)

    def __len__(self):
        return self.outputs.size

    def add(self, x, y, tag="reinforcement"):
        x = np.asarray(x, dtype=float).reshape(1, -1)
        d = np.sqrt(np.min(np.sum((self.inputs - x) ** 2, axis=1)))
        if d < MIN_SEPARATION:
            raise DuplicateInput(f"point is {d:.3g} from an existing training input")
        return TrainingSet(np.vstack([self.inputs, x]), np.append(self.outputs, y),
                           self.tags + (tag,))


@dataclass(frozen=True)
class _Factor:
    chol: np.ndarray
    nugget: float
    mu: float
    sigma2: float
    alpha: np.ndarray      # R^-1 (y - mu 1)
    rinv1: np.ndarray      # R^-1 1
    loglik: float


def _factor(x, y, theta, nugget=None):
    """Cholesky of the correlation matrix with adaptive nugget, or None."""
    n = y.size
    R = _kernels.gauss_corr(x, x, theta)
    nug = NUGGET_START if nugget is None else nugget
    while True:
        try:
            L = cholesky(R + nug * np.eye(n), lower=True, check_finite=False)
            break
        except LinAlgError:
            if nugget is not None or nug >= NUGGET_CEILING:
                return None
            nug *= 10.0
    one = np.ones(n)
    rinv1 = cho_solve((L, True), one, check_finite=False)
    rinvy = cho_solve((L, True), y, check_finite=False)
    mu = float(one @ rinvy / (one @ rinv1))
    alpha = rinvy - mu * rinv1
    sigma2 = max(float((y - mu) @ alpha) / n, 1e-300)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    ll = -0.5 * n * np.log(sigma2) - 0.5 * logdet
    return _Factor(L, nug, mu, sigma2, alpha, rinv1, float(ll))


def _neg_loglik_grad(log_theta, x, y):
    theta = 10.0 ** log_theta
    fac = _factor(x, y, theta)
    if fac is None:
        return 1e30, np.zeros_like(log_theta)
    L = fac.chol
    n = y.size
    rinv = cho_solve((L, True), np.eye(n), check_finite=False)
    R = L @ L.T - fac.nugget * np.eye(n)
    W = (rinv - np.outer(fac.alpha, fac.alpha) / fac.sigma2) * R
    w1 = W.sum(axis=1)
    # d loglik / d theta_k = 1/2 sum_ij W_ij (x_ik - x_jk)^2
    g = (x**2 * w1[:, None]).sum(axis=0) - np.einsum("ik,ij,jk->k", x, W, x)
    return -fac.loglik, -g * theta * np.log(10.0)


def _mle_theta(x, y):
    """Isotropic grid, one coordinate pass over the grid, then bounded gradient refinement."""
    d = x.shape[1]

    def ll(theta):
        f = _factor(x, y, theta)
        return -np.inf if f is None else f.loglik

    scores = [ll(np.full(d, t)) for t in THETA_GRID]
    theta = np.full(d, THETA_GRID[int(np.argmax(scores))])
    best = max(scores)
    for k in range(d):
        for t in THETA_GRID:
            if t == theta[k]:
                continue
            trial = theta.copy()
            trial[k] = t
            s = ll(trial)
            if s > best:
                best, theta = s, trial
    lo, hi = np.log10(THETA_LO), np.log10(THETA_HI)
    r = minimize(_neg_loglik_grad, np.log10(theta), args=(x, y), jac=True,
                 method="L-BFGS-B", bounds=[(lo, hi)] * d, options={"maxiter": 100})
    if np.isfinite(r.fun) and -r.fun > best:
        theta = 10.0 ** np.clip(r.x, lo, hi)
    return theta


@dataclass(frozen=True)
class KrigingModel:
    theta: np.ndarray
    nugget: float
    mu: float
    sigma2: float
    train: TrainingSet
    _fac: _Factor

    def predict(self, x):
        """Mean and variance at normalized point(s) ``x`` (shape ``(d,)`` or ``(m, d)``)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        r = _kernels.gauss_corr(X, self.train.inputs, self.theta)       # (m, n)
        mean = self.mu + r @ self._fac.alpha
        v = solve_triangular(self._fac.chol, r.T, lower=True, check_finite=False)
        rr = np.sum(v * v, axis=0)
        u = 1.0 - r @ self._fac.rinv1
        one_r1 = float(np.sum(self._fac.rinv1))
        var = np.maximum(self.sigma2 * (1.0 - rr + u * u / one_r1), 0.0)
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def factor_hash(self):
        return hashlib.sha256(np.ascontiguousarray(self._fac.chol).tobytes()).hexdigest()

    def to_dict(self):
        return {
            "theta": self.theta.tolist(),
            "nugget": self.nugget,
            "mu": self.mu,
            "sigma2": self.sigma2,
            "inputs": self.train.inputs.tolist(),
            "outputs": self.train.outputs.tolist(),
            "tags": list(self.train.tags),
            "factor_sha256": self.factor_hash(),
        }


def _assemble(train, theta, nugget=None):
    fac = _factor(train.inputs, train.outputs, theta, nugget)
    if fac is None:
        raise SingularCorrelation(
            f"correlation matrix not positive definite at nugget {NUGGET_CEILING:g}")
    return KrigingModel(np.asarray(theta, dtype=float), fac.nugget, fac.mu, fac.sigma2, train, fac)


def fit(train):
    """Maximum-likelihood ordinary kriging on ``train``.

    Raises
    ------
    SingularCorrelation
        If factorization fails even with the largest nugget.
    """
    if len(train) < 2:
        raise ValueError("kriging needs at least 2 samples")
    theta = _mle_theta(train.inputs, train.outputs)
    return _assemble(train, theta)


def update(model, x, y, tag="reinforcement"):
    """New model refit on the training set extended by ``(x, y)``.

    Raises
    ------
    DuplicateInput
        If ``x`` coincides with an existing input.
    """
    return fit(model.train.add(x, y, tag))


def save_model(model, path):
    path = Path(path)
    try:
        path.write_text(json.dumps(model.to_dict(), indent=1), encoding="utf-8")
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from exc


def load_model(path):
    """Rebuild a checkpointed model and check its factorization hash."""
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None
    train = TrainingSet(np.array(d["inputs"]), np.array(d["outputs"]), tuple(d["tags"]))
    model = _assemble(train, np.array(d["theta"]), float(d["nugget"]))
    if model.factor_hash() != d["factor_sha256"]:
        raise ParseError(path, 0, "factorization hash mismatch")
    return model


def predict(model, x):
    """Ordinary-kriging mean and variance at ``x``; see :meth:`KrigingModel.predict`."""
    return model.predict(x)
