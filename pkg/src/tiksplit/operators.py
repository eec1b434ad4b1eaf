"""Operator algebra: monotone, cocoercive, proximable and linear operators.

Operators are thin records around callables.  Resolvents and proxes are
rules (gamma, x) -> point; they are trusted to be exact, no subproblem is
iterated internally.  A catalog of standard instances (soft thresholding,
box projections, quadratic terms, normal cones) covers the test problems
and the imaging pipeline.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import norm


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class LinearOperator:
    """Bounded linear map with an explicit adjoint.

    norm_bound, when set, is a trusted upper bound on the operator norm and
    is preferred over power-iteration estimates in step-size checks.
    """

    apply: object
    adjoint: object
    in_dim: int
    out_dim: int
    norm_bound: float = None


@dataclass(frozen=True)
class MonotoneOperator:
    """Maximally monotone operator, represented by its resolvent rule.

    resolvent(gamma, x) must return the (unique) point of (Id + gamma*A)^-1
    applied to x, for any gamma > 0.
    """

    resolvent: object


@dataclass(frozen=True)
class CocoerciveOperator:
    """Single-valued operator T with <x - y, Tx - Ty> >= beta * ||Tx - Ty||^2.

    beta is the cocoercivity constant (equivalently T is 1/beta-Lipschitz).
    beta = inf encodes the zero operator, accepted as a degenerate slot.
    """

    apply: object
    beta: float

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError("cocoercivity constant must be > 0, got %g" % self.beta)


@dataclass(frozen=True)
class Proximable:
    """Convex function known through its prox rule (gamma, x) -> prox_{gamma f}(x).

    value(x), when present, evaluates f itself and enables objective logging.
    """

    prox: object
    value: object = None


# ---------------------------------------------------------------------------
# elementary rules

def soft_threshold(x, thresh):
    """Shrink toward zero: prox of thresh * ||.||_1."""
    if thresh < 0:
        raise ValueError("threshold must be >= 0, got %g" % thresh)
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def prox_scaled_identity(kappa, gamma, x):
    """Prox of (kappa/2)*||x||^2, i.e. x / (1 + gamma*kappa)."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0, got %g" % kappa)
    return np.asarray(x, dtype=float) / (1.0 + gamma * kappa)


def prox_indicator_box(lo, hi, x):
    """Projection onto the box [lo, hi] (componentwise bounds allowed)."""
    if np.any(np.asarray(lo) > np.asarray(hi)):
        raise ValueError("box bounds must satisfy lo <= hi")
    return np.clip(np.asarray(x, dtype=float), lo, hi)


def reflected_resolvent(op, gamma):
    """Return the map x -> 2*J_{gamma A}(x) - x for a MonotoneOperator."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0, got %g" % gamma)

    def apply(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * op.resolvent(gamma, x) - x

    return apply


def conjugate_prox(f, sigma, x):
    """Prox of sigma * f^* via the Moreau identity.

    prox_{sigma f*}(x) = x - sigma * prox_{f/sigma}(x/sigma); only the prox
    of f itself is needed.
    """
    if not sigma > 0:
        raise ValueError("sigma must be > 0, got %g" % sigma)
    x = np.asarray(x, dtype=float)
    return x - sigma * f.prox(1.0 / sigma, x / sigma)


def inverse_resolvent(op, sigma, x):
    """Resolvent of the inverse operator: J_{sigma A^-1}(x).

    Uses J_{sigma A^-1}(x) = x - sigma * J_{A/sigma}(x/sigma), the operator
    form of the Moreau identity, so only the resolvent of A is needed.
    """
    if not sigma > 0:
        raise ValueError("sigma must be > 0, got %g" % sigma)
    x = np.asarray(x, dtype=float)
    return x - sigma * op.resolvent(1.0 / sigma, x / sigma)


def least_squares_gradient(L, b, x):
    """Gradient of 0.5*||Lx - b||^2, namely L^T (Lx - b)."""
    return L.adjoint(L.apply(np.asarray(x, dtype=float)) - b)


# ---------------------------------------------------------------------------
# catalog: linear operators

def identity(dim):
    return LinearOperator(
        apply=lambda x: np.asarray(x, dtype=float),
        adjoint=lambda y: np.asarray(y, dtype=float),
        in_dim=dim, out_dim=dim, norm_bound=1.0,
    )


def dense_operator(M, norm_bound=None):
    """Wrap a dense 2-D array as a LinearOperator."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("dense operator needs a 2-D array, got shape %s" % (M.shape,))
    return LinearOperator(
        apply=lambda x: M @ np.asarray(x, dtype=float),
        adjoint=lambda y: M.T @ np.asarray(y, dtype=float),
        in_dim=M.shape[1], out_dim=M.shape[0], norm_bound=norm_bound,
    )


def read_dense_matrix(path):
    """Read the plain-text matrix format: 'rows cols' then row-major entries."""
    with open(path, "r") as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError("matrix file %s: missing 'rows cols' header" % path)
    rows, cols = int(tokens[0]), int(tokens[1])
    if rows < 1 or cols < 1:
        raise ValueError("matrix file %s: invalid shape %dx%d" % (path, rows, cols))
    entries = [float(t) for t in tokens[2:]]
    if len(entries) != rows * cols:
        raise ValueError(
            "matrix file %s: expected %d entries, found %d"
            % (path, rows * cols, len(entries))
        )
    return np.array(entries, dtype=float).reshape(rows, cols)


def compose(outer, inner):
    """Composition outer(inner(x)) with the matching adjoint."""
    if inner.out_dim != outer.in_dim:
        raise ValueError(
            "cannot compose: inner out_dim %d != outer in_dim %d"
            % (inner.out_dim, outer.in_dim)
        )
    nb = None
    if inner.norm_bound is not None and outer.norm_bound is not None:
        nb = inner.norm_bound * outer.norm_bound
    return LinearOperator(
        apply=lambda x: outer.apply(inner.apply(x)),
        adjoint=lambda y: inner.adjoint(outer.adjoint(y)),
        in_dim=inner.in_dim, out_dim=outer.out_dim, norm_bound=nb,
    )


# ---------------------------------------------------------------------------
# catalog: monotone operators

def zero_monotone():
    """The zero operator; its resolvent is the identity."""
    return MonotoneOperator(resolvent=lambda gamma, x: np.asarray(x, dtype=float))


def scaled_identity(kappa):
    """A = kappa * Id (kappa >= 0); resolvent shrinks by 1/(1 + gamma*kappa)."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0, got %g" % kappa)
    return MonotoneOperator(
        resolvent=lambda gamma, x: prox_scaled_identity(kappa, gamma, x)
    )


def normal_cone(projection):
    """Normal cone of a closed convex set given through its projection map.

    The resolvent of a normal cone is the projection, for every gamma > 0.
    """
    return MonotoneOperator(resolvent=lambda gamma, x: projection(np.asarray(x, dtype=float)))


def subdifferential(f):
    """Subdifferential of a Proximable; the resolvent is the prox itself."""
    return MonotoneOperator(resolvent=f.prox)


# ---------------------------------------------------------------------------
# catalog: cocoercive operators

def zero_cocoercive():
    """Zero map in a cocoercive slot; beta = inf encodes the degenerate case."""
    return CocoerciveOperator(apply=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                              beta=math.inf)


def quadratic_distance_gradient(b, weight=1.0):
    """Gradient weight*(x - b) of (weight/2)*||x - b||^2; beta = 1/weight."""
    if not weight > 0:
        raise ValueError("weight must be > 0, got %g" % weight)
    b = np.asarray(b, dtype=float)
    return CocoerciveOperator(apply=lambda x: weight * (np.asarray(x, dtype=float) - b),
                              beta=1.0 / weight)


def least_squares_gradient_operator(L, b, scale=1.0, iters=100, seed=42):
    """Gradient scale * L^T(Lx - b) of (scale/2)*||Lx - b||^2.

    Cocoercive with beta = 1/(scale * ||L||^2); the norm uses the trusted
    bound when the operator carries one, otherwise a safety-inflated
    power-iteration estimate.
    """
    if not scale > 0:
        raise ValueError("scale must be > 0, got %g" % scale)
    b = np.asarray(b, dtype=float)
    s = operator_norm_bound(L, iters=iters, seed=seed)
    if s == 0.0:
        raise ValueError("operator norm bound is 0; gradient has no curvature scale")
    return CocoerciveOperator(
        apply=lambda x: scale * least_squares_gradient(L, b, x),
        beta=1.0 / (scale * s * s),
    )


# ---------------------------------------------------------------------------
# catalog: proximable functions

def l1_norm(lam):
    """f(x) = lam * ||x||_1."""
    if lam < 0:
        raise ValueError("lam must be >= 0, got %g" % lam)
    return Proximable(
        prox=lambda gamma, x: soft_threshold(x, gamma * lam),
        value=lambda x: lam * float(np.sum(np.abs(x))),
    )


def zero_function():
    return Proximable(prox=lambda gamma, x: np.asarray(x, dtype=float),
                      value=lambda x: 0.0)


def box_indicator(lo, hi):
    """Indicator of the box [lo, hi]."""
    return Proximable(
        prox=lambda gamma, x: prox_indicator_box(lo, hi, x),
        value=lambda x: 0.0 if np.all((np.asarray(x) >= np.asarray(lo) - 1e-12)
                                      & (np.asarray(x) <= np.asarray(hi) + 1e-12))
        else math.inf,
    )


def squared_error(b, weight=1.0):
    """f(x) = weight * ||x - b||^2 (no 1/2 factor); closed-form prox."""
    if not weight > 0:
        raise ValueError("weight must be > 0, got %g" % weight)
    b = np.asarray(b, dtype=float)

    def prox(gamma, x):
        c = 2.0 * gamma * weight
        return (np.asarray(x, dtype=float) + c * b) / (1.0 + c)

    return Proximable(
        prox=prox,
        value=lambda x: weight * float(np.sum((np.asarray(x, dtype=float) - b) ** 2)),
    )


def point_indicator(c):
    """Indicator of the singleton {c}; the prox is the constant map."""
    c = np.asarray(c, dtype=float)
    return Proximable(
        prox=lambda gamma, x: c.copy(),
        value=lambda x: 0.0 if np.allclose(x, c, atol=1e-9) else math.inf,
    )


def affine_indicator(M, c):
    """Indicator of {x : Mx = c}; the prox is the affine projection."""
    M = np.asarray(M, dtype=float)
    c = np.asarray(c, dtype=float)
    pinv = np.linalg.pinv(M @ M.T)

    def prox(gamma, x):
        x = np.asarray(x, dtype=float)
        return x - M.T @ (pinv @ (M @ x - c))

    return Proximable(
        prox=prox,
        value=lambda x: 0.0 if np.allclose(M @ np.asarray(x, dtype=float), c, atol=1e-9)
        else math.inf,
    )


# ---------------------------------------------------------------------------
# norms and sampling checks

def estimate_operator_norm(L, iters=100, seed=42):
    """Power iteration on L^T L; returns a never-overestimating norm value.

    The Rayleigh-quotient estimate ||L x|| with ||x|| = 1 is bounded by the
    true operator norm, so callers multiply by a small safety factor before
    using it in step-size conditions.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(L.in_dim)
    nx = norm(x)
    if nx == 0.0:
        return 0.0
    x = x / nx
    for _ in range(iters):
        y = L.adjoint(L.apply(x))
        ny = norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
    return norm(L.apply(x))


def operator_norm_bound(L, iters=100, seed=42):
    """Trusted norm bound if the operator has one, else 1.01x the estimate."""
    if L.norm_bound is not None:
        return float(L.norm_bound)
    return 1.01 * estimate_operator_norm(L, iters=iters, seed=seed)


def _sample_pairs(dim, pairs, seed, scale=10.0):
    rng = np.random.default_rng(seed)
    for _ in range(pairs):
        yield rng.uniform(-scale, scale, dim), rng.uniform(-scale, scale, dim)


def check_nonexpansive(T, dim, pairs=100, seed=0):
    """Worst violation of ||Tx - Ty|| <= ||x - y|| over random pairs."""
    worst = -math.inf
    for x, y in _sample_pairs(dim, pairs, seed):
        worst = max(worst, norm(T(x) - T(y)) - norm(x - y))
    return worst


def check_firmly_nonexpansive(J, dim, pairs=100, seed=0):
    """Worst violation of ||Jx - Jy||^2 <= <x - y, Jx - Jy>."""
    worst = -math.inf
    for x, y in _sample_pairs(dim, pairs, seed):
        d = J(x) - J(y)
        worst = max(worst, float(d @ d) - float((x - y) @ d))
    return worst


def check_cocoercive(T, beta, dim, pairs=100, seed=0):
    """Worst violation of <x - y, Tx - Ty> >= beta * ||Tx - Ty||^2."""
    worst = -math.inf
    for x, y in _sample_pairs(dim, pairs, seed):
        d = T(x) - T(y)
        worst = max(worst, beta * float(d @ d) - float((x - y) @ d))
    return worst


def check_adjoint(L, trials=20, seed=0):
    """Worst relative defect of <Lx, y> = <x, L^T y> over random draws."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(L.in_dim)
        y = rng.standard_normal(L.out_dim)
        lhs = float(L.apply(x) @ y)
        rhs = float(x @ L.adjoint(y))
        scale = max(1.0, abs(lhs), abs(rhs))
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def check_linear(L, trials=20, seed=0):
    """Worst defect of L(a*x + b*y) = a*Lx + b*Ly over random draws."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(L.in_dim)
        y = rng.standard_normal(L.in_dim)
        a, b = rng.standard_normal(2)
        lhs = L.apply(a * x + b * y)
        rhs = a * L.apply(x) + b * L.apply(y)
        worst = max(worst, norm(lhs - rhs))
    return worst
