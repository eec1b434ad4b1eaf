"""Damped forward-backward and Douglas-Rachford solvers.

Both families inherit strong convergence to the minimum-norm solution from
the damped two-map iteration: the splitting step supplies the nonexpansive
maps, the schedule supplies the damping.  Operator-form entry points take
monotone/cocoercive operators; the prox-form entry points take proximable
functions and gradients and realize the same recursions through proxes.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import fix_gap_probe, norm, run_damped_iteration
from .operators import MonotoneOperator, CocoerciveOperator, subdifferential


@dataclass(frozen=True)
class InclusionPair:
    """One monotone inclusion 0 in A(x) + B(x) with its step size.

    B must be cocoercive; the step gamma has to stay strictly below twice
    the cocoercivity constant.
    """

    A: MonotoneOperator
    B: CocoerciveOperator
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError("step size gamma must be > 0, got %g" % self.gamma)
        if not self.gamma < 2.0 * self.B.beta:
            raise ValueError(
                "step size gamma=%g violates gamma < 2*beta (2*beta=%g)"
                % (self.gamma, 2.0 * self.B.beta)
            )


@dataclass(frozen=True)
class DrPair:
    """Two set-valued operators for 0 in A(x) + B(x), with resolvent step gamma."""

    A: MonotoneOperator
    B: MonotoneOperator
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError("step size gamma must be > 0, got %g" % self.gamma)


def _fb_map(pair):
    """Forward-backward step x -> J_{gamma A}(x - gamma * B(x))."""

    def apply(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(
            pair.A.resolvent(pair.gamma, x - pair.gamma * pair.B.apply(x)),
            dtype=float,
        )

    return apply


def _fb_theta_factor(beta, gamma):
    # averagedness of the forward-backward map: 2b/(4b - g), tending to 1/2
    # for the degenerate beta = inf slot
    if math.isinf(beta):
        return 0.5
    return 2.0 * beta / (4.0 * beta - gamma)


def fb_tikhonov(pair1, pair2, y1, schedule, config, objective_fn=None, psnr_fn=None):
    """Damped two-stage forward-backward iteration.

    Runs

        y_{n+1} = T2((1 - theta_n) e_n y_n + theta_n T1(e_n y_n))

    with Ti the forward-backward map of ``pairi``.  Converges strongly to
    the minimum-norm common zero of the two inclusions; with identical
    pairs that is the minimum-norm zero of A + B.  The relaxation must keep
    2*beta1/(4*beta1 - gamma1) * theta_n strictly below 1, which is checked
    for every n before iterating.

    Returns (y, trace).
    """
    T1 = _fb_map(pair1)
    T2 = _fb_map(pair2)
    factor = _fb_theta_factor(pair1.B.beta, pair1.gamma)

    def step(n, e, th, y):
        z = e * y
        return T2((1.0 - th) * z + th * T1(z))

    return run_damped_iteration(step, y1, schedule, config, theta_factor=factor,
                                objective_fn=objective_fn, psnr_fn=psnr_fn,
                                fix_gap_fns=(fix_gap_probe(T1), fix_gap_probe(T2)))


def fb_tikhonov_prox(f1, grad1, gamma1, y1, schedule, config,
                     f2=None, grad2=None, gamma2=None,
                     objective_fn=None, psnr_fn=None):
    """Prox form of fb_tikhonov for minimizing f(x) + g(x), g smooth.

    f1, f2 are Proximable, grad1, grad2 the gradients of the smooth parts
    as CocoerciveOperators.  The prox-form theory admits the closed step
    bound gamma <= 2*beta.  Omitted second-stage arguments default to the
    first stage (the usual single-objective setup).
    """
    if f2 is None:
        f2 = f1
    if grad2 is None:
        grad2 = grad1
    if gamma2 is None:
        gamma2 = gamma1
    for tag, g, b in (("gamma1", gamma1, grad1.beta), ("gamma2", gamma2, grad2.beta)):
        if not g > 0.0:
            raise ValueError("%s must be > 0, got %g" % (tag, g))
        if not g <= 2.0 * b:
            raise ValueError(
                "%s=%g violates gamma <= 2*beta (2*beta=%g)" % (tag, g, 2.0 * b)
            )

    def stage(f, grad, gamma):
        def apply(x):
            return np.asarray(
                f.prox(gamma, x - gamma * grad.apply(x)), dtype=float
            )

        return apply

    T1 = stage(f1, grad1, gamma1)
    T2 = stage(f2, grad2, gamma2)
    factor = _fb_theta_factor(grad1.beta, gamma1)

    def step(n, e, th, y):
        z = e * y
        return T2((1.0 - th) * z + th * T1(z))

    return run_damped_iteration(step, y1, schedule, config, theta_factor=factor,
                                objective_fn=objective_fn, psnr_fn=psnr_fn,
                                fix_gap_fns=(fix_gap_probe(T1), fix_gap_probe(T2)))


def dr_tikhonov(pair, x1, schedule, config, objective_fn=None, psnr_fn=None):
    """Damped Douglas-Rachford iteration on the governing sequence x_n.

    One sweep computes

        y_n = J_{gamma B}(e_n x_n)
        z_n = J_{gamma A}(2 y_n - e_n x_n)
        u_n = e_n x_n + theta_n (z_n - y_n)
        x_{n+1} = (2 J_{gamma A} - Id)(2 J_{gamma B} - Id) u_n

    x_n converges in norm to the minimum-norm fixed point of the composed
    reflections, and the shadows y_n, z_n to a zero of A + B.  theta may
    range up to (but not including) 2.  The trace records the shadow gap
    ||z_n - y_n|| alongside the x-residual; the objective and psnr
    callbacks are evaluated at the shadow of the current iterate.

    Returns (x, y, z, trace) where y = J_{gamma B}(x) and
    z = J_{gamma A}(2y - x) are the final shadows.
    """
    gamma = pair.gamma

    def JB(x):
        return np.asarray(pair.B.resolvent(gamma, x), dtype=float)

    def JA(x):
        return np.asarray(pair.A.resolvent(gamma, x), dtype=float)

    def step(n, e, th, x):
        z0 = e * x
        y = JB(z0)
        z = JA(2.0 * y - z0)
        u = z0 + th * (z - y)
        w = 2.0 * JB(u) - u
        x_next = 2.0 * JA(w) - w
        return x_next, norm(z - y)

    obj = None if objective_fn is None else (lambda x: objective_fn(JB(x)))
    qual = None if psnr_fn is None else (lambda x: psnr_fn(JB(x)))
    x_fin, trace = run_damped_iteration(step, x1, schedule, config,
                                        theta_factor=0.5,
                                        objective_fn=obj, psnr_fn=qual)
    y_fin = JB(x_fin)
    z_fin = JA(2.0 * y_fin - x_fin)
    return x_fin, y_fin, z_fin, trace


def dr_tikhonov_prox(f, g, gamma, x1, schedule, config,
                     objective_fn=None, psnr_fn=None):
    """Prox form of dr_tikhonov for minimizing f(x) + g(x).

    g supplies the first resolvent (the shadow y_n lives on the g side),
    f the second.  When both functions carry values the objective
    f(y) + g(y) is logged at the shadow automatically.
    """
    pair = DrPair(A=subdifferential(f), B=subdifferential(g), gamma=gamma)
    if objective_fn is None and f.value is not None and g.value is not None:
        def objective_fn(y):
            return f.value(y) + g.value(y)
    return dr_tikhonov(pair, x1, schedule, config,
                       objective_fn=objective_fn, psnr_fn=psnr_fn)
